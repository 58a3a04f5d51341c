//! Seeded random monomial chains for the verification suites.
//!
//! The generator builds a block structure directly: a few exponent-0
//! strongly-connected blocks (the essential classes of the limit), positive-
//! exponent edges wiring the blocks into one strongly connected chain, and
//! optionally transient states that drain into the blocks at exponent 0.
//! Load-bearing inter-block edges keep small exponents so that the finite-ε
//! oracles stay well inside f64 accuracy at ε = 1e-4; exponent-3 edges are
//! added only as decorations on top.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::algebra::PerturbedValue;
use crate::chain::PerturbedChain;

/// Tunables for the random ensemble.
#[derive(Debug, Clone)]
pub struct RandomChainConfig {
    pub max_states: usize,
    pub max_blocks: usize,
    /// Guarantee at least one block with this many states.
    pub min_multistate_block: usize,
    /// Probability of adding exponent-3 decoration edges.
    pub decoration_prob: f64,
    pub max_transient: usize,
}

impl Default for RandomChainConfig {
    fn default() -> Self {
        RandomChainConfig {
            max_states: 8,
            max_blocks: 3,
            min_multistate_block: 0,
            decoration_prob: 0.3,
            max_transient: 2,
        }
    }
}

impl RandomChainConfig {
    /// Ensemble with a guaranteed multi-state essential class.
    pub fn with_multistate_class() -> Self {
        RandomChainConfig { min_multistate_block: 2, ..Default::default() }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One random irreducibly perturbed monomial chain. Entry exponents are at
/// most 3; exponent-0 rows keep total coefficient mass ≤ 0.9 and positive
/// exponent coefficients stay small enough that eps_max ≥ 0.1.
pub fn random_chain(rng: &mut ChaCha8Rng, cfg: &RandomChainConfig) -> PerturbedChain {
    for _ in 0..200 {
        if let Some(chain) = try_random_chain(rng, cfg) {
            if chain.is_strongly_connected() && chain.eps_max() >= 0.1 {
                return chain;
            }
        }
    }
    panic!("random chain generation failed to produce a valid instance");
}

fn try_random_chain(rng: &mut ChaCha8Rng, cfg: &RandomChainConfig) -> Option<PerturbedChain> {
    let n_blocks = rng.gen_range(1..=cfg.max_blocks.min(3));
    let mut block_sizes = Vec::with_capacity(n_blocks);
    let mut used = 0usize;
    for b in 0..n_blocks {
        let remaining_blocks = n_blocks - b - 1;
        let budget = cfg.max_states.saturating_sub(used + remaining_blocks + cfg.max_transient);
        let min_size = if b == 0 { cfg.min_multistate_block.max(1) } else { 1 };
        if budget < min_size {
            return None;
        }
        let size = rng.gen_range(min_size..=min_size.max(budget.min(3)));
        block_sizes.push(size);
        used += size;
    }
    let n_transient = rng.gen_range(0..=cfg.max_transient.min(cfg.max_states - used));
    let n = used + n_transient;

    let labels: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut next = 0usize;
    for &size in &block_sizes {
        blocks.push((next..next + size).collect());
        next += size;
    }
    let transients: Vec<usize> = (next..n).collect();

    let mut edges: Vec<(usize, usize, PerturbedValue)> = Vec::new();
    let mut present = std::collections::BTreeSet::new();
    let push = |edges: &mut Vec<(usize, usize, PerturbedValue)>,
                    present: &mut std::collections::BTreeSet<(usize, usize)>,
                    from: usize,
                    to: usize,
                    v: PerturbedValue| {
        if from != to && present.insert((from, to)) {
            edges.push((from, to, v));
        }
    };

    // Exponent-0 cycles make each block a relevant SCC; occasional chords.
    let mut zero_mass = vec![0.0f64; n];
    for block in &blocks {
        if block.len() == 1 {
            continue;
        }
        for (i, &s) in block.iter().enumerate() {
            let t = block[(i + 1) % block.len()];
            let c = rng.gen_range(0.2..0.5);
            push(&mut edges, &mut present, s, t, PerturbedValue::mono(c, 0));
            zero_mass[s] += c;
        }
        for &s in block {
            for &t in block {
                if s != t && rng.gen_bool(0.3) && zero_mass[s] < 0.7 {
                    let c = rng.gen_range(0.05..0.2);
                    push(&mut edges, &mut present, s, t, PerturbedValue::mono(c, 0));
                    zero_mass[s] += c;
                }
            }
        }
    }

    // A positive-exponent cycle over the blocks keeps the chain irreducible;
    // extra low-exponent links and rare exponent-3 decorations on top.
    if blocks.len() > 1 {
        for b in 0..blocks.len() {
            let from = *blocks[b].choose(rng).unwrap();
            let to = *blocks[(b + 1) % blocks.len()].choose(rng).unwrap();
            let exp = rng.gen_range(1..=2);
            let c = rng.gen_range(0.1..1.0);
            push(&mut edges, &mut present, from, to, PerturbedValue::mono(c, exp));
        }
        for _ in 0..rng.gen_range(0..=3) {
            let b1 = rng.gen_range(0..blocks.len());
            let b2 = rng.gen_range(0..blocks.len());
            if b1 == b2 {
                continue;
            }
            let from = *blocks[b1].choose(rng).unwrap();
            let to = *blocks[b2].choose(rng).unwrap();
            let exp = rng.gen_range(1..=2);
            let c = rng.gen_range(0.1..1.0);
            push(&mut edges, &mut present, from, to, PerturbedValue::mono(c, exp));
        }
    }
    if rng.gen_bool(cfg.decoration_prob) && n >= 2 {
        let from = rng.gen_range(0..n);
        let to = rng.gen_range(0..n);
        let c = rng.gen_range(0.1..1.0);
        push(&mut edges, &mut present, from, to, PerturbedValue::mono(c, 3));
    }

    // Transient states drain into a block at exponent 0 and are fed at
    // positive exponent, so they stay outside every essential class.
    for &t in &transients {
        let target = *blocks.choose(rng).unwrap().choose(rng).unwrap();
        let c = rng.gen_range(0.2..0.6);
        push(&mut edges, &mut present, t, target, PerturbedValue::mono(c, 0));
        zero_mass[t] += c;
        let feeder = *blocks.choose(rng).unwrap().choose(rng).unwrap();
        let exp = rng.gen_range(1..=2);
        push(&mut edges, &mut present, feeder, t, PerturbedValue::mono(rng.gen_range(0.1..0.8), exp));
        if rng.gen_bool(0.5) {
            let other = rng.gen_range(0..n);
            if other != t {
                push(&mut edges, &mut present, t, other, PerturbedValue::mono(rng.gen_range(0.1..0.5), rng.gen_range(1..=2)));
            }
        }
    }

    PerturbedChain::from_parts(labels, edges).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ergodic_decomposition;

    #[test]
    fn generated_chains_are_valid_and_reproducible() {
        let cfg = RandomChainConfig::default();
        let mut rng1 = seeded_rng(42);
        let mut rng2 = seeded_rng(42);
        for _ in 0..20 {
            let a = random_chain(&mut rng1, &cfg);
            let b = random_chain(&mut rng2, &cfg);
            assert_eq!(a.to_json_value(), b.to_json_value());
            assert!(a.validate().is_ok());
            assert!(a.eps_max() >= 0.1);
            let dec = ergodic_decomposition(&a).unwrap();
            let covered: usize =
                dec.classes.iter().map(|c| c.len()).sum::<usize>() + dec.transient.len();
            assert_eq!(covered, a.n_states());
        }
    }

    #[test]
    fn multistate_ensemble_has_a_multistate_class() {
        let cfg = RandomChainConfig::with_multistate_class();
        let mut rng = seeded_rng(7);
        for _ in 0..10 {
            let chain = random_chain(&mut rng, &cfg);
            let dec = ergodic_decomposition(&chain).unwrap();
            assert!(
                dec.classes.iter().any(|c| c.len() >= 2),
                "no multi-state class in {:?}",
                chain.labels()
            );
        }
    }
}
