//! Metastable hierarchy: the effective chain on class representatives, its
//! reversible escape-probability companion, time rescaling, and the limiting
//! stationary distribution assembled from escape-probability ratios.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

use crate::algebra::{Order, PerturbedValue};
use crate::chain::{ergodic_decomposition, ErgodicDecomposition, PerturbedChain};
use crate::committor::solve_committor_monomial;
use crate::error::{Error, Result};
use crate::lifting::asymptotic_committor;

/// Relative tolerance for coefficient agreement checks (2%).
pub const COEFF_MATCH_TOL: f64 = 0.02;

/// Escape order P^x(τ⁺_A < τ⁺_x) up to asymptotic equivalence, by first-step
/// expansion over the committor toward A avoiding x. Traps are lifted
/// automatically.
pub fn escape_order(chain: &PerturbedChain, x: usize, targets: &[usize]) -> Result<PerturbedValue> {
    let field = asymptotic_committor(chain, targets, &[x])?.field;
    let mut acc = PerturbedValue::zero();
    for (t, v) in chain.out_edges(x) {
        acc = acc.add(&v.mul(&field.values[*t]));
    }
    Ok(acc)
}

/// Effective chain on one representative per essential class:
/// p̂(x_i,x_j) = ν_{E_i}(x_i)·(p(x_i,x_j) + Σ_{z∉S₀} p(x_i,z)·P^z(hit x_j first in S₀)).
/// S₀ meets every class, so the hitting fields come straight from the
/// well-conditioned monomial solver.
pub fn effective_chain(chain: &PerturbedChain, dec: &ErgodicDecomposition) -> Result<PerturbedChain> {
    chain.require_irreducible()?;
    let n_classes = dec.n_classes();
    if n_classes < 2 {
        return Err(Error::SingleClass);
    }
    let reps = &dec.representatives;
    let rep_set: BTreeSet<usize> = reps.iter().copied().collect();

    // One hitting field per target representative.
    let fields: Vec<Vec<PerturbedValue>> = (0..n_classes)
        .into_par_iter()
        .map(|j| {
            let a = [reps[j]];
            let b: Vec<usize> = reps.iter().copied().filter(|&r| r != reps[j]).collect();
            solve_committor_monomial(chain, &a, &b).map(|f| f.values)
        })
        .collect::<Result<Vec<_>>>()?;

    let labels: Vec<&str> = reps.iter().map(|&r| chain.label(r)).collect();
    let mut edges: Vec<(usize, usize, PerturbedValue)> = Vec::new();
    for i in 0..n_classes {
        let nu_rep = PerturbedValue::monomial(dec.nu_of(reps[i]), num_rational::Ratio::from_integer(0))?;
        for j in 0..n_classes {
            if i == j {
                continue;
            }
            let mut acc = chain.entry_or_zero(reps[i], reps[j]);
            for (z, v) in chain.out_edges(reps[i]) {
                if !rep_set.contains(z) {
                    acc = acc.add(&v.mul(&fields[j][*z]));
                }
            }
            let p_hat = nu_rep.mul(&acc);
            if !p_hat.is_zero() {
                edges.push((i, j, p_hat));
            }
        }
    }
    let owned: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    PerturbedChain::from_parts(owned, edges)
}

/// Reversible companion chain indexed by class pairs:
/// q̂(E,E′) = Σ_{x∈E} ν_E(x)²·P^x(τ⁺_{E′} < τ⁺_x).
#[derive(Debug, Clone)]
pub struct QHat {
    pub n_classes: usize,
    entries: BTreeMap<(usize, usize), PerturbedValue>,
}

impl QHat {
    pub fn get(&self, from: usize, to: usize) -> PerturbedValue {
        self.entries
            .get(&(from, to))
            .copied()
            .unwrap_or_else(PerturbedValue::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &PerturbedValue)> {
        self.entries.iter()
    }
}

pub fn reversible_chain(chain: &PerturbedChain, dec: &ErgodicDecomposition) -> Result<QHat> {
    chain.require_irreducible()?;
    let n_classes = dec.n_classes();
    if n_classes < 2 {
        return Err(Error::SingleClass);
    }
    let pairs: Vec<(usize, usize)> = (0..n_classes)
        .flat_map(|i| (0..n_classes).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let computed: Vec<((usize, usize), PerturbedValue)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut q = PerturbedValue::zero();
            for (k, &x) in dec.classes[i].iter().enumerate() {
                let nu = dec.nu[i][k];
                let nu_sq = PerturbedValue::monomial(nu * nu, num_rational::Ratio::from_integer(0))?;
                let esc = escape_order(chain, x, &dec.classes[j])?;
                q = q.add(&nu_sq.mul(&esc));
            }
            Ok(((i, j), q))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut entries = BTreeMap::new();
    for (key, v) in computed {
        if !v.is_zero() {
            entries.insert(key, v);
        }
    }
    Ok(QHat { n_classes, entries })
}

/// Rescales time so the most likely inter-state transition is order one:
/// every off-diagonal entry is divided by T = Σ_{k≠l} p̂(x_k,x_l).
/// Returns the rescaled chain and T.
pub fn rescale(p_hat: &PerturbedChain) -> Result<(PerturbedChain, PerturbedValue)> {
    let mut total = PerturbedValue::zero();
    for from in 0..p_hat.n_states() {
        for (_, v) in p_hat.out_edges(from) {
            total = total.add(v);
        }
    }
    if total.is_zero() {
        return Err(Error::NothingToRescale);
    }
    let labels: Vec<String> = p_hat.labels().to_vec();
    let mut edges = Vec::new();
    for from in 0..p_hat.n_states() {
        for (to, v) in p_hat.out_edges(from) {
            edges.push((from, *to, v.div(&total)?));
        }
    }
    Ok((PerturbedChain::from_parts(labels, edges)?, total))
}

/// One metastable time scale.
#[derive(Debug, Clone)]
pub struct HierarchyLevel {
    /// The chain whose dynamics this level describes (level 1: the input).
    pub chain: PerturbedChain,
    pub decomposition: ErgodicDecomposition,
    /// Reversible escape companion (absent on the terminal level).
    pub q_hat: Option<QHat>,
    /// Effective chain on representatives (absent on the terminal level).
    pub effective: Option<PerturbedChain>,
    /// Rescaled chain feeding the next level (absent on the terminal level).
    pub rescaled: Option<PerturbedChain>,
    /// Rescale denominator T of this level.
    pub time_scale: Option<PerturbedValue>,
    /// Product of the previous levels' T: the rate factor relating this
    /// level's steps to steps of the original chain. Level 1: 1.
    pub cumulative_scale: PerturbedValue,
    /// Original-chain states carried by each class of this level.
    pub class_original_states: Vec<BTreeSet<usize>>,
}

/// Iterates decomposition → effective chain → rescale until a single
/// essential class remains; the class count strictly decreases at each step.
/// The terminal single-class scale is included as the last level.
pub fn build_hierarchy(chain: &PerturbedChain) -> Result<Vec<HierarchyLevel>> {
    chain.require_irreducible()?;
    let mut levels: Vec<HierarchyLevel> = Vec::new();
    let mut current = chain.clone();
    // Original states carried by each current-chain state.
    let mut carried: Vec<BTreeSet<usize>> = (0..chain.n_states()).map(|s| BTreeSet::from([s])).collect();
    let mut cumulative = PerturbedValue::one();

    loop {
        if levels.len() > chain.n_states() + 1 {
            return Err(Error::Internal("hierarchy failed to terminate".into()));
        }
        let dec = ergodic_decomposition(&current)?;
        let class_original_states: Vec<BTreeSet<usize>> = dec
            .classes
            .iter()
            .map(|class| {
                class
                    .iter()
                    .flat_map(|&s| carried[s].iter().copied())
                    .collect()
            })
            .collect();

        if dec.n_classes() == 1 {
            levels.push(HierarchyLevel {
                chain: current,
                decomposition: dec,
                q_hat: None,
                effective: None,
                rescaled: None,
                time_scale: None,
                cumulative_scale: cumulative,
                class_original_states,
            });
            return Ok(levels);
        }

        let q_hat = reversible_chain(&current, &dec)?;
        let effective = effective_chain(&current, &dec)?;
        let (rescaled, t) = rescale(&effective)?;

        // Next level's states are this level's representatives.
        let next_carried: Vec<BTreeSet<usize>> = dec
            .representatives
            .iter()
            .enumerate()
            .map(|(ci, _)| class_original_states[ci].clone())
            .collect();

        let n_classes = dec.n_classes();
        levels.push(HierarchyLevel {
            chain: current,
            decomposition: dec,
            q_hat: Some(q_hat),
            effective: Some(effective),
            rescaled: Some(rescaled.clone()),
            time_scale: Some(t),
            cumulative_scale: cumulative,
            class_original_states,
        });
        cumulative = cumulative.mul(&t);
        carried = next_carried;
        current = rescaled;

        let next_classes = ergodic_decomposition(&current)?.n_classes();
        if next_classes >= n_classes {
            return Err(Error::Internal(format!(
                "class count did not decrease: {n_classes} -> {next_classes}"
            )));
        }
    }
}

/// Limiting stationary distribution.
#[derive(Debug, Clone)]
pub struct AsymptoticDistribution {
    /// Leading order of μ_ε(E) per essential class of the input chain.
    pub class_mass: Vec<PerturbedValue>,
    /// lim μ_ε(x) per state, renormalized to sum to one.
    pub per_state_limit: Vec<f64>,
    /// |Σ raw limits − 1| before renormalization.
    pub normalization_residual: f64,
}

/// Class masses via 1/μ(E) ≃ Σ_{E′} q̂(E,E′)/q̂(E′,E) (the E′ = E term is 1),
/// then per-state limits lim μ(x) = Σ_E lim μ(E)·ν_E(x); transient states
/// carry no limiting mass.
pub fn asymptotic_stationary(chain: &PerturbedChain) -> Result<AsymptoticDistribution> {
    chain.require_irreducible()?;
    let dec = ergodic_decomposition(chain)?;
    let n = chain.n_states();
    let n_classes = dec.n_classes();

    let class_mass: Vec<PerturbedValue> = if n_classes == 1 {
        vec![PerturbedValue::one()]
    } else {
        let q = reversible_chain(chain, &dec)?;
        let mut masses = Vec::with_capacity(n_classes);
        for e in 0..n_classes {
            let mut inv_mass = PerturbedValue::one();
            for other in 0..n_classes {
                if other == e {
                    continue;
                }
                let num = q.get(e, other);
                let den = q.get(other, e);
                if den.is_zero() {
                    if num.is_zero() {
                        continue;
                    }
                    // Violates irreducibility; an upstream bug, not user input.
                    return Err(Error::Internal(format!(
                        "q-hat({other},{e}) is structurally zero while q-hat({e},{other}) is not"
                    )));
                }
                inv_mass = inv_mass.add(&num.div(&den)?);
            }
            masses.push(PerturbedValue::one().div(&inv_mass)?);
        }
        masses
    };

    let mut raw = vec![0.0f64; n];
    for (ci, mass) in class_mass.iter().enumerate() {
        if mass.is_zero() || mass.exp() != num_rational::Ratio::from_integer(0) {
            continue;
        }
        for (k, &s) in dec.classes[ci].iter().enumerate() {
            raw[s] = mass.coeff() * dec.nu[ci][k];
        }
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::Internal("no class carries limiting mass".into()));
    }
    let normalization_residual = (total - 1.0).abs();
    let per_state_limit = raw.iter().map(|v| v / total).collect();
    Ok(AsymptoticDistribution { class_mass, per_state_limit, normalization_residual })
}

/// Witness of a failed metastability check.
#[derive(Debug, Clone, Serialize)]
pub struct MetastableWitness {
    /// State inside M whose escape is too fast.
    pub inside: String,
    /// Outside state whose approach it fails against (None when M = S).
    pub outside: Option<String>,
    pub escape: PerturbedValue,
    pub approach: Option<PerturbedValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetastableReport {
    pub is_metastable: bool,
    pub witness: Option<MetastableWitness>,
}

/// Checks the escape/approach criterion for a candidate metastable set M:
/// for every x ∈ M and y ∉ M the ratio
/// P^x(τ⁺_{M∖{x}} < τ⁺_x) / P^y(τ⁺_M < τ⁺_y) must vanish as ε → 0.
/// For M = S there is no outside point; the approach speed is then order one
/// by convention (reaching M takes no steps), so every escape exponent must
/// be strictly positive.
pub fn verify_metastable_set(chain: &PerturbedChain, m: &[usize]) -> Result<MetastableReport> {
    chain.require_irreducible()?;
    let m_set: BTreeSet<usize> = m.iter().copied().collect();
    if m_set.is_empty() {
        return Err(Error::InvalidArgument("metastable candidate set is empty".into()));
    }
    if let Some(&s) = m_set.iter().find(|&&s| s >= chain.n_states()) {
        return Err(Error::InvalidArgument(format!("state index {s} out of range")));
    }
    let outside: Vec<usize> = (0..chain.n_states()).filter(|s| !m_set.contains(s)).collect();

    let mut escapes: BTreeMap<usize, PerturbedValue> = BTreeMap::new();
    for &x in &m_set {
        let rest: Vec<usize> = m_set.iter().copied().filter(|&s| s != x).collect();
        let esc = if rest.is_empty() {
            PerturbedValue::zero()
        } else {
            escape_order(chain, x, &rest)?
        };
        escapes.insert(x, esc);
    }

    if outside.is_empty() {
        for (&x, esc) in &escapes {
            let fails = !esc.is_zero() && esc.exp() <= num_rational::Ratio::from_integer(0);
            if fails {
                return Ok(MetastableReport {
                    is_metastable: false,
                    witness: Some(MetastableWitness {
                        inside: chain.label(x).to_string(),
                        outside: None,
                        escape: *esc,
                        approach: None,
                    }),
                });
            }
        }
        return Ok(MetastableReport { is_metastable: true, witness: None });
    }

    let m_vec: Vec<usize> = m_set.iter().copied().collect();
    for &y in &outside {
        let approach = escape_order(chain, y, &m_vec)?;
        for (&x, esc) in &escapes {
            let ok = esc.is_zero()
                || (!approach.is_zero() && matches!(esc.order(&approach), Order::Negligible));
            if !ok {
                return Ok(MetastableReport {
                    is_metastable: false,
                    witness: Some(MetastableWitness {
                        inside: chain.label(x).to_string(),
                        outside: Some(chain.label(y).to_string()),
                        escape: *esc,
                        approach: Some(approach),
                    }),
                });
            }
        }
    }
    Ok(MetastableReport { is_metastable: true, witness: None })
}

/// Per-pair outcome of the effective-chain accuracy criterion.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxPair {
    pub from: String,
    pub to: String,
    pub q_full: PerturbedValue,
    pub escape_approx: PerturbedValue,
    pub exponents_match: bool,
    pub coeffs_match: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximationReport {
    pub pairs: Vec<ApproxPair>,
    pub all_match: bool,
}

/// Necessary accuracy condition for an approximate effective chain: its
/// escape probabilities between representatives must reproduce q̂ of the full
/// chain to leading order. Pairs whose exponent or coefficient disagree are
/// flagged.
pub fn check_approximation(
    chain: &PerturbedChain,
    approx: &PerturbedChain,
) -> Result<ApproximationReport> {
    chain.require_irreducible()?;
    let dec = ergodic_decomposition(chain)?;
    if dec.n_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let reps = &dec.representatives;
    let approx_of: Vec<usize> = reps
        .iter()
        .map(|&r| {
            approx.index_of(chain.label(r)).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "approximate chain lacks representative {:?}",
                    chain.label(r)
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if approx.n_states() != reps.len() {
        return Err(Error::InvalidArgument(
            "approximate chain must live on exactly the representative set".into(),
        ));
    }

    let q = reversible_chain(chain, &dec)?;
    let mut pairs = Vec::new();
    let mut all_match = true;
    for i in 0..reps.len() {
        for j in 0..reps.len() {
            if i == j {
                continue;
            }
            let q_full = q.get(i, j);
            let escape_approx = escape_order(approx, approx_of[i], &[approx_of[j]])?;
            let (exponents_match, coeffs_match) = match q_full.order(&escape_approx) {
                Order::BothZero => (true, true),
                Order::Comparable(ratio) => (true, (ratio - 1.0).abs() <= COEFF_MATCH_TOL),
                Order::Negligible | Order::Dominant => (false, false),
            };
            all_match &= exponents_match && coeffs_match;
            pairs.push(ApproxPair {
                from: chain.label(reps[i]).to_string(),
                to: chain.label(reps[j]).to_string(),
                q_full,
                escape_approx,
                exponents_match,
                coeffs_match,
            });
        }
    }
    Ok(ApproximationReport { pairs, all_match })
}
