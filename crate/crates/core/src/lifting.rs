//! Trap lifting: collapsing an essential class of the limit chain into a
//! single super-state whose exit row is the ν-weighted, normalized exit
//! distribution. Committors toward sets disjoint from the class are preserved
//! up to asymptotic equivalence, which turns ill-conditioned committor
//! problems into well-conditioned ones after finitely many lifts.

use serde::Serialize;

use crate::algebra::PerturbedValue;
use crate::chain::{ergodic_decomposition, PerturbedChain};
use crate::committor::{solve_committor_monomial, CommittorField, SolveMethod};
use crate::error::{Error, Result};

/// One lift: which pre-lift states were absorbed, which original states they
/// carry, and the normalization Z_ε(E) of the new exit row.
#[derive(Debug, Clone)]
pub struct LiftStep {
    /// Pass of the recursion this lift belongs to (1-based).
    pub pass: usize,
    /// Label given to the super-state.
    pub label: String,
    /// Members of the lifted class, as indices in the pre-lift chain.
    pub members: Vec<usize>,
    /// Original-chain states carried by the super-state.
    pub absorbed_original: Vec<usize>,
    /// Exit normalization Z_ε(E).
    pub z: PerturbedValue,
    /// Pre-lift index → post-lift index (None for lifted members).
    map: Vec<Option<usize>>,
    /// Post-lift index of the super-state.
    super_index: usize,
}

/// Full lift history of one committor computation.
#[derive(Debug, Clone, Default)]
pub struct LiftLog {
    pub steps: Vec<LiftStep>,
    pub passes: usize,
    /// (essential classes, transient states) at the start of each pass;
    /// strictly decreasing lexicographically.
    pub metrics: Vec<(usize, usize)>,
}

/// Serializable summary for CLI diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct LiftSummary {
    pub pass: usize,
    pub super_state: String,
    pub absorbed: Vec<String>,
    pub z: PerturbedValue,
}

impl LiftLog {
    pub fn summaries(&self, original: &PerturbedChain) -> Vec<LiftSummary> {
        self.steps
            .iter()
            .map(|s| LiftSummary {
                pass: s.pass,
                super_state: s.label.clone(),
                absorbed: s
                    .absorbed_original
                    .iter()
                    .map(|&i| original.label(i).to_string())
                    .collect(),
                z: s.z,
            })
            .collect()
    }
}

/// Replaces an essential class E by one super-state. Entries not touching E
/// are kept; rows into E are summed; the exit row is (1/Z)·Σ ν_E(z)p(z,·)
/// with p̃(E,E) = 0. All arithmetic stays in the monomial algebra, so the
/// result is exact up to asymptotic equivalence, and the exit row's
/// exponent-0 coefficients sum to one by construction (a tight row, hence
/// exactly stochastic at every evaluated ε).
pub fn lift_class(
    chain: &PerturbedChain,
    class: &[usize],
    nu: &[f64],
) -> Result<(PerturbedChain, LiftStep)> {
    let n = chain.n_states();
    if class.len() == n {
        return Err(Error::LiftWholeSpace);
    }
    if class.is_empty() || class.len() != nu.len() {
        return Err(Error::InvalidArgument("class and nu must be nonempty and aligned".into()));
    }
    let mut in_class = vec![false; n];
    for &s in class {
        in_class[s] = true;
    }

    // Z_ε(E) = Σ_{z∈E, y∉E} ν(z) p(z,y).
    let mut z_norm = PerturbedValue::zero();
    for (k, &s) in class.iter().enumerate() {
        let weight = nu[k];
        for (t, v) in chain.out_edges(s) {
            if !in_class[*t] {
                let w = PerturbedValue::monomial(weight, num_rational::Ratio::from_integer(0))?;
                z_norm = z_norm.add(&w.mul(v));
            }
        }
    }
    if z_norm.is_zero() {
        return Err(Error::NoClassExit);
    }

    // Survivors keep their order; the super-state goes last.
    let mut map: Vec<Option<usize>> = vec![None; n];
    let mut new_labels: Vec<String> = Vec::with_capacity(n - class.len() + 1);
    for s in 0..n {
        if !in_class[s] {
            map[s] = Some(new_labels.len());
            new_labels.push(chain.label(s).to_string());
        }
    }
    let super_index = new_labels.len();
    let base: String = class
        .iter()
        .map(|&s| chain.label(s))
        .collect::<Vec<_>>()
        .join("_");
    let label = chain.fresh_label(&format!("lump_{base}"));
    new_labels.push(label.clone());

    let mut edges: Vec<(usize, usize, PerturbedValue)> = Vec::new();
    let mut into_super: Vec<PerturbedValue> = vec![PerturbedValue::zero(); super_index];
    for s in 0..n {
        if in_class[s] {
            continue;
        }
        let si = map[s].unwrap();
        for (t, v) in chain.out_edges(s) {
            if in_class[*t] {
                into_super[si] = into_super[si].add(v);
            } else {
                edges.push((si, map[*t].unwrap(), *v));
            }
        }
    }
    for (si, v) in into_super.into_iter().enumerate() {
        if !v.is_zero() {
            edges.push((si, super_index, v));
        }
    }
    // Exit row of the super-state.
    let mut exit: Vec<PerturbedValue> = vec![PerturbedValue::zero(); super_index];
    for (k, &s) in class.iter().enumerate() {
        let weight = PerturbedValue::monomial(nu[k], num_rational::Ratio::from_integer(0))?;
        for (t, v) in chain.out_edges(s) {
            if !in_class[*t] {
                let ti = map[*t].unwrap();
                exit[ti] = exit[ti].add(&weight.mul(v));
            }
        }
    }
    for (ti, num) in exit.into_iter().enumerate() {
        if !num.is_zero() {
            edges.push((super_index, ti, num.div(&z_norm)?));
        }
    }

    let lifted = PerturbedChain::from_parts(new_labels, edges)?;
    let step = LiftStep {
        pass: 0,
        label,
        members: class.to_vec(),
        absorbed_original: Vec::new(),
        z: z_norm,
        map,
        super_index,
    };
    Ok((lifted, step))
}

/// Committor with full lift history, on the original state space.
#[derive(Debug, Clone)]
pub struct LiftedCommittor {
    pub field: CommittorField,
    pub log: LiftLog,
}

/// Committor up to asymptotic equivalence for arbitrary target/avoid sets.
///
/// Repeatedly: decompose the limit chain, lift every essential class that
/// misses A ∪ B (ascending representative order, re-decomposing only between
/// passes), and stop when none is left, at which point the monomial fixed
/// point is well conditioned. Unwinding assigns every absorbed state the
/// value of its super-state. Each pass strictly decreases
/// (classes, transient states) lexicographically, so the recursion ends.
pub fn asymptotic_committor(
    chain: &PerturbedChain,
    a: &[usize],
    b: &[usize],
) -> Result<LiftedCommittor> {
    let n_original = chain.n_states();
    let mut current = chain.clone();
    // Current-space index of each original state (None once absorbed).
    let mut position: Vec<Option<usize>> = (0..n_original).map(Some).collect();
    let mut a_cur: Vec<usize> = a.to_vec();
    let mut b_cur: Vec<usize> = b.to_vec();
    let mut log = LiftLog::default();

    loop {
        let dec = ergodic_decomposition(&current)?;
        let marked: Vec<usize> = {
            let mut m = vec![false; current.n_states()];
            for &s in a_cur.iter().chain(b_cur.iter()) {
                m[s] = true;
            }
            dec.classes
                .iter()
                .enumerate()
                .filter(|(_, class)| class.iter().all(|&s| !m[s]))
                .map(|(i, _)| i)
                .collect()
        };
        if marked.is_empty() {
            let inner = solve_committor_monomial(&current, &a_cur, &b_cur)?;
            let mut values = vec![PerturbedValue::zero(); n_original];
            for (orig, pos) in position.iter().enumerate() {
                // Absorbed states are filled in by the unwinding below.
                if let Some(p) = pos {
                    values[orig] = inner.values[*p];
                }
            }
            // Unwind: later steps first, so chained absorptions resolve.
            let mut current_values = inner.values;
            for step in log.steps.iter().rev() {
                let mut prev_values = vec![PerturbedValue::zero(); step.map.len()];
                for (prev, m) in step.map.iter().enumerate() {
                    prev_values[prev] = match m {
                        Some(next) => current_values[*next],
                        None => current_values[step.super_index],
                    };
                }
                current_values = prev_values;
            }
            for orig in 0..n_original {
                values[orig] = current_values[orig];
            }
            let method = if log.steps.is_empty() { SolveMethod::Monomial } else { SolveMethod::Lifted };
            return Ok(LiftedCommittor {
                field: CommittorField {
                    target: a.to_vec(),
                    avoid: b.to_vec(),
                    values,
                    method,
                },
                log,
            });
        }

        log.passes += 1;
        if log.passes > n_original + 2 {
            return Err(Error::Internal("lift recursion failed to terminate".into()));
        }
        log.metrics.push((dec.n_classes(), dec.transient.len()));

        // Classes are already ordered by smallest member; lift them in that
        // order, remapping member indices through lifts done this pass.
        let mut pass_maps: Vec<Vec<Option<usize>>> = Vec::new();
        for &ci in &marked {
            let members_now: Vec<usize> = dec.classes[ci]
                .iter()
                .map(|&s| {
                    let mut idx = Some(s);
                    for m in &pass_maps {
                        idx = idx.and_then(|i| m[i]);
                    }
                    idx.expect("disjoint classes stay present within a pass")
                })
                .collect();
            let (lifted, mut step) = lift_class(&current, &members_now, &dec.nu[ci])?;
            step.pass = log.passes;
            step.absorbed_original = (0..n_original)
                .filter(|&orig| {
                    position[orig].map(|p| members_now.contains(&p)).unwrap_or(false)
                })
                .collect();
            // Update original-state positions and the A/B index sets.
            for orig in 0..n_original {
                if let Some(p) = position[orig] {
                    position[orig] = match step.map[p] {
                        Some(np) => Some(np),
                        None => None, // absorbed into the super-state
                    };
                }
            }
            let remap = |set: &mut Vec<usize>| {
                for s in set.iter_mut() {
                    *s = step.map[*s].expect("targets are never lifted");
                }
            };
            remap(&mut a_cur);
            remap(&mut b_cur);
            pass_maps.push(step.map.clone());
            log.steps.push(step);
            current = lifted;
        }
    }
}

/// Pushes a field on a fully-lifted space back to the original states: every
/// absorbed state takes the value of its super-state. The identity log is a
/// no-op.
pub fn pushback(values_final: &[PerturbedValue], log: &LiftLog) -> Vec<PerturbedValue> {
    let mut current = values_final.to_vec();
    for step in log.steps.iter().rev() {
        let mut prev = vec![PerturbedValue::zero(); step.map.len()];
        for (i, m) in step.map.iter().enumerate() {
            prev[i] = match m {
                Some(next) => current[*next],
                None => current[step.super_index],
            };
        }
        current = prev;
    }
    current
}
