//! Committor (hitting-probability) solvers.
//!
//! `h_{A,B}(z)` — the probability of hitting A before B from z — is computed
//! three ways: a direct dense solve at a concrete ε, a Newton-refined solve
//! seeded by the ε = 0 inverse, and a monomial fixed point that is exact up
//! to asymptotic equivalence whenever the target set admits no asymptotic
//! dynamical traps. Trap detection itself is a reachability question on the
//! exponent-0 graph.

use num_rational::Ratio;
use serde::Serialize;
use std::collections::BTreeSet;

use crate::algebra::{Exponent, PerturbedValue};
use crate::chain::PerturbedChain;
use crate::error::{Error, Result};
use crate::linalg::{condition_inf, solve, Mat};

/// Condition-estimate threshold above which the direct solve refuses to
/// answer and refers the caller to the trap-lifting path.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Provenance of a committor field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Direct,
    Newton,
    Monomial,
    Lifted,
}

/// Asymptotic-track committor: one monomial per state, 1 on the target set
/// and 0 on the avoided set.
#[derive(Debug, Clone)]
pub struct CommittorField {
    pub target: Vec<usize>,
    pub avoid: Vec<usize>,
    pub values: Vec<PerturbedValue>,
    pub method: SolveMethod,
}

/// Numeric-track committor at a fixed ε.
#[derive(Debug, Clone)]
pub struct NumericCommittor {
    pub target: Vec<usize>,
    pub avoid: Vec<usize>,
    pub eps: f64,
    pub values: Vec<f64>,
    pub condition_estimate: f64,
}

fn checked_sets(chain: &PerturbedChain, a: &[usize], b: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let a: BTreeSet<usize> = a.iter().copied().collect();
    let b: BTreeSet<usize> = b.iter().copied().collect();
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("target and avoided sets must be nonempty".into()));
    }
    if let Some(&s) = a.iter().chain(b.iter()).find(|&&s| s >= chain.n_states()) {
        return Err(Error::InvalidArgument(format!("state index {s} out of range")));
    }
    if a.intersection(&b).next().is_some() {
        return Err(Error::InvalidArgument("target and avoided sets must be disjoint".into()));
    }
    Ok((a.into_iter().collect(), b.into_iter().collect()))
}

/// States with no exponent-0 path into `targets`: the asymptotic dynamical
/// traps with respect to that set. Computed by reverse reachability over the
/// relevant graph; states inside `targets` are never traps.
pub fn detect_traps(chain: &PerturbedChain, targets: &[usize]) -> Vec<usize> {
    let n = chain.n_states();
    let rel = chain.relevant_adjacency();
    let mut reverse = vec![Vec::new(); n];
    for (from, tos) in rel.iter().enumerate() {
        for &to in tos {
            reverse[to].push(from);
        }
    }
    let mut reaches = vec![false; n];
    let mut stack: Vec<usize> = targets.iter().copied().filter(|&s| s < n).collect();
    for &s in &stack {
        reaches[s] = true;
    }
    while let Some(v) = stack.pop() {
        for &u in &reverse[v] {
            if !reaches[u] {
                reaches[u] = true;
                stack.push(u);
            }
        }
    }
    (0..n).filter(|&s| !reaches[s]).collect()
}

struct AssembledSystem {
    interior: Vec<usize>,
    matrix: Mat,
    rhs: Vec<f64>,
}

/// Builds (I − P̄) and the target-mass right-hand side on the interior.
/// The diagonal is assembled as the sum of off-diagonal row entries, never
/// as 1 − p(x,x), so tiny escape rates keep full relative accuracy.
fn assemble_numeric(chain: &PerturbedChain, a: &[usize], b: &[usize], eps: f64) -> Result<AssembledSystem> {
    let n = chain.n_states();
    let p = chain.evaluate_dense(eps)?;
    let in_c: Vec<bool> = {
        let mut v = vec![false; n];
        for &s in a.iter().chain(b.iter()) {
            v[s] = true;
        }
        v
    };
    let interior: Vec<usize> = (0..n).filter(|&s| !in_c[s]).collect();
    let pos: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for (i, &s) in interior.iter().enumerate() {
            v[s] = Some(i);
        }
        v
    };
    let m = interior.len();
    let mut matrix = Mat::zeros(m);
    let mut rhs = vec![0.0; m];
    for (i, &s) in interior.iter().enumerate() {
        let mut offdiag_sum = 0.0;
        for t in 0..n {
            if t == s {
                continue;
            }
            let v = p.get(s, t);
            offdiag_sum += v;
            if let Some(j) = pos[t] {
                matrix.add_to(i, j, -v);
            }
        }
        matrix.add_to(i, i, offdiag_sum);
        rhs[i] = a.iter().map(|&t| p.get(s, t)).sum();
    }
    Ok(AssembledSystem { interior, matrix, rhs })
}

fn extend_field(n: usize, a: &[usize], b: &[usize], interior: &[usize], h: &[f64]) -> Vec<f64> {
    let mut values = vec![0.0; n];
    for &s in a {
        values[s] = 1.0;
    }
    for &s in b {
        values[s] = 0.0;
    }
    for (i, &s) in interior.iter().enumerate() {
        values[s] = h[i];
    }
    values
}

/// Condition estimate of (I − P̄) for the committor system, without the
/// solvability threshold. Used for diagnostics and trend tests.
pub fn committor_condition(chain: &PerturbedChain, a: &[usize], b: &[usize], eps: f64) -> Result<f64> {
    let (a, b) = checked_sets(chain, a, b)?;
    let sys = assemble_numeric(chain, &a, &b, eps)?;
    condition_inf(&sys.matrix)
}

/// Direct dense committor solve at a concrete ε.
pub fn solve_committor_numeric(
    chain: &PerturbedChain,
    a: &[usize],
    b: &[usize],
    eps: f64,
) -> Result<NumericCommittor> {
    let (a, b) = checked_sets(chain, a, b)?;
    let sys = assemble_numeric(chain, &a, &b, eps)?;
    if sys.interior.is_empty() {
        return Ok(NumericCommittor {
            values: extend_field(chain.n_states(), &a, &b, &[], &[]),
            target: a,
            avoid: b,
            eps,
            condition_estimate: 1.0,
        });
    }
    let condition_estimate = condition_inf(&sys.matrix)?;
    if condition_estimate > CONDITION_LIMIT {
        return Err(Error::IllConditioned { estimate: condition_estimate, threshold: CONDITION_LIMIT });
    }
    let h = solve(&sys.matrix, &sys.rhs)?;
    Ok(NumericCommittor {
        values: extend_field(chain.n_states(), &a, &b, &sys.interior, &h),
        target: a,
        avoid: b,
        eps,
        condition_estimate,
    })
}

/// Outcome of the Newton inverse refinement.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub inverse: Mat,
    pub iterations: usize,
    /// ‖I − B_k·A_ε‖_∞ after each recorded step, starting with the seed.
    pub residuals: Vec<f64>,
}

fn newton_residual(b: &Mat, a_eps: &Mat) -> f64 {
    Mat::identity(a_eps.n()).sub(&b.matmul(a_eps)).norm_inf()
}

/// Quadratically convergent inverse refinement B ← 2B − B·A_ε·B seeded with
/// the exact ε = 0 inverse. Errors out if the first step fails to contract.
pub fn newton_inverse(a0_inv: &Mat, a_eps: &Mat, tol: f64, max_iter: usize) -> Result<NewtonOutcome> {
    if a0_inv.n() != a_eps.n() {
        return Err(Error::InvalidArgument("dimension mismatch in newton_inverse".into()));
    }
    let mut b = a0_inv.clone();
    let mut residuals = vec![newton_residual(&b, a_eps)];
    if residuals[0] < tol {
        return Ok(NewtonOutcome { inverse: b, iterations: 0, residuals });
    }
    for k in 0..max_iter {
        let next = b.scale(2.0).sub(&b.matmul(a_eps).matmul(&b));
        let r = newton_residual(&next, a_eps);
        residuals.push(r);
        if k == 0 && r >= residuals[0] {
            return Err(Error::NewtonNotContracting);
        }
        b = next;
        if r < tol {
            return Ok(NewtonOutcome { inverse: b, iterations: k + 1, residuals });
        }
    }
    let last = *residuals.last().unwrap();
    Err(Error::NewtonMaxIter { max_iter, residual: last })
}

const FIXED_POINT_COEFF_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_SWEEPS: usize = 1_000_000;

/// Monomial fixed point h ← r + P̄h, valid when no state is a trap with
/// respect to A ∪ B. Only nonnegative additions and multiplications occur,
/// so every value is the exact leading order of the true committor.
///
/// Exponents stabilize because minimal path exponents are attained by simple
/// paths; once they have, the exponent-0 escape mass guaranteed by the
/// no-trap condition makes the coefficient accumulation geometric.
pub fn solve_committor_monomial(
    chain: &PerturbedChain,
    a: &[usize],
    b: &[usize],
) -> Result<CommittorField> {
    let (a, b) = checked_sets(chain, a, b)?;
    let c: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    let traps = detect_traps(chain, &c);
    if !traps.is_empty() {
        return Err(Error::TrapPresent {
            states: traps.iter().map(|&s| chain.label(s).to_string()).collect(),
        });
    }

    let n = chain.n_states();
    let in_c: Vec<bool> = {
        let mut v = vec![false; n];
        for &s in &c {
            v[s] = true;
        }
        v
    };
    let interior: Vec<usize> = (0..n).filter(|&s| !in_c[s]).collect();
    let a_set: BTreeSet<usize> = a.iter().copied().collect();

    let mut r = vec![PerturbedValue::zero(); n];
    let mut diag = vec![PerturbedValue::zero(); n];
    for &s in &interior {
        for (t, v) in chain.out_edges(s) {
            if a_set.contains(t) {
                r[s] = r[s].add(v);
            }
        }
        let d = chain.diag_limit_coeff(s);
        if d > 0.0 {
            diag[s] = PerturbedValue::monomial(d, Ratio::from_integer(0))?;
        }
    }

    let mut h = vec![PerturbedValue::zero(); n];
    for &s in &a {
        h[s] = PerturbedValue::one();
    }

    let mut stable_exponent_sweeps = 0usize;
    let mut sweeps = 0usize;
    loop {
        sweeps += 1;
        if sweeps > FIXED_POINT_MAX_SWEEPS {
            return Err(Error::FixedPointDiverged { sweeps });
        }
        let mut next = h.clone();
        let mut exponents_changed = false;
        let mut max_rel_coeff_change = 0.0f64;
        for &s in &interior {
            let mut acc = r[s];
            for (t, v) in chain.out_edges(s) {
                if !in_c[*t] {
                    acc = acc.add(&v.mul(&h[*t]));
                }
            }
            acc = acc.add(&diag[s].mul(&h[s]));
            let old = h[s];
            match (old.is_zero(), acc.is_zero()) {
                (true, true) => {}
                (true, false) | (false, true) => exponents_changed = true,
                (false, false) => {
                    if old.exp() != acc.exp() {
                        exponents_changed = true;
                    } else {
                        let rel = (acc.coeff() - old.coeff()).abs() / old.coeff();
                        max_rel_coeff_change = max_rel_coeff_change.max(rel);
                    }
                }
            }
            next[s] = acc;
        }
        h = next;
        if exponents_changed {
            stable_exponent_sweeps = 0;
        } else {
            stable_exponent_sweeps += 1;
        }
        if stable_exponent_sweeps >= n.max(1) && max_rel_coeff_change < FIXED_POINT_COEFF_TOL {
            break;
        }
    }

    Ok(CommittorField { target: a, avoid: b, values: h, method: SolveMethod::Monomial })
}

/// The additive lattice generated by a set of entry exponents, truncated at a
/// total combination degree. Fitted slopes snap to the nearest lattice point.
#[derive(Debug, Clone)]
pub struct ExponentLattice {
    points: Vec<Exponent>,
}

const LATTICE_VALUE_CAP: i64 = 2_000_000;

impl ExponentLattice {
    pub fn from_exponents<'a, I: IntoIterator<Item = &'a Exponent>>(exponents: I, max_degree: usize) -> Self {
        let mut exps: Vec<Exponent> = exponents
            .into_iter()
            .copied()
            .filter(|e| *e > Ratio::from_integer(0))
            .collect();
        exps.sort();
        exps.dedup();
        let mut points = vec![Ratio::from_integer(0)];
        if !exps.is_empty() {
            let mut denom: i64 = 1;
            for e in &exps {
                denom = lcm(denom, *e.denom());
            }
            let values: Vec<i64> = exps.iter().map(|e| e.numer() * (denom / e.denom())).collect();
            let max_v = *values.iter().max().unwrap();
            let bound = (max_v.saturating_mul(max_degree as i64)).min(LATTICE_VALUE_CAP);
            let mut min_pieces = vec![usize::MAX; (bound + 1) as usize];
            min_pieces[0] = 0;
            for s in 1..=bound {
                for &v in &values {
                    if v <= s && min_pieces[(s - v) as usize] != usize::MAX {
                        let cand = min_pieces[(s - v) as usize] + 1;
                        if cand < min_pieces[s as usize] {
                            min_pieces[s as usize] = cand;
                        }
                    }
                }
            }
            for s in 1..=bound {
                if min_pieces[s as usize] <= max_degree {
                    points.push(Ratio::new(s, denom));
                }
            }
        }
        ExponentLattice { points }
    }

    /// Lattice for a chain's entry exponents with the standard 4·|S| cap.
    pub fn for_chain(chain: &PerturbedChain) -> Self {
        let exps = chain.exponent_set();
        Self::from_exponents(exps.iter(), 4 * chain.n_states())
    }

    pub fn nearest(&self, x: f64) -> Option<(Exponent, f64)> {
        self.points
            .iter()
            .map(|&p| {
                let pf = *p.numer() as f64 / *p.denom() as f64;
                (p, (pf - x).abs())
            })
            .min_by(|l, r| l.1.total_cmp(&r.1))
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    fn gcd(mut a: i64, mut b: i64) -> i64 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a.abs()
    }
    (a / gcd(a, b)).saturating_mul(b)
}

/// Exponent resulting from a log-log fit: either snapped to the lattice or
/// reported raw when nothing lies within the snapping tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnappedExponent {
    Snapped(Exponent),
    Unsnapped(f64),
}

#[derive(Debug, Clone)]
pub struct OrderFit {
    pub coeff: f64,
    pub exponent: SnappedExponent,
    pub raw_slope: f64,
    pub max_log_residual: f64,
}

impl OrderFit {
    /// The fitted monomial, when the exponent snapped.
    pub fn value(&self) -> Option<PerturbedValue> {
        match self.exponent {
            SnappedExponent::Snapped(e) => Some(PerturbedValue::monomial(self.coeff, e).expect("positive fit coeff")),
            SnappedExponent::Unsnapped(_) => None,
        }
    }
}

pub const SNAP_TOL: f64 = 0.05;
pub const FIT_RESIDUAL_TOL: f64 = 0.1;

/// Least-squares fit of log value against log ε, snapped to the exponent
/// lattice. Requires at least three positive samples on a strictly
/// decreasing ladder.
pub fn extract_order(samples: &[(f64, f64)], lattice: &ExponentLattice) -> Result<OrderFit> {
    if samples.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 samples".into()));
    }
    for w in samples.windows(2) {
        if w[1].0 >= w[0].0 {
            return Err(Error::InvalidArgument("eps ladder must be strictly decreasing".into()));
        }
    }
    if samples.iter().any(|&(e, v)| !(e > 0.0 && e < 1.0) || v <= 0.0) {
        return Err(Error::InvalidArgument("samples need eps in (0,1) and values > 0".into()));
    }

    let xs: Vec<f64> = samples.iter().map(|&(e, _)| e.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let max_log_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    if max_log_residual > FIT_RESIDUAL_TOL {
        return Err(Error::OrderExtractionFailed {
            reason: format!("log-log fit residual {max_log_residual:.3} exceeds {FIT_RESIDUAL_TOL}"),
        });
    }

    match lattice.nearest(slope) {
        Some((snapped, dist)) if dist <= SNAP_TOL => {
            let k = *snapped.numer() as f64 / *snapped.denom() as f64;
            let logc = xs.iter().zip(&ys).map(|(x, y)| y - k * x).sum::<f64>() / m;
            Ok(OrderFit {
                coeff: logc.exp(),
                exponent: SnappedExponent::Snapped(snapped),
                raw_slope: slope,
                max_log_residual,
            })
        }
        _ => Ok(OrderFit {
            coeff: intercept.exp(),
            exponent: SnappedExponent::Unsnapped(slope),
            raw_slope: slope,
            max_log_residual,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{exponent, PerturbedValue as Pv};
    use crate::fixtures;

    fn idx(chain: &PerturbedChain, s: &str) -> usize {
        chain.index_of(s).unwrap()
    }

    #[test]
    fn no_traps_when_targets_meet_every_class() {
        let chain = fixtures::chain_b();
        let c = [idx(&chain, "x"), idx(&chain, "y"), idx(&chain, "z")];
        assert!(detect_traps(&chain, &c).is_empty());
    }

    #[test]
    fn traps_when_target_is_x_only() {
        let chain = fixtures::chain_b();
        let traps = detect_traps(&chain, &[idx(&chain, "x")]);
        let mut labels: Vec<&str> = traps.iter().map(|&s| chain.label(s)).collect();
        labels.sort_unstable();
        assert_eq!(labels, vec!["w", "y", "z"]);
    }

    #[test]
    fn whole_space_target_has_no_traps() {
        let chain = fixtures::chain_b();
        let all: Vec<usize> = (0..chain.n_states()).collect();
        assert!(detect_traps(&chain, &all).is_empty());
    }

    #[test]
    fn numeric_committor_on_chain_b() {
        // From w, every route reaches y before x (the z detour returns to w),
        // so the committor is exactly 1.
        let chain = fixtures::chain_b();
        let field = solve_committor_numeric(
            &chain,
            &[idx(&chain, "y")],
            &[idx(&chain, "x")],
            1e-3,
        )
        .unwrap();
        assert!((field.values[idx(&chain, "w")] - 1.0).abs() < 1e-12);
        assert!((field.values[idx(&chain, "z")] - 1.0).abs() < 1e-12);
        // Harmonicity on the interior.
        let p = chain.evaluate_dense(1e-3).unwrap();
        for s in [idx(&chain, "w"), idx(&chain, "z")] {
            let px: f64 = (0..chain.n_states()).map(|t| p.get(s, t) * field.values[t]).sum();
            assert!((px - field.values[s]).abs() < 1e-10);
        }
    }

    #[test]
    fn full_boundary_needs_no_solve() {
        let chain = fixtures::chain_two_state(1.0, 1, 1.0, 2);
        let field = solve_committor_numeric(&chain, &[0], &[1], 1e-2).unwrap();
        assert_eq!(field.values, vec![1.0, 0.0]);
        assert_eq!(field.condition_estimate, 1.0);
    }

    #[test]
    fn condition_grows_like_inverse_eps_squared_with_missing_class() {
        let chain = fixtures::chain_b();
        let a = [idx(&chain, "x")];
        let b = [idx(&chain, "y")];
        let k2 = committor_condition(&chain, &a, &b, 1e-2).unwrap();
        let k4 = committor_condition(&chain, &a, &b, 1e-4).unwrap();
        let growth = k4 / k2;
        assert!(
            (1e3..1e5).contains(&growth),
            "expected ~1e4 growth over two decades, got {growth:.3e}"
        );
    }

    #[test]
    fn ill_conditioned_direct_solve_is_refused() {
        let chain = fixtures::chain_b();
        let err = solve_committor_numeric(
            &chain,
            &[idx(&chain, "x")],
            &[idx(&chain, "y")],
            1e-6,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
    }

    #[test]
    fn newton_identity_seed_returns_immediately() {
        let a0 = Mat::from_rows(&[vec![2.0, 0.3], vec![0.1, 1.5]]);
        let a0_inv = crate::linalg::inverse(&a0).unwrap();
        let out = newton_inverse(&a0_inv, &a0, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.residuals[0] < 1e-12);
    }

    #[test]
    fn newton_scalar_recursion_matches_hand_values() {
        let a0_inv = Mat::from_rows(&[vec![0.5]]);
        let a_eps = Mat::from_rows(&[vec![2.2]]);
        let out = newton_inverse(&a0_inv, &a_eps, 1e-14, 20).unwrap();
        // B1 = 2·0.5 − 0.5·2.2·0.5 = 0.45, B2 = 0.4545, limit 1/2.2.
        assert!((out.inverse.get(0, 0) - 1.0 / 2.2).abs() < 1e-12);
        // Reconstruct the first two iterates to pin the hand values.
        let b1: f64 = 2.0 * 0.5 - 0.5 * 2.2 * 0.5;
        assert!((b1 - 0.45).abs() < 1e-15);
        let b2: f64 = 2.0 * b1 - b1 * 2.2 * b1;
        assert!((b2 - 0.4545).abs() < 1e-10);
    }

    #[test]
    fn newton_rejects_non_contracting_start() {
        // A_ε far from A_0: the first step diverges.
        let a0_inv = Mat::from_rows(&[vec![1.0]]);
        let a_eps = Mat::from_rows(&[vec![5.0]]);
        assert!(matches!(
            newton_inverse(&a0_inv, &a_eps, 1e-12, 10),
            Err(Error::NewtonNotContracting)
        ));
    }

    #[test]
    fn monomial_committor_order_one_target() {
        let chain = fixtures::chain_b();
        let field = solve_committor_monomial(
            &chain,
            &[idx(&chain, "y")],
            &[idx(&chain, "x"), idx(&chain, "z")],
        )
        .unwrap();
        assert_eq!(field.values[idx(&chain, "w")], Pv::mono(1.0, 0));
    }

    #[test]
    fn monomial_committor_order_eps_target() {
        let chain = fixtures::chain_b();
        let field = solve_committor_monomial(
            &chain,
            &[idx(&chain, "z")],
            &[idx(&chain, "x"), idx(&chain, "y")],
        )
        .unwrap();
        assert_eq!(field.values[idx(&chain, "w")], Pv::mono(1.0, 1));
    }

    #[test]
    fn monomial_committor_geometric_escape() {
        // s has an ε²-edge into the target and an exponent-0 escape of mass
        // 0.4 into the avoided state: h(s) = (1/0.4)·ε² by the geometric sum.
        let chain = PerturbedChain::from_edges(
            &["s", "a", "b"],
            &[
                ("s", "a", Pv::mono(1.0, 2)),
                ("s", "b", Pv::mono(0.4, 0)),
                ("a", "s", Pv::mono(1.0, 1)),
                ("b", "s", Pv::mono(1.0, 1)),
            ],
        )
        .unwrap();
        let field = solve_committor_monomial(&chain, &[1], &[2]).unwrap();
        let h = field.values[0];
        assert_eq!(h.exp(), exponent(2, 1));
        assert!((h.coeff() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn monomial_committor_refuses_traps() {
        let chain = fixtures::chain_b();
        let err = solve_committor_monomial(
            &chain,
            &[idx(&chain, "z")],
            &[idx(&chain, "x")],
        )
        .unwrap_err();
        match err {
            Error::TrapPresent { states } => {
                let mut s = states;
                s.sort();
                assert_eq!(s, vec!["w".to_string(), "y".to_string()]);
            }
            other => panic!("expected TrapPresent, got {other:?}"),
        }
    }

    #[test]
    fn extract_order_exact_powers() {
        let lattice = ExponentLattice::from_exponents(
            [exponent(1, 1), exponent(2, 1)].iter(),
            16,
        );
        let fit = extract_order(&[(1e-2, 1e-4), (1e-3, 1e-6), (1e-4, 1e-8)], &lattice).unwrap();
        assert_eq!(fit.exponent, SnappedExponent::Snapped(exponent(2, 1)));
        assert!((fit.coeff - 1.0).abs() < 1e-9);
    }

    #[test]
    fn extract_order_two_state_mass() {
        // μ_ε(x) = ε²/(ε+ε²) ≃ ε.
        let lattice = ExponentLattice::from_exponents([exponent(1, 1), exponent(2, 1)].iter(), 8);
        let samples: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| (e, e * e / (e + e * e)))
            .collect();
        let fit = extract_order(&samples, &lattice).unwrap();
        assert_eq!(fit.exponent, SnappedExponent::Snapped(exponent(1, 1)));
        assert!((fit.coeff - 1.0).abs() < 0.01, "coeff {}", fit.coeff);
    }

    #[test]
    fn extract_order_constant_samples() {
        let lattice = ExponentLattice::from_exponents([exponent(1, 1)].iter(), 8);
        let fit = extract_order(&[(1e-1, 0.25), (1e-2, 0.25), (1e-3, 0.25)], &lattice).unwrap();
        assert_eq!(fit.exponent, SnappedExponent::Snapped(exponent(0, 1)));
        assert!((fit.coeff - 0.25).abs() < 1e-12);
    }

    #[test]
    fn extract_order_rejects_non_power_data() {
        let lattice = ExponentLattice::from_exponents([exponent(1, 1)].iter(), 8);
        let err = extract_order(&[(1e-1, 1e-2), (1e-2, 1e-2), (1e-3, 1e-8)], &lattice).unwrap_err();
        assert!(matches!(err, Error::OrderExtractionFailed { .. }));
    }

    #[test]
    fn lattice_contains_combinations_up_to_degree() {
        let lattice = ExponentLattice::from_exponents([exponent(1, 2), exponent(2, 1)].iter(), 4);
        // 1/2 + 2 = 5/2 reachable with 2 pieces.
        let (near, d) = lattice.nearest(2.5).unwrap();
        assert_eq!(near, exponent(5, 2));
        assert!(d < 1e-12);
    }
}
