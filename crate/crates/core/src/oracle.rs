//! Finite-ε brute-force oracles. Everything here works on the evaluated
//! stochastic matrix with its own first-step assemblies, independent of the
//! asymptotic (monomial) track it is used to validate; only the low-level LU
//! kernel is shared.

use std::collections::{BTreeMap, HashMap};

use crate::chain::{restricted_stationary, ErgodicDecomposition, PerturbedChain};
use crate::error::{Error, Result};
use crate::linalg::{condition_inf, lu_factor, solve, Mat};

/// Direct stationary solve μP = μ with a normalization row.
#[derive(Debug, Clone)]
pub struct StationarySolve {
    pub values: Vec<f64>,
    pub condition_estimate: f64,
    /// Set when the condition estimate exceeds 1e12 — the regime where the
    /// direct eigenproblem stops being trustworthy.
    pub ill_conditioned: bool,
}

pub fn stationary_direct(chain: &PerturbedChain, eps: f64) -> Result<StationarySolve> {
    chain.require_irreducible()?;
    let p = chain.evaluate_dense(eps)?;
    let n = p.n();
    let mut m = p.transpose();
    for i in 0..n {
        m.add_to(i, i, -1.0);
    }
    for j in 0..n {
        m.set(n - 1, j, 1.0);
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let condition_estimate = condition_inf(&m)?;
    let mu = solve(&m, &b)?;
    let total: f64 = mu.iter().sum();
    let values: Vec<f64> = mu.iter().map(|v| v / total).collect();

    let mut residual = 0.0f64;
    for j in 0..n {
        let flow: f64 = (0..n).map(|i| values[i] * p.get(i, j)).sum();
        residual = residual.max((flow - values[j]).abs());
    }
    if residual >= 1e-12 {
        return Err(Error::Internal(format!(
            "stationary residual {residual:e} exceeds 1e-12"
        )));
    }
    Ok(StationarySolve {
        values,
        ill_conditioned: condition_estimate > 1e12,
        condition_estimate,
    })
}

pub const TREE_ORACLE_MAX_STATES: usize = 8;

/// Markov-chain tree theorem by explicit enumeration: μ(x) is proportional
/// to the total weight of directed spanning trees rooted at x, each weight
/// the product of its edge probabilities. Exponentially expensive, hence the
/// size guard; structurally independent of any linear solve.
pub fn stationary_tree(chain: &PerturbedChain, eps: f64) -> Result<Vec<f64>> {
    chain.require_irreducible()?;
    let n = chain.n_states();
    if n > TREE_ORACLE_MAX_STATES {
        return Err(Error::SizeGuard { what: "stationary_tree", max: TREE_ORACLE_MAX_STATES, got: n });
    }
    let p = chain.evaluate_dense(eps)?;
    let mut weights = vec![0.0f64; n];
    let mut parent = vec![usize::MAX; n];

    // Assign each non-root vertex its tree edge in order; reject assignments
    // that close a cycle among assigned vertices. The running product is
    // carried down the recursion.
    fn closes_cycle(parent: &[usize], start: usize, candidate_target: usize, root: usize) -> bool {
        let mut v = candidate_target;
        while v != root && v != usize::MAX {
            if v == start {
                return true;
            }
            v = parent[v];
        }
        false
    }
    fn assign(
        vertices: &[usize],
        k: usize,
        root: usize,
        p: &Mat,
        parent: &mut [usize],
        product: f64,
        total: &mut f64,
    ) {
        if k == vertices.len() {
            *total += product;
            return;
        }
        let v = vertices[k];
        for t in 0..p.n() {
            if t == v {
                continue;
            }
            let w = p.get(v, t);
            if w <= 0.0 {
                continue;
            }
            if closes_cycle(parent, v, t, root) {
                continue;
            }
            parent[v] = t;
            assign(vertices, k + 1, root, p, parent, product * w, total);
            parent[v] = usize::MAX;
        }
    }

    for root in 0..n {
        let vertices: Vec<usize> = (0..n).filter(|&v| v != root).collect();
        let mut total = 0.0;
        parent.iter_mut().for_each(|x| *x = usize::MAX);
        assign(&vertices, 0, root, &p, &mut parent, 1.0, &mut total);
        weights[root] = total;
    }
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Internal("no spanning tree has positive weight".into()));
    }
    Ok(weights.iter().map(|w| w / sum).collect())
}

/// h(s) = P^s(hit `target` before `avoid`) on the evaluated matrix, with the
/// diagonal of (I − P̄) assembled as the off-diagonal row sum.
fn hitting_field(p: &Mat, target: &[usize], avoid: &[usize]) -> Result<Vec<f64>> {
    let n = p.n();
    let mut role = vec![0u8; n]; // 1 target, 2 avoid
    for &s in target {
        role[s] = 1;
    }
    for &s in avoid {
        role[s] = 2;
    }
    let interior: Vec<usize> = (0..n).filter(|&s| role[s] == 0).collect();
    let pos: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for (i, &s) in interior.iter().enumerate() {
            v[s] = Some(i);
        }
        v
    };
    let m = interior.len();
    let mut a = Mat::zeros(m);
    let mut rhs = vec![0.0; m];
    for (i, &s) in interior.iter().enumerate() {
        let mut offdiag = 0.0;
        for t in 0..n {
            if t == s {
                continue;
            }
            let v = p.get(s, t);
            offdiag += v;
            if let Some(j) = pos[t] {
                a.add_to(i, j, -v);
            }
            if role[t] == 1 {
                rhs[i] += v;
            }
        }
        a.add_to(i, i, offdiag);
    }
    let h = if m > 0 { solve(&a, &rhs)? } else { Vec::new() };
    let mut out = vec![0.0; n];
    for &s in target {
        out[s] = 1.0;
    }
    for (i, &s) in interior.iter().enumerate() {
        out[s] = h[i];
    }
    Ok(out)
}

/// P^x(τ⁺_T < τ⁺_x) for a target set T not containing x, by first-step
/// analysis over the committor toward T avoiding x.
pub fn escape_to_set_direct(chain: &PerturbedChain, eps: f64, x: usize, targets: &[usize]) -> Result<f64> {
    if targets.contains(&x) {
        return Err(Error::InvalidArgument("target set contains the start state".into()));
    }
    let p = chain.evaluate_dense(eps)?;
    let h = hitting_field(&p, targets, &[x])?;
    Ok((0..p.n()).map(|t| p.get(x, t) * h[t]).sum())
}

/// P^x(τ⁺_y < τ⁺_x).
pub fn escape_direct(chain: &PerturbedChain, eps: f64, x: usize, y: usize) -> Result<f64> {
    if x == y {
        return Err(Error::InvalidArgument("escape requires x != y".into()));
    }
    escape_to_set_direct(chain, eps, x, &[y])
}

/// Expected hitting times m(s) = E^s(τ_T), zero on T.
fn expected_hitting(p: &Mat, targets: &[usize]) -> Result<Vec<f64>> {
    let n = p.n();
    let mut in_t = vec![false; n];
    for &s in targets {
        in_t[s] = true;
    }
    let interior: Vec<usize> = (0..n).filter(|&s| !in_t[s]).collect();
    let pos: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for (i, &s) in interior.iter().enumerate() {
            v[s] = Some(i);
        }
        v
    };
    let m = interior.len();
    let mut a = Mat::zeros(m);
    for (i, &s) in interior.iter().enumerate() {
        let mut offdiag = 0.0;
        for t in 0..n {
            if t == s {
                continue;
            }
            let v = p.get(s, t);
            offdiag += v;
            if let Some(j) = pos[t] {
                a.add_to(i, j, -v);
            }
        }
        a.add_to(i, i, offdiag);
    }
    let ones = vec![1.0; m];
    let sol = if m > 0 { solve(&a, &ones)? } else { Vec::new() };
    let mut out = vec![0.0; n];
    for (i, &s) in interior.iter().enumerate() {
        out[s] = sol[i];
    }
    Ok(out)
}

fn expected_return(p: &Mat, targets: &[usize], from: usize, m: &[f64]) -> f64 {
    let _ = targets;
    1.0 + (0..p.n()).map(|t| p.get(from, t) * m[t]).sum::<f64>()
}

/// Residual of the hitting-time identity
/// E^z(τ⁺_x) = E^z(min(τ⁺_x,τ⁺_y)) + P^z(τ⁺_y<τ⁺_x)·E^y(τ⁺_x),
/// normalized by 1 + |lhs|. Each expectation comes from its own solve.
pub fn mean_hitting_identity_check(
    chain: &PerturbedChain,
    eps: f64,
    x: usize,
    y: usize,
    z: usize,
) -> Result<f64> {
    chain.require_irreducible()?;
    let p = chain.evaluate_dense(eps)?;
    let m_x = expected_hitting(&p, &[x])?;
    let lhs = expected_return(&p, &[x], z, &m_x);

    let pair: Vec<usize> = if x == y { vec![x] } else { vec![x, y] };
    let m_pair = expected_hitting(&p, &pair)?;
    let e_min = expected_return(&p, &pair, z, &m_pair);

    let prob = if x == y {
        0.0
    } else {
        let h = hitting_field(&p, &[y], &[x])?;
        (0..p.n()).map(|t| p.get(z, t) * h[t]).sum()
    };
    let e_yx = expected_return(&p, &[x], y, &m_x);
    let rhs = e_min + prob * e_yx;
    Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
}

/// Compares the exact exit law of an essential class against the ν-weighted
/// formula (1/Z)·Σ_y ν(y)p(y,z); returns the maximum relative error over
/// start states x ∈ E and exits z ∉ E.
pub fn exit_distribution_check(chain: &PerturbedChain, eps: f64, class: &[usize]) -> Result<f64> {
    chain.require_irreducible()?;
    let nu = restricted_stationary(chain, class)?;
    let p = chain.evaluate_dense(eps)?;
    let n = p.n();
    let mut in_class = vec![false; n];
    for &s in class {
        in_class[s] = true;
    }
    let outside: Vec<usize> = (0..n).filter(|&s| !in_class[s]).collect();

    // Exact law: (I − P|_E) g_z = p(·,z) on E, one solve per exit state.
    let m = class.len();
    let mut a = Mat::zeros(m);
    for (i, &s) in class.iter().enumerate() {
        let mut offdiag = 0.0;
        for t in 0..n {
            if t == s {
                continue;
            }
            let v = p.get(s, t);
            offdiag += v;
            if let Some(j) = class.iter().position(|&c| c == t) {
                a.add_to(i, j, -v);
            }
        }
        a.add_to(i, i, offdiag);
    }
    let lu = lu_factor(&a)?;

    let z_norm: f64 = outside
        .iter()
        .map(|&z| class.iter().zip(&nu).map(|(&y, &w)| w * p.get(y, z)).sum::<f64>())
        .sum();
    if z_norm <= 0.0 {
        return Err(Error::NoClassExit);
    }

    let mut max_rel: f64 = 0.0;
    for &z in &outside {
        let formula: f64 =
            class.iter().zip(&nu).map(|(&y, &w)| w * p.get(y, z)).sum::<f64>() / z_norm;
        let rhs: Vec<f64> = class.iter().map(|&w| p.get(w, z)).collect();
        let exact = lu.solve(&rhs);
        for &g in &exact {
            if formula == 0.0 {
                if g.abs() > 1e-14 {
                    return Err(Error::Internal(
                        "exit mass at a state the formula says is unreachable".into(),
                    ));
                }
                continue;
            }
            max_rel = max_rel.max((g - formula).abs() / formula);
        }
    }
    Ok(max_rel)
}

pub const DIRECT_PATH_MAX_SET: usize = 10;

/// P^x(X_{τ_{S∖J}} = y) as a sum over direct J-paths from x to y, each step
/// weighted by p(γ_i, γ_{i+1})/(1 − return probability of γ_i with respect
/// to (S∖J) ∪ {γ₁..γ_i}). The inner no-return probabilities come from exact
/// solves, memoized over (state, visited subset).
pub fn direct_path_hitting(
    chain: &PerturbedChain,
    eps: f64,
    j_set: &[usize],
    x: usize,
    y: usize,
) -> Result<f64> {
    chain.require_irreducible()?;
    if j_set.len() > DIRECT_PATH_MAX_SET {
        return Err(Error::SizeGuard { what: "direct_path_hitting", max: DIRECT_PATH_MAX_SET, got: j_set.len() });
    }
    let mut j_sorted = j_set.to_vec();
    j_sorted.sort_unstable();
    j_sorted.dedup();
    if !j_sorted.contains(&x) || j_sorted.contains(&y) {
        return Err(Error::InvalidArgument("need x ∈ J and y ∉ J".into()));
    }
    let p = chain.evaluate_dense(eps)?;
    let n = p.n();
    let pos_in_j: HashMap<usize, usize> =
        j_sorted.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    // Return probability P^v(X_{τ⁺_D} = v) where D = (S∖J) ∪ visited.
    fn return_prob(
        p: &Mat,
        j_sorted: &[usize],
        visited: u32,
        v: usize,
        memo: &mut HashMap<(usize, u32), f64>,
    ) -> Result<f64> {
        if let Some(&r) = memo.get(&(v, visited)) {
            return Ok(r);
        }
        let n = p.n();
        let interior: Vec<usize> = j_sorted
            .iter()
            .enumerate()
            .filter(|&(i, _)| visited & (1 << i) == 0)
            .map(|(_, &s)| s)
            .collect();
        let pos: HashMap<usize, usize> =
            interior.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let m = interior.len();
        let mut a = Mat::zeros(m);
        let mut rhs = vec![0.0; m];
        for (i, &s) in interior.iter().enumerate() {
            let mut offdiag = 0.0;
            for t in 0..n {
                if t == s {
                    continue;
                }
                let w = p.get(s, t);
                offdiag += w;
                if let Some(&jj) = pos.get(&t) {
                    a.add_to(i, jj, -w);
                }
                if t == v {
                    rhs[i] += w;
                }
            }
            a.add_to(i, i, offdiag);
        }
        let g = if m > 0 { solve(&a, &rhs)? } else { Vec::new() };
        let mut r = p.get(v, v);
        for (i, &s) in interior.iter().enumerate() {
            r += p.get(v, s) * g[i];
        }
        memo.insert((v, visited), r);
        Ok(r)
    }

    fn dfs(
        p: &Mat,
        j_sorted: &[usize],
        pos_in_j: &HashMap<usize, usize>,
        v: usize,
        visited: u32,
        partial: f64,
        y: usize,
        memo: &mut HashMap<(usize, u32), f64>,
        total: &mut f64,
    ) -> Result<()> {
        let ret = return_prob(p, j_sorted, visited, v, memo)?;
        let denom = 1.0 - ret;
        if denom <= 0.0 {
            return Err(Error::Internal("return probability reached 1".into()));
        }
        let via = partial / denom;
        let step_to_y = p.get(v, y);
        if step_to_y > 0.0 {
            *total += via * step_to_y;
        }
        for (&u, &ui) in pos_in_j.iter() {
            if u == v || visited & (1 << ui) != 0 {
                continue;
            }
            let w = p.get(v, u);
            if w > 0.0 {
                dfs(p, j_sorted, pos_in_j, u, visited | (1 << ui), via * w, y, memo, total)?;
            }
        }
        Ok(())
    }

    let mut memo = HashMap::new();
    let mut total = 0.0;
    let start_mask = 1u32 << pos_in_j[&x];
    // Guard: the path definition never revisits interior vertices, so the
    // DFS over subsets terminates; n ≤ 32 is enforced by the mask width.
    if n > 32 {
        return Err(Error::SizeGuard { what: "direct_path_hitting state space", max: 32, got: n });
    }
    dfs(&p, &j_sorted, &pos_in_j, x, start_mask, 1.0, y, &mut memo, &mut total)?;
    Ok(total)
}

/// P^from(X_{τ_{S∖domain}} = to) for from ∈ domain, to ∉ domain, by one
/// absorption solve on the domain.
pub fn exit_hit_probability(
    chain: &PerturbedChain,
    eps: f64,
    domain: &[usize],
    from: usize,
    to: usize,
) -> Result<f64> {
    if !domain.contains(&from) || domain.contains(&to) {
        return Err(Error::InvalidArgument("need from ∈ domain and to ∉ domain".into()));
    }
    let p = chain.evaluate_dense(eps)?;
    let n = p.n();
    let m = domain.len();
    let pos: HashMap<usize, usize> = domain.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut a = Mat::zeros(m);
    let mut rhs = vec![0.0; m];
    for (i, &s) in domain.iter().enumerate() {
        let mut offdiag = 0.0;
        for t in 0..n {
            if t == s {
                continue;
            }
            let v = p.get(s, t);
            offdiag += v;
            if let Some(&jj) = pos.get(&t) {
                a.add_to(i, jj, -v);
            }
            if t == to {
                rhs[i] += v;
            }
        }
        a.add_to(i, i, offdiag);
    }
    let h = solve(&a, &rhs)?;
    Ok(h[pos[&from]])
}

/// Relative residual of μ(x)·P^x(τ⁺_y<τ⁺_x) = μ(y)·P^y(τ⁺_x<τ⁺_y).
pub fn escape_symmetry_residual(chain: &PerturbedChain, eps: f64, x: usize, y: usize) -> Result<f64> {
    let mu = stationary_direct(chain, eps)?.values;
    let lhs = mu[x] * escape_direct(chain, eps, x, y)?;
    let rhs = mu[y] * escape_direct(chain, eps, y, x)?;
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).abs() / scale)
}

/// Relative residual of 1/μ(x) = Σ_y P^x(τ⁺_y ≤ τ⁺_x)/P^y(τ⁺_x ≤ τ⁺_y)
/// (the y = x term is 1).
pub fn stationary_representation_residual(chain: &PerturbedChain, eps: f64, x: usize) -> Result<f64> {
    let mu = stationary_direct(chain, eps)?.values;
    let mut sum = 1.0;
    for y in 0..chain.n_states() {
        if y == x {
            continue;
        }
        let num = escape_direct(chain, eps, x, y)?;
        let den = escape_direct(chain, eps, y, x)?;
        sum += num / den;
    }
    let lhs = 1.0 / mu[x];
    Ok((lhs - sum).abs() / lhs.abs())
}

/// Residual of P^x(τ⁺_B<τ⁺_A)·P^x(τ⁺_B<τ⁺_x) = P^x(τ⁺_B<τ⁺_{A∪{x}}),
/// each factor from an independent solve; x ∉ A ∪ B.
pub fn quotient_lemma_residual(
    chain: &PerturbedChain,
    eps: f64,
    x: usize,
    a: &[usize],
    b: &[usize],
) -> Result<f64> {
    if a.contains(&x) || b.contains(&x) {
        return Err(Error::InvalidArgument("x must lie outside A ∪ B".into()));
    }
    let p = chain.evaluate_dense(eps)?;
    let n = p.n();
    // P^x(τ⁺_B < τ⁺_A): x is interior of the (B, A) committor.
    let h1 = hitting_field(&p, b, a)?;
    let lhs1 = h1[x];
    // P^x(τ⁺_B < τ⁺_x): first step over the (B, {x}) committor.
    let h2 = hitting_field(&p, b, &[x])?;
    let lhs2: f64 = (0..n).map(|t| p.get(x, t) * h2[t]).sum();
    // P^x(τ⁺_B < τ⁺_{A∪{x}}).
    let a_and_x: Vec<usize> = a.iter().copied().chain([x]).collect();
    let h3 = hitting_field(&p, b, &a_and_x)?;
    let rhs: f64 = (0..n).map(|t| p.get(x, t) * h3[t]).sum();
    let scale = rhs.abs().max(lhs1 * lhs2);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs1 * lhs2 - rhs).abs() / scale)
}

/// Committor invariance when all motion inside C is replaced by its exit
/// law: rebuilds the modified matrix and compares committors toward
/// (A, B) ⊂ C^c. Returns the maximum absolute difference.
pub fn effective_consistency_residual(
    chain: &PerturbedChain,
    eps: f64,
    c: &[usize],
    a: &[usize],
    b: &[usize],
) -> Result<f64> {
    for &s in a.iter().chain(b.iter()) {
        if c.contains(&s) {
            return Err(Error::InvalidArgument("A and B must avoid C".into()));
        }
    }
    let p = chain.evaluate_dense(eps)?;
    let n = p.n();
    if c.len() >= n {
        return Err(Error::InvalidArgument("C must be a proper subset".into()));
    }
    let mut modified = p.clone();
    for &s in c {
        for t in 0..n {
            modified.set(s, t, 0.0);
        }
    }
    for &to in (0..n).filter(|t| !c.contains(t)).collect::<Vec<_>>().iter() {
        for &s in c {
            let v = exit_hit_probability(chain, eps, c, s, to)?;
            modified.set(s, to, v);
        }
    }
    let h_orig = hitting_field(&p, a, b)?;
    let h_mod = hitting_field(&modified, a, b)?;
    Ok(h_orig
        .iter()
        .zip(&h_mod)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max))
}

/// Finite-ε effective chain p̂ on representatives (off-diagonal entries;
/// the diagonal is left implicit).
pub fn effective_chain_numeric(
    chain: &PerturbedChain,
    dec: &ErgodicDecomposition,
    eps: f64,
) -> Result<Mat> {
    let reps = &dec.representatives;
    let k = reps.len();
    let p = chain.evaluate_dense(eps)?;
    let mut out = Mat::zeros(k);
    for j in 0..k {
        let avoid: Vec<usize> = reps.iter().copied().filter(|&r| r != reps[j]).collect();
        let h = hitting_field(&p, &[reps[j]], &avoid)?;
        for i in 0..k {
            if i == j {
                continue;
            }
            let mut acc = p.get(reps[i], reps[j]);
            for z in 0..chain.n_states() {
                if !reps.contains(&z) {
                    acc += p.get(reps[i], z) * h[z];
                }
            }
            out.set(i, j, dec.nu_of(reps[i]) * acc);
        }
    }
    Ok(out)
}

/// Finite-ε q̂(E,E′) = Σ_{x∈E} ν_E(x)²·P^x(τ⁺_{E′}<τ⁺_x).
pub fn q_hat_numeric(
    chain: &PerturbedChain,
    dec: &ErgodicDecomposition,
    eps: f64,
) -> Result<BTreeMap<(usize, usize), f64>> {
    let k = dec.n_classes();
    let mut out = BTreeMap::new();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let mut q = 0.0;
            for (idx, &x) in dec.classes[i].iter().enumerate() {
                let nu = dec.nu[i][idx];
                q += nu * nu * escape_to_set_direct(chain, eps, x, &dec.classes[j])?;
            }
            out.insert((i, j), q);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PerturbedValue as Pv;
    use crate::chain::ergodic_decomposition;
    use crate::fixtures;

    fn idx(chain: &PerturbedChain, s: &str) -> usize {
        chain.index_of(s).unwrap()
    }

    #[test]
    fn stationary_direct_two_state() {
        let chain = fixtures::chain_two_state(1.0, 1, 1.0, 2);
        let eps = 1e-2;
        let mu = stationary_direct(&chain, eps).unwrap().values;
        let expect_x = eps * eps / (eps + eps * eps);
        assert!((mu[0] - expect_x).abs() < 1e-14);
        assert!((mu[1] - (1.0 - expect_x)).abs() < 1e-14);
    }

    #[test]
    fn stationary_direct_doubly_stochastic_is_uniform() {
        let chain = PerturbedChain::from_edges(
            &["a", "b"],
            &[("a", "b", Pv::mono(0.3, 0)), ("b", "a", Pv::mono(0.3, 0))],
        )
        .unwrap();
        let mu = stationary_direct(&chain, 1e-2).unwrap().values;
        assert!((mu[0] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn tree_oracle_two_state() {
        let chain = fixtures::chain_two_state(1.0, 1, 1.0, 2);
        let eps = 1e-1;
        let mu = stationary_tree(&chain, eps).unwrap();
        // μ(x) ∝ p(y,x) = ε², μ(y) ∝ p(x,y) = ε.
        let z = eps + eps * eps;
        assert!((mu[0] - eps * eps / z).abs() < 1e-14);
        assert!((mu[1] - eps / z).abs() < 1e-14);
    }

    #[test]
    fn tree_oracle_symmetric_cycle_is_uniform() {
        let chain = fixtures::relevant_cycle3();
        let mu = stationary_tree(&chain, 1e-2).unwrap();
        for v in mu {
            assert!((v - 1.0 / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn tree_oracle_matches_direct_on_chain_b() {
        let chain = fixtures::chain_b();
        let eps = 1e-3;
        let direct = stationary_direct(&chain, eps).unwrap().values;
        let tree = stationary_tree(&chain, eps).unwrap();
        for (d, t) in direct.iter().zip(&tree) {
            assert!((d - t).abs() < 1e-9, "direct {d} vs tree {t}");
        }
    }

    #[test]
    fn tree_oracle_guards_size() {
        let labels: Vec<String> = (0..9).map(|i| format!("s{i}")).collect();
        let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let mut edges = Vec::new();
        for i in 0..9usize {
            edges.push((refs[i], refs[(i + 1) % 9], Pv::mono(1.0, 1)));
        }
        let chain = PerturbedChain::from_edges(&refs, &edges).unwrap();
        assert!(matches!(
            stationary_tree(&chain, 1e-2),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn escape_direct_two_state_is_exact() {
        let chain = fixtures::chain_two_state(1.0, 1, 1.0, 2);
        let eps = 1e-2;
        assert!((escape_direct(&chain, eps, 0, 1).unwrap() - eps).abs() < 1e-16);
    }

    #[test]
    fn mean_hitting_identity_degenerate_and_two_state() {
        let chain = fixtures::chain_two_state(1.0, 1, 1.0, 2);
        let r0 = mean_hitting_identity_check(&chain, 1e-2, 0, 0, 1).unwrap();
        assert!(r0 < 1e-15);
        let r = mean_hitting_identity_check(&chain, 1e-2, 0, 1, 0).unwrap();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn exit_law_of_singleton_class_is_exact() {
        let chain = fixtures::chain_b_dashed();
        let y = idx(&chain, "y");
        let err = exit_distribution_check(&chain, 1e-3, &[y]).unwrap();
        assert!(err < 1e-12, "singleton exit error {err}");
    }

    #[test]
    fn direct_path_single_state_set() {
        let chain = fixtures::chain_b();
        let w = idx(&chain, "w");
        let z = idx(&chain, "z");
        let eps = 1e-2;
        let expansion = direct_path_hitting(&chain, eps, &[w], w, z).unwrap();
        let reference = exit_hit_probability(&chain, eps, &[w], w, z).unwrap();
        assert!((expansion - reference).abs() < 1e-9);
    }

    #[test]
    fn direct_path_free_pair_is_zero() {
        let chain = fixtures::chain_b();
        let w = idx(&chain, "w");
        let x = idx(&chain, "x");
        // No edge w → x, so no direct {w}-path reaches x as its exit.
        let v = direct_path_hitting(&chain, 1e-2, &[w], w, x).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn direct_path_guards_size() {
        let chain = fixtures::chain_b();
        let big: Vec<usize> = (0..11).collect();
        assert!(matches!(
            direct_path_hitting(&chain, 1e-2, &big, 0, 1),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn quotient_lemma_on_chain_b() {
        let chain = fixtures::chain_b();
        let r = quotient_lemma_residual(
            &chain,
            1e-2,
            idx(&chain, "w"),
            &[idx(&chain, "x")],
            &[idx(&chain, "y")],
        )
        .unwrap();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn effective_consistency_on_chain_b() {
        let chain = fixtures::chain_b();
        let r = effective_consistency_residual(
            &chain,
            1e-2,
            &[idx(&chain, "w")],
            &[idx(&chain, "y")],
            &[idx(&chain, "x")],
        )
        .unwrap();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn numeric_effective_chain_matches_monomials_on_chain_b() {
        let chain = fixtures::chain_b();
        let dec = ergodic_decomposition(&chain).unwrap();
        let eps = 1e-3;
        let eff = effective_chain_numeric(&chain, &dec, eps).unwrap();
        // p̂(x,y) ≈ ε, p̂(x,z) ≈ ε².
        assert!((eff.get(0, 1) / eps - 1.0).abs() < 0.01);
        assert!((eff.get(0, 2) / (eps * eps) - 1.0).abs() < 0.01);
    }
}
