//! Perturbed-chain representation, validation, and the ergodic decomposition
//! of the limit matrix.
//!
//! A chain stores only its off-diagonal entries as monomials; the diagonal is
//! the implicit complement at every ε. Rows whose exponent-0 coefficients sum
//! to exactly one ("tight rows", e.g. an entry 1−ε entered as its limit 1)
//! are evaluated with the exponent-0 mass shrunk to make room for the
//! positive-exponent entries, which reproduces the underlying chain exactly
//! and keeps every entry asymptotically equivalent to its stored monomial.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::algebra::{Exponent, PerturbedValue};
use crate::error::{Error, Result};
use crate::linalg::{solve, Mat};

const TIGHT_TOL: f64 = 1e-9;
const ROW_MASS_TOL: f64 = 1e-12;

fn valid_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Finite perturbed Markov chain with sparse monomial off-diagonal entries.
#[derive(Debug, Clone)]
pub struct PerturbedChain {
    labels: Vec<String>,
    label_index: BTreeMap<String, usize>,
    rows: Vec<Vec<(usize, PerturbedValue)>>,
    edge_order: Vec<(usize, usize)>,
    eps_max: f64,
    tight_rows: Vec<usize>,
    strongly_connected: bool,
}

/// Outcome of `validate`: structural facts plus the admissible ε interval.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub strongly_connected: bool,
    /// Largest ε for which every evaluated row sum stays ≤ 1 (bisected).
    pub eps_max: f64,
    /// Rows whose exponent-0 coefficients sum to 1 exactly.
    pub tight_rows: Vec<String>,
    /// Monomial entries make every finite product of entries comparable, so
    /// regularity holds by construction.
    pub regular: bool,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ChainJson {
    states: Vec<String>,
    edges: Vec<EdgeJson>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    from: String,
    to: String,
    coeff: f64,
    exp: [i64; 2],
}

impl PerturbedChain {
    /// Builds a chain from labels and off-diagonal monomial edges, checking
    /// the structural invariants (label syntax and uniqueness, no diagonal or
    /// duplicate entries, positive coefficients, exponents ≥ 0, and per-row
    /// exponent-0 mass ≤ 1).
    pub fn from_parts(labels: Vec<String>, edges: Vec<(usize, usize, PerturbedValue)>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidChain("empty state set".into()));
        }
        let n = labels.len();
        let mut label_index = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            if !valid_label(l) {
                return Err(Error::InvalidChain(format!(
                    "label {l:?} does not match ^[A-Za-z0-9_]+$"
                )));
            }
            if label_index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidChain(format!("duplicate label {l:?}")));
            }
        }
        let mut rows: Vec<Vec<(usize, PerturbedValue)>> = vec![Vec::new(); n];
        let mut edge_order = Vec::with_capacity(edges.len());
        let mut seen = BTreeSet::new();
        for (from, to, value) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidChain(format!("edge ({from},{to}) out of range")));
            }
            if from == to {
                return Err(Error::InvalidChain(format!(
                    "diagonal entry at {:?}: diagonals are implicit complements",
                    labels[from]
                )));
            }
            if !seen.insert((from, to)) {
                return Err(Error::InvalidChain(format!(
                    "duplicate edge {:?} -> {:?}",
                    labels[from], labels[to]
                )));
            }
            if value.is_zero() {
                return Err(Error::InvalidChain(format!(
                    "zero entry {:?} -> {:?}: omit absent transitions",
                    labels[from], labels[to]
                )));
            }
            if value.exp() < Ratio::from_integer(0) {
                return Err(Error::InvalidChain(format!(
                    "edge {:?} -> {:?} has negative exponent",
                    labels[from], labels[to]
                )));
            }
            rows[from].push((to, value));
            edge_order.push((from, to));
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|&(to, _)| to);
        }

        let mut tight_rows = Vec::new();
        for (i, label) in labels.iter().enumerate() {
            let s0 = rows[i]
                .iter()
                .filter(|(_, v)| v.exp() == Ratio::from_integer(0))
                .map(|(_, v)| v.coeff())
                .sum::<f64>();
            if s0 > 1.0 + ROW_MASS_TOL {
                return Err(Error::RowMassExceedsOne { state: label.clone(), sum: s0 });
            }
            if s0 >= 1.0 - TIGHT_TOL {
                tight_rows.push(i);
            }
        }

        let mut chain = PerturbedChain {
            labels,
            label_index,
            rows,
            edge_order,
            eps_max: 0.0,
            tight_rows,
            strongly_connected: false,
        };
        chain.eps_max = chain.bisect_eps_max();
        chain.strongly_connected = {
            let comps = tarjan_scc(&chain.full_adjacency());
            comps.len() == 1
        };
        Ok(chain)
    }

    /// Convenience constructor from labels and labeled edges.
    pub fn from_edges(labels: &[&str], edges: &[(&str, &str, PerturbedValue)]) -> Result<Self> {
        let owned: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let mut index = BTreeMap::new();
        for (i, l) in owned.iter().enumerate() {
            index.insert(l.clone(), i);
        }
        let mut list = Vec::with_capacity(edges.len());
        for (from, to, v) in edges {
            let f = *index
                .get(*from)
                .ok_or_else(|| Error::InvalidChain(format!("unknown state {from:?}")))?;
            let t = *index
                .get(*to)
                .ok_or_else(|| Error::InvalidChain(format!("unknown state {to:?}")))?;
            list.push((f, t, *v));
        }
        Self::from_parts(owned, list)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let parsed: ChainJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidChain(format!("JSON: {e}")))?;
        let mut index = BTreeMap::new();
        for (i, l) in parsed.states.iter().enumerate() {
            index.insert(l.clone(), i);
        }
        let mut edges = Vec::with_capacity(parsed.edges.len());
        for e in &parsed.edges {
            let from = *index
                .get(&e.from)
                .ok_or_else(|| Error::InvalidChain(format!("unknown state {:?}", e.from)))?;
            let to = *index
                .get(&e.to)
                .ok_or_else(|| Error::InvalidChain(format!("unknown state {:?}", e.to)))?;
            if e.exp[1] <= 0 || e.exp[0] < 0 {
                return Err(Error::InvalidChain(format!(
                    "edge {:?} -> {:?}: exp [{},{}] must have num ≥ 0, den ≥ 1",
                    e.from, e.to, e.exp[0], e.exp[1]
                )));
            }
            if e.coeff == 0.0 {
                return Err(Error::InvalidChain(format!(
                    "edge {:?} -> {:?} has zero coefficient",
                    e.from, e.to
                )));
            }
            let value = PerturbedValue::monomial(e.coeff, Ratio::new(e.exp[0], e.exp[1]))?;
            edges.push((from, to, value));
        }
        Self::from_parts(parsed.states, edges)
    }

    /// Serializes back to the chain JSON format, preserving state and edge
    /// order so a parse/serialize round trip is field-identical.
    pub fn to_json_value(&self) -> serde_json::Value {
        let edges: Vec<EdgeJson> = self
            .edge_order
            .iter()
            .map(|&(from, to)| {
                let v = self.entry(from, to).expect("edge_order entry present");
                EdgeJson {
                    from: self.labels[from].clone(),
                    to: self.labels[to].clone(),
                    coeff: v.coeff(),
                    exp: [*v.exp().numer(), *v.exp().denom()],
                }
            })
            .collect();
        serde_json::to_value(ChainJson { states: self.labels.clone(), edges })
            .expect("chain JSON serialization")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("chain JSON serialization")
    }

    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn out_edges(&self, from: usize) -> &[(usize, PerturbedValue)] {
        &self.rows[from]
    }

    pub fn entry(&self, from: usize, to: usize) -> Option<PerturbedValue> {
        self.rows[from]
            .iter()
            .find(|&&(t, _)| t == to)
            .map(|&(_, v)| v)
    }

    /// Off-diagonal entry as a value, zero when absent.
    pub fn entry_or_zero(&self, from: usize, to: usize) -> PerturbedValue {
        if from == to {
            return PerturbedValue::zero();
        }
        self.entry(from, to).unwrap_or_else(PerturbedValue::zero)
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn tight_rows(&self) -> &[usize] {
        &self.tight_rows
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected
    }

    pub fn require_irreducible(&self) -> Result<()> {
        if self.strongly_connected {
            Ok(())
        } else {
            Err(Error::NotIrreducible)
        }
    }

    pub fn require_eps(&self, eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::EpsOutOfRange { eps });
        }
        if eps > self.eps_max {
            return Err(Error::EpsAboveValidity { eps, eps_max: self.eps_max });
        }
        Ok(())
    }

    /// Full validation: irreducibility for ε > 0, row feasibility, and the
    /// (automatic) regularity of monomial entries.
    pub fn validate(&self) -> Result<ValidationReport> {
        self.require_irreducible()?;
        Ok(ValidationReport {
            strongly_connected: true,
            eps_max: self.eps_max,
            tight_rows: self.tight_rows.iter().map(|&i| self.labels[i].clone()).collect(),
            regular: true,
        })
    }

    /// Sum of exponent-0 coefficients in a row.
    pub fn row_exp0_sum(&self, from: usize) -> f64 {
        self.rows[from]
            .iter()
            .filter(|(_, v)| v.exp() == Ratio::from_integer(0))
            .map(|(_, v)| v.coeff())
            .sum()
    }

    /// Exponent-0 coefficient of the implicit diagonal of the limit matrix.
    pub fn diag_limit_coeff(&self, from: usize) -> f64 {
        (1.0 - self.row_exp0_sum(from)).max(0.0)
    }

    /// Adjacency over all stored entries (the ε > 0 transition graph).
    pub fn full_adjacency(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(to, _)| to).collect())
            .collect()
    }

    /// Adjacency restricted to exponent-0 entries: one-step transitions that
    /// survive in the limit matrix.
    pub fn relevant_adjacency(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(_, v)| v.exp() == Ratio::from_integer(0))
                    .map(|&(to, _)| to)
                    .collect()
            })
            .collect()
    }

    fn row_feasible(&self, i: usize, eps: f64) -> bool {
        let tight = self.tight_rows.binary_search(&i).is_ok();
        let mut pos = 0.0;
        let mut zero = 0.0;
        for (_, v) in &self.rows[i] {
            if v.exp() == Ratio::from_integer(0) {
                zero += v.coeff();
            } else {
                pos += v.evaluate(eps).expect("eps in (0,1]");
            }
        }
        if tight {
            pos <= 1.0 + ROW_MASS_TOL
        } else {
            zero + pos <= 1.0 + ROW_MASS_TOL
        }
    }

    fn feasible(&self, eps: f64) -> bool {
        (0..self.n_states()).all(|i| self.row_feasible(i, eps))
    }

    fn bisect_eps_max(&self) -> f64 {
        if self.feasible(1.0) {
            return 1.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= 0.0 {
                break;
            }
            if self.feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Dense stochastic matrix at a concrete ε. Positive-exponent entries are
    /// evaluated exactly; on tight rows the exponent-0 entries shed the mass
    /// taken up by positive-exponent entries and the diagonal is zero.
    pub fn evaluate_dense(&self, eps: f64) -> Result<Mat> {
        self.require_eps(eps)?;
        let n = self.n_states();
        let mut m = Mat::zeros(n);
        for i in 0..n {
            let tight = self.tight_rows.binary_search(&i).is_ok();
            let mut pos = 0.0;
            let mut zero_sum = 0.0;
            for (j, v) in &self.rows[i] {
                let val = v.evaluate(eps)?;
                m.set(i, *j, val);
                if v.exp() == Ratio::from_integer(0) {
                    zero_sum += val;
                } else {
                    pos += val;
                }
            }
            if tight && zero_sum > 0.0 {
                let scale = ((1.0 - pos) / zero_sum).max(0.0);
                for (j, v) in &self.rows[i] {
                    if v.exp() == Ratio::from_integer(0) {
                        m.set(i, *j, m.get(i, *j) * scale);
                    }
                }
                m.set(i, i, 0.0);
            } else {
                m.set(i, i, (1.0 - zero_sum - pos).max(0.0));
            }
        }
        Ok(m)
    }

    /// All distinct entry exponents (for the order-extraction lattice).
    pub fn exponent_set(&self) -> BTreeSet<Exponent> {
        let mut set = BTreeSet::new();
        for row in &self.rows {
            for (_, v) in row {
                set.insert(v.exp());
            }
        }
        set
    }

    /// Picks a label not yet in use, for internally created super-states.
    pub fn fresh_label(&self, base: &str) -> String {
        let mut label: String = base
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
            .collect();
        if label.is_empty() {
            label.push('s');
        }
        while self.label_index.contains_key(&label) {
            label.push('_');
        }
        label
    }
}

/// Tarjan strongly-connected components; returns components in reverse
/// topological discovery order.
pub fn tarjan_scc(graph: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        graph: &'a [Vec<usize>],
        index: usize,
        stack: Vec<usize>,
        on_stack: Vec<bool>,
        idx: Vec<Option<usize>>,
        low: Vec<usize>,
        comps: Vec<Vec<usize>>,
    }
    fn connect(v: usize, st: &mut State) {
        st.idx[v] = Some(st.index);
        st.low[v] = st.index;
        st.index += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &w in &st.graph[v] {
            if st.idx[w].is_none() {
                connect(w, st);
                st.low[v] = st.low[v].min(st.low[w]);
            } else if st.on_stack[w] {
                st.low[v] = st.low[v].min(st.idx[w].unwrap());
            }
        }
        if st.low[v] == st.idx[v].unwrap() {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().expect("stack underflow");
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            st.comps.push(comp);
        }
    }
    let n = graph.len();
    let mut st = State {
        graph,
        index: 0,
        stack: Vec::new(),
        on_stack: vec![false; n],
        idx: vec![None; n],
        low: vec![0; n],
        comps: Vec::new(),
    };
    for v in 0..n {
        if st.idx[v].is_none() {
            connect(v, &mut st);
        }
    }
    st.comps
}

/// Essential classes and transient set of the limit matrix, with the
/// per-class stationary distributions ν_E.
#[derive(Debug, Clone)]
pub struct ErgodicDecomposition {
    /// Essential classes, each sorted, ordered by their smallest state index.
    pub classes: Vec<Vec<usize>>,
    /// States outside every essential class, sorted.
    pub transient: Vec<usize>,
    /// State → class index (None for transient states).
    pub class_of: Vec<Option<usize>>,
    /// Per-class stationary distribution, aligned with `classes[i]`.
    pub nu: Vec<Vec<f64>>,
    /// Default representative: the smallest state index of each class.
    pub representatives: Vec<usize>,
}

impl ErgodicDecomposition {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// ν value of an individual state within its class (0 for transient).
    pub fn nu_of(&self, state: usize) -> f64 {
        match self.class_of[state] {
            Some(c) => {
                let pos = self.classes[c].iter().position(|&s| s == state).unwrap();
                self.nu[c][pos]
            }
            None => 0.0,
        }
    }
}

/// Sink components of the exponent-0 graph are the essential classes of the
/// limit chain; everything else is transient.
pub fn ergodic_decomposition(chain: &PerturbedChain) -> Result<ErgodicDecomposition> {
    let n = chain.n_states();
    let relevant = chain.relevant_adjacency();
    let comps = tarjan_scc(&relevant);
    let mut comp_of = vec![usize::MAX; n];
    for (cid, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = cid;
        }
    }
    let mut is_sink = vec![true; comps.len()];
    for v in 0..n {
        for &w in &relevant[v] {
            if comp_of[w] != comp_of[v] {
                is_sink[comp_of[v]] = false;
            }
        }
    }

    let mut classes: Vec<Vec<usize>> = comps
        .iter()
        .enumerate()
        .filter(|&(cid, _)| is_sink[cid])
        .map(|(_, comp)| comp.clone())
        .collect();
    classes.sort_by_key(|c| c[0]);

    let mut class_of = vec![None; n];
    for (ci, class) in classes.iter().enumerate() {
        for &s in class {
            class_of[s] = Some(ci);
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&s| class_of[s].is_none()).collect();
    let representatives: Vec<usize> = classes.iter().map(|c| c[0]).collect();
    let nu = classes
        .iter()
        .map(|class| restricted_stationary(chain, class))
        .collect::<Result<Vec<_>>>()?;

    Ok(ErgodicDecomposition { classes, transient, class_of, nu, representatives })
}

/// Stationary distribution ν_E of the limit chain restricted to an essential
/// class: ν P₀|_E = ν, normalized and strictly positive.
pub fn restricted_stationary(chain: &PerturbedChain, class: &[usize]) -> Result<Vec<f64>> {
    let m = class.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty class".into()));
    }
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let pos_in: BTreeMap<usize, usize> = class.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    // Assemble P₀ᵀ − I with the last equation replaced by normalization.
    let mut a = Mat::zeros(m);
    for (i, &s) in class.iter().enumerate() {
        for (t, v) in chain.out_edges(s) {
            if v.exp() != Ratio::from_integer(0) {
                continue;
            }
            match pos_in.get(t) {
                Some(&j) => a.add_to(j, i, v.coeff()),
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "relevant edge {} -> {} leaves the class: not an essential class",
                        chain.label(s),
                        chain.label(*t)
                    )))
                }
            }
        }
        a.add_to(i, i, chain.diag_limit_coeff(s) - 1.0);
    }
    let mut b = vec![0.0; m];
    for j in 0..m {
        a.set(m - 1, j, 1.0);
    }
    b[m - 1] = 1.0;

    let nu = solve(&a, &b)?;
    let total: f64 = nu.iter().sum();
    let nu: Vec<f64> = nu.iter().map(|v| v / total).collect();

    // Balance residual and positivity are hard guarantees, not diagnostics.
    let mut residual = 0.0f64;
    for (j, &sj) in class.iter().enumerate() {
        let mut flow = nu[j] * chain.diag_limit_coeff(sj);
        for (i, &si) in class.iter().enumerate() {
            if let Some(v) = chain.entry(si, sj) {
                if v.exp() == Ratio::from_integer(0) {
                    flow += nu[i] * v.coeff();
                }
            }
        }
        residual = residual.max((flow - nu[j]).abs());
    }
    if residual >= 1e-12 {
        return Err(Error::Internal(format!(
            "within-class stationary residual {residual:e} exceeds 1e-12"
        )));
    }
    if nu.iter().any(|&v| v <= 0.0) {
        return Err(Error::Internal("nonpositive within-class stationary mass".into()));
    }
    Ok(nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PerturbedValue as Pv;
    use crate::fixtures;

    #[test]
    fn chain_a_is_valid_with_large_eps_max() {
        let chain = fixtures::chain_two_state(1.0, 1, 1.0, 2);
        let report = chain.validate().unwrap();
        assert!(report.eps_max >= 0.5, "eps_max = {}", report.eps_max);
        assert!(report.tight_rows.is_empty());
        assert!(report.regular);
    }

    #[test]
    fn chain_b_has_tight_row_w() {
        let chain = fixtures::chain_b();
        let report = chain.validate().unwrap();
        assert_eq!(report.tight_rows, vec!["w".to_string()]);
        // The tight row stays feasible at every eps; eps_max is set elsewhere.
        assert!(report.eps_max > 0.1);
    }

    #[test]
    fn disconnected_chain_fails_validation() {
        let chain = PerturbedChain::from_edges(
            &["a", "b", "c", "d"],
            &[
                ("a", "b", Pv::mono(1.0, 1)),
                ("b", "a", Pv::mono(1.0, 1)),
                ("c", "d", Pv::mono(1.0, 1)),
                ("d", "c", Pv::mono(1.0, 1)),
            ],
        )
        .unwrap();
        assert!(matches!(chain.validate(), Err(Error::NotIrreducible)));
    }

    #[test]
    fn overfull_relevant_row_is_rejected() {
        let err = PerturbedChain::from_edges(
            &["a", "b", "c"],
            &[
                ("a", "b", Pv::mono(0.7, 0)),
                ("a", "c", Pv::mono(0.6, 0)),
                ("b", "a", Pv::mono(1.0, 1)),
                ("c", "a", Pv::mono(1.0, 1)),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::RowMassExceedsOne { .. }));
    }

    #[test]
    fn relevant_graph_of_chain_b_is_single_edge() {
        let chain = fixtures::chain_b();
        let rel = chain.relevant_adjacency();
        let w = chain.index_of("w").unwrap();
        let y = chain.index_of("y").unwrap();
        let mut edges = Vec::new();
        for (from, tos) in rel.iter().enumerate() {
            for &to in tos {
                edges.push((from, to));
            }
        }
        assert_eq!(edges, vec![(w, y)]);
    }

    #[test]
    fn relevant_graph_of_chain_a_is_empty() {
        let chain = fixtures::chain_two_state(1.0, 1, 1.0, 2);
        assert!(chain.relevant_adjacency().iter().all(|r| r.is_empty()));
    }

    #[test]
    fn exp0_edge_is_relevant() {
        let chain = PerturbedChain::from_edges(
            &["x", "y"],
            &[("x", "y", Pv::mono(0.5, 0)), ("y", "x", Pv::mono(1.0, 1))],
        )
        .unwrap();
        assert_eq!(chain.relevant_adjacency()[0], vec![1]);
    }

    #[test]
    fn decomposition_of_chain_b() {
        let chain = fixtures::chain_b();
        let dec = ergodic_decomposition(&chain).unwrap();
        let lbl = |s: &str| chain.index_of(s).unwrap();
        assert_eq!(dec.classes, vec![vec![lbl("x")], vec![lbl("y")], vec![lbl("z")]]);
        assert_eq!(dec.transient, vec![lbl("w")]);
        assert!(dec.nu.iter().all(|nu| nu == &vec![1.0]));
    }

    #[test]
    fn decomposition_of_chain_a() {
        let chain = fixtures::chain_two_state(1.0, 1, 1.0, 2);
        let dec = ergodic_decomposition(&chain).unwrap();
        assert_eq!(dec.classes.len(), 2);
        assert!(dec.transient.is_empty());
    }

    #[test]
    fn symmetric_cycle_is_one_uniform_class() {
        let chain = fixtures::relevant_cycle3();
        let dec = ergodic_decomposition(&chain).unwrap();
        assert_eq!(dec.classes, vec![vec![0, 1, 2]]);
        assert!(dec.transient.is_empty());
        for &v in &dec.nu[0] {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_state_class_balance() {
        let chain = PerturbedChain::from_edges(
            &["a", "b"],
            &[("a", "b", Pv::mono(0.2, 0)), ("b", "a", Pv::mono(0.1, 0))],
        )
        .unwrap();
        let nu = restricted_stationary(&chain, &[0, 1]).unwrap();
        assert!((nu[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((nu[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_class_stationary_is_one() {
        let chain = fixtures::chain_b();
        let x = chain.index_of("x").unwrap();
        assert_eq!(restricted_stationary(&chain, &[x]).unwrap(), vec![1.0]);
    }

    #[test]
    fn partition_and_sink_properties() {
        let chain = fixtures::chain_b_dashed();
        let dec = ergodic_decomposition(&chain).unwrap();
        let total: usize = dec.classes.iter().map(|c| c.len()).sum::<usize>() + dec.transient.len();
        assert_eq!(total, chain.n_states());
        // No exponent-0 edge may leave an essential class.
        for class in &dec.classes {
            for &s in class {
                for (t, v) in chain.out_edges(s) {
                    if v.exp() == Ratio::from_integer(0) {
                        assert!(class.contains(t));
                    }
                }
            }
        }
        // No relevant path from any class into a transient state: transient
        // states must be unreachable in the relevant graph from class states.
        let rel = chain.relevant_adjacency();
        for class in &dec.classes {
            let mut seen = vec![false; chain.n_states()];
            let mut stack: Vec<usize> = class.clone();
            while let Some(v) = stack.pop() {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                stack.extend(rel[v].iter().copied());
            }
            for &t in &dec.transient {
                assert!(!seen[t], "relevant path from a class into transient {t}");
            }
        }
    }

    #[test]
    fn evaluate_reproduces_tight_row_complement() {
        let chain = fixtures::chain_b();
        let eps = 1e-3;
        let m = chain.evaluate_dense(eps).unwrap();
        let w = chain.index_of("w").unwrap();
        let y = chain.index_of("y").unwrap();
        let z = chain.index_of("z").unwrap();
        assert!((m.get(w, y) - (1.0 - eps)).abs() < 1e-15);
        assert!((m.get(w, z) - eps).abs() < 1e-18);
        assert_eq!(m.get(w, w), 0.0);
        // Every row sums to 1.
        for i in 0..chain.n_states() {
            let s: f64 = (0..chain.n_states()).map(|j| m.get(i, j)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_field_identical() {
        let text = r#"{
            "states": ["x", "y", "w", "z"],
            "edges": [
                {"from": "x", "to": "w", "coeff": 1.0, "exp": [1, 1]},
                {"from": "w", "to": "y", "coeff": 1.0, "exp": [0, 1]},
                {"from": "w", "to": "z", "coeff": 1.0, "exp": [1, 1]},
                {"from": "y", "to": "x", "coeff": 1.0, "exp": [1, 1]},
                {"from": "z", "to": "w", "coeff": 1.0, "exp": [2, 1]}
            ]
        }"#;
        let chain = PerturbedChain::parse_json(text).unwrap();
        let v1: serde_json::Value = serde_json::from_str(text).unwrap();
        let v2 = chain.to_json_value();
        assert_eq!(v1, v2);
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let text = r#"{"states": ["a", "b"], "edges": [], "comment": "nope"}"#;
        assert!(PerturbedChain::parse_json(text).is_err());
        let text2 = r#"{"states": ["a", "b"],
            "edges": [{"from":"a","to":"b","coeff":1.0,"exp":[1,1],"note":"x"}]}"#;
        assert!(PerturbedChain::parse_json(text2).is_err());
    }

    #[test]
    fn json_rejects_bad_labels() {
        let text = r#"{"states": ["a", "b-c"], "edges": []}"#;
        assert!(PerturbedChain::parse_json(text).is_err());
    }
}
