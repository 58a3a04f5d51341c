//! Small reference chains used across tests, docs, and the verify suites.

use crate::algebra::PerturbedValue as Pv;
use crate::chain::PerturbedChain;

/// Two metastable wells: p(x,y) = a·ε^alpha, p(y,x) = b·ε^beta.
pub fn chain_two_state(a: f64, alpha: i64, b: f64, beta: i64) -> PerturbedChain {
    PerturbedChain::from_edges(
        &["x", "y"],
        &[("x", "y", Pv::mono(a, alpha)), ("y", "x", Pv::mono(b, beta))],
    )
    .expect("two-state chain")
}

/// Four-state chain with wells {x}, {y}, {z} and a transient hub w:
/// p(x,w) = p(w,z) = p(y,x) = ε, p(w,y) = 1 (tight row), p(z,w) = ε².
pub fn chain_b() -> PerturbedChain {
    PerturbedChain::from_edges(
        &["x", "y", "w", "z"],
        &[
            ("x", "w", Pv::mono(1.0, 1)),
            ("w", "y", Pv::mono(1.0, 0)),
            ("w", "z", Pv::mono(1.0, 1)),
            ("y", "x", Pv::mono(1.0, 1)),
            ("z", "w", Pv::mono(1.0, 2)),
        ],
    )
    .expect("chain B")
}

/// `chain_b` plus the direct shortcut pair p(z,y) = p(y,z) = ε.
pub fn chain_b_dashed() -> PerturbedChain {
    PerturbedChain::from_edges(
        &["x", "y", "w", "z"],
        &[
            ("x", "w", Pv::mono(1.0, 1)),
            ("w", "y", Pv::mono(1.0, 0)),
            ("w", "z", Pv::mono(1.0, 1)),
            ("y", "x", Pv::mono(1.0, 1)),
            ("z", "w", Pv::mono(1.0, 2)),
            ("z", "y", Pv::mono(1.0, 1)),
            ("y", "z", Pv::mono(1.0, 1)),
        ],
    )
    .expect("chain B with shortcuts")
}

/// 3-cycle with all exponent-0 probabilities 1/2 (one essential class).
pub fn relevant_cycle3() -> PerturbedChain {
    PerturbedChain::from_edges(
        &["a", "b", "c"],
        &[
            ("a", "b", Pv::mono(0.5, 0)),
            ("b", "c", Pv::mono(0.5, 0)),
            ("c", "a", Pv::mono(0.5, 0)),
        ],
    )
    .expect("3-cycle")
}
