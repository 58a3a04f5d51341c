//! Analysis of irreducibly perturbed Markov chains.
//!
//! A perturbed chain has transition probabilities given, up to asymptotic
//! equivalence, by monomials c·ε^k; it is irreducible for every ε > 0 but may
//! split into several essential classes in the limit ε → 0, producing
//! metastable dynamics across multiple time scales. This crate computes:
//!
//! - the ergodic decomposition of the limit chain and the within-class
//!   stationary distributions ([`chain`]);
//! - committor/hitting probabilities up to asymptotic equivalence, by direct
//!   numeric solves, Newton-refined solves, a monomial fixed point, and trap
//!   lifting for ill-conditioned target sets ([`committor`], [`lifting`]);
//! - the effective metastable chain, its reversible escape companion, the
//!   time-rescaled chain, the full hierarchy of metastable scales, and the
//!   limiting stationary distribution ([`hierarchy`]);
//! - finite-ε brute-force oracles for every asymptotic identity used above
//!   ([`oracle`]).

pub mod algebra;
pub mod chain;
pub mod committor;
pub mod error;
pub mod fixtures;
pub mod hierarchy;
pub mod lifting;
pub mod linalg;
pub mod oracle;
pub mod random;

pub use algebra::{exponent, Exponent, Order, PerturbedValue};
pub use chain::{ergodic_decomposition, restricted_stationary, ErgodicDecomposition, PerturbedChain, ValidationReport};
pub use committor::{
    detect_traps, extract_order, newton_inverse, solve_committor_monomial, solve_committor_numeric,
    CommittorField, ExponentLattice, NumericCommittor, OrderFit, SnappedExponent, SolveMethod,
};
pub use error::{Error, Result};
pub use hierarchy::{
    asymptotic_stationary, build_hierarchy, check_approximation, effective_chain, escape_order,
    rescale, reversible_chain, verify_metastable_set, AsymptoticDistribution, HierarchyLevel, QHat,
};
pub use lifting::{asymptotic_committor, lift_class, pushback, LiftLog, LiftedCommittor};
