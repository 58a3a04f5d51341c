//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coefficient {coeff}: must be finite and > 0")]
    InvalidCoefficient { coeff: f64 },

    #[error("invalid exponent {num}/{den}: {reason}")]
    InvalidExponent { num: i64, den: i64, reason: String },

    #[error("division by an identically-zero perturbed value (structurally unreachable target)")]
    DivisionByZero,

    #[error("eps = {eps} outside the admissible interval (0, 1]")]
    EpsOutOfRange { eps: f64 },

    #[error("eps = {eps} exceeds the chain's validity bound eps_max = {eps_max}")]
    EpsAboveValidity { eps: f64, eps_max: f64 },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("chain is not irreducible for eps > 0 (transition graph not strongly connected)")]
    NotIrreducible,

    #[error("row {state}: exponent-0 coefficients sum to {sum} > 1, no admissible eps")]
    RowMassExceedsOne { state: String, sum: f64 },

    #[error("states {states:?} are asymptotic dynamical traps with respect to the target set")]
    TrapPresent { states: Vec<String> },

    #[error(
        "linear system ill-conditioned (estimate {estimate:.3e} > {threshold:.1e}); \
         use the trap-lifting path instead of the direct solve"
    )]
    IllConditioned { estimate: f64, threshold: f64 },

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("Newton iteration did not contract after the first step; use a smaller eps or a direct solve")]
    NewtonNotContracting,

    #[error("Newton iteration exceeded {max_iter} iterations (residual {residual:.3e})")]
    NewtonMaxIter { max_iter: usize, residual: f64 },

    #[error("monomial fixed point failed to stabilize within {sweeps} sweeps")]
    FixedPointDiverged { sweeps: usize },

    #[error("order extraction failed: {reason}; use a smaller eps ladder")]
    OrderExtractionFailed { reason: String },

    #[error("size guard: {what} supports at most {max} states/elements, got {got}")]
    SizeGuard { what: &'static str, max: usize, got: usize },

    #[error("cannot lift the whole state space (class equals S)")]
    LiftWholeSpace,

    #[error("class has no exit entries; Z would be zero (chain not irreducible for eps > 0)")]
    NoClassExit,

    #[error("chain is already ergodic at this scale (single essential class)")]
    SingleClass,

    #[error("all off-diagonal entries vanish; nothing to rescale")]
    NothingToRescale,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures of input validation (CLI exit code 2); everything
    /// else is treated as a numerical/analysis failure (exit code 3).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidCoefficient { .. }
                | Error::InvalidExponent { .. }
                | Error::EpsOutOfRange { .. }
                | Error::EpsAboveValidity { .. }
                | Error::InvalidChain(_)
                | Error::NotIrreducible
                | Error::RowMassExceedsOne { .. }
                | Error::InvalidArgument(_)
        )
    }
}
