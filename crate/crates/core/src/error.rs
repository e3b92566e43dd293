use thiserror::Error;

/// Errors raised by the exact engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid arc: {0}")]
    InvalidArc(String),

    #[error("invalid map at index {index}: {reason}")]
    InvalidMap { index: usize, reason: String },

    #[error("budget exceeded: {what} exceeded {limit}")]
    BudgetExceeded { what: &'static str, limit: usize },

    #[error("attractor did not stabilize; measure requires a finite-type map")]
    NotFiniteType,

    #[error("no cycle of pushed-forward measures found within {budget} steps")]
    CycleNotFound { budget: usize },

    #[error("inconsistent relations: {0}")]
    InconsistentRelations(String),

    #[error("approximant at denominator bound {bound} violates breakpoint order: {reason}")]
    OrderViolation { bound: String, reason: String },

    #[error("measure has atoms; a non-atomic measure is required")]
    AtomicMeasure,

    #[error("measure is not invariant (exact residual {residual})")]
    NotInvariant { residual: String },

    #[error("orbit hit the discontinuity set at step {step} (point {point})")]
    HitDiscontinuity { step: usize, point: String },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
