use thiserror::Error;

/// Errors raised by density construction, verification and search routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("incompatible grids: cell widths {0} and {1}")]
    IncompatibleGrids(f64, f64),

    #[error("carrier size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("level m = {m} is infeasible on {order} atoms (m·|G| < 1, the class P_m is empty)")]
    InfeasibleLevel { m: f64, order: usize },

    #[error(
        "exhaustive search needs {needed} tuples but the budget is {budget}; \
         rerun in randomized search mode (lower bound only)"
    )]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("outside hypothesis: {0}")]
    OutOfHypothesis(String),

    #[error("not a projection: {0}")]
    NotProjection(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "quadrature tail estimate {tail:e} exceeds tolerance {tolerance:e}; \
         try a truncation radius of at least {suggested}"
    )]
    NonConvergent {
        tail: f64,
        tolerance: f64,
        suggested: f64,
    },

    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
