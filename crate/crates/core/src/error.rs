use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The metric left the Kähler cone (smallest eigenvalue at or below the threshold).
    #[error("positivity lost: margin {margin:.3e} <= threshold {threshold:.3e}")]
    PositivityLoss { margin: f64, threshold: f64 },

    #[error("invalid descriptor: {0}")]
    Spec(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("right-hand side not solvable: defect {defect:.3e} exceeds {limit:.1e}")]
    Solvability { defect: f64, limit: f64 },

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("exponential normalization overflowed (integral = {0})")]
    NumericalOverflow(f64),

    #[error("background is not in the canonical class")]
    Class,

    #[error("operation not supported on this backend: {0}")]
    UnsupportedBackend(String),

    #[error("eigensolve failed: {0}")]
    EigSolve(String),

    #[error("decay fit failed: {0}")]
    Fit(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
