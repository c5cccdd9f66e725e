use crate::solver::SolveResult;

/// Errors produced by model construction, quadrature and the solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Hurst index outside the open interval (1/2, 1).
    #[error("Hurst index must lie strictly in (0.5, 1), got {0}")]
    InvalidHurst(f64),

    /// Kernel arguments violate 0 <= s <= t <= 1 (or hit the undefined s = 0 < t).
    #[error("kernel arguments out of range: t = {t}, s = {s}")]
    KernelDomain { t: f64, s: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Adaptive quadrature exhausted its panel budget before reaching tolerance.
    #[error("quadrature did not reach tolerance {tol:e} within {panels} panels")]
    QuadratureFailure { tol: f64, panels: usize },

    /// A Cholesky pivot fell below the positive-definiteness threshold.
    #[error("covariance matrix numerically not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Simplex weights whose suffix mass vanishes, so the conditional
    /// expectation defining the primal candidate is undefined.
    #[error("degenerate weights: suffix mass vanishes at index {0}")]
    DegenerateWeights(usize),

    /// The solver hit its iteration budget; the best certificate found so far
    /// is attached.
    #[error("solver stopped after {} iterations with gap {:e} above tolerance", .best.iterations, .best.gap)]
    NotConverged { best: Box<SolveResult> },

    /// Structure analysis requires a converged solve as input.
    #[error("structure analysis requires a converged solve (gap {gap:e} exceeds {required:e})")]
    UnconvergedInput { gap: f64, required: f64 },

    /// A quantity violated an invariant it is contracted to satisfy.
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
}
