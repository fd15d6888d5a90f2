use thiserror::Error;

/// Errors produced by the construction and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("profile bound violated: sup a = {sup} must not exceed lambda = {lambda}")]
    ProfileBound { sup: f64, lambda: f64 },

    #[error("profile evaluation {value} at (x, u) = ({x:?}, {u}) outside [0, lambda = {lambda}]")]
    ProfileRange {
        x: Vec<f64>,
        u: f64,
        value: f64,
        lambda: f64,
    },

    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("root bracket [{lo}, {hi}] does not enclose a sign change")]
    Bracket { lo: f64, hi: f64 },

    #[error("root refinement stalled: residual {residual:e} above tolerance {tol:e}")]
    RootTolerance { residual: f64, tol: f64 },

    #[error("metric solve failed: h_x singular or not positive definite")]
    SingularMetric,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("zero tangent vector has no causal character")]
    ZeroVector,

    #[error("step size underflow at t = {t} (h = {h:e}); partial trajectory retained")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps")]
    MaxSteps { max_steps: usize },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("gradient sup across the net shows no stabilization (last ratios {0:?}); lower-bound hypothesis violated")]
    UnboundedGradient(Vec<f64>),
}

pub type Result<T> = std::result::Result<T, Error>;
