use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Argument of a principal-branch logarithm lies on the cut, or a parameter
    /// falls outside the admissible Esscher interval.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {error:.3e} after {nodes} nodes")]
    Quadrature { error: f64, nodes: usize },

    #[error("phase jump of {jump:.3} rad between adjacent quadrature nodes near s = {at:.6}")]
    BranchJump { jump: f64, at: f64 },

    #[error("no sign change of the martingale residual on [{lo}, {hi}] (g = {g_lo:.6e}, {g_hi:.6e})")]
    NoBracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("gap of {days} consecutive missing days starting {start}")]
    Gap { start: String, days: usize },

    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),

    #[error("no mean reversion detectable: AR(1) slope {0:.6}")]
    NoMeanReversion(f64),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
