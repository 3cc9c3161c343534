use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("evaluation at the pole: |cx + d| = {0:e}")]
    Pole(f64),
    #[error("pole {pole} lies inside the interval [{lo}, {hi}]")]
    PoleInInterval { pole: f64, lo: f64, hi: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("operation requires a nonempty word")]
    EmptyWord,
    #[error("budget exceeded: {what} would exceed cap {cap}")]
    Budget { what: String, cap: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("group is elementary (r = {0}); need r >= 2")]
    NonElementary(usize),
    #[error("resolution too coarse: {0}")]
    Refine(String),
    #[error("no admissible words link the given sequence")]
    NoAdmissibleWords,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
