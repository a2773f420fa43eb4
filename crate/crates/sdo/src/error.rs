use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("sigmoid domain error: {0}")]
    Domain(String),
    #[error("unsupported sigmoid: {0}")]
    UnsupportedSpec(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("point outside chart overlap: {0}")]
    OutOfOverlap(String),
    #[error("step size collapsed at t = {t} (h = {h:e}); try enabling the stiff switch")]
    StepCollapse { t: f64, h: f64 },
    #[error("step budget of {0} exhausted")]
    MaxSteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("no return to section within t = {0}")]
    NoReturn(f64),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("no sign change: {0}")]
    NoSignChange(String),
    #[error("orbit is not monotone: {0}")]
    NonMonotone(String),
    #[error("classification mismatch: {0}")]
    ClassificationMismatch(String),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Configuration/validation problems versus numerical failures; the CLI maps
    /// these onto distinct exit codes.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_) | Error::Config(_) | Error::UnsupportedSpec(_) | Error::InvalidChart(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
