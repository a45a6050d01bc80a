use thiserror::Error;

/// Failure modes shared by every module of the crate.
///
/// The variants are coarse on purpose: callers (notably the CLI) map each one
/// to a distinct exit code and diagnostic kind.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A sampling or grid configuration cannot be honoured.
    #[error("configuration error: {0}")]
    Config(String),
    /// The field model violates a finiteness or continuity condition.
    #[error("model validity error: {0}")]
    ModelValidity(String),
    /// The exponential interaction weight has no finite Gaussian expectation.
    #[error("integrability error: {0}")]
    Integrability(String),
    /// A quantity that must be non-negative or positive semidefinite is not,
    /// beyond rounding tolerance.
    #[error("numerical consistency error: {0}")]
    Numerical(String),
    /// A grid cannot resolve the function being propagated.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// Matrix elements are not positive, so no log-slope can be fitted.
    #[error("cannot extract ground energy: {0}")]
    Extraction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !($cond) {
            return Err($crate::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
