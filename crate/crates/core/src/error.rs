use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide error type.
///
/// `Domain` and `Usage` flag invalid requests, `Numeric` a computation that
/// failed to reach its tolerance (the achieved value is attached so callers
/// can decide whether to accept a degraded result).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numeric error: {context} (achieved {achieved:.3e})")]
    Numeric { context: String, achieved: f64 },

    /// The probe point 2/K lies on the boundary curve; the winding number is
    /// ill-posed there (the coupling is critical).
    #[error("degenerate: 2/K is on the boundary curve (distance {distance:.3e})")]
    OnCurve { distance: f64 },

    /// The center-unstable spectrum is not a simple root at the origin, so the
    /// worked amplitude-equation pipeline does not apply.
    #[error("not reduced: spectrum is a root pair, eigenvalues {eigenvalues:?}")]
    NotReduced { eigenvalues: Vec<Complex64> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn numeric(context: impl Into<String>, achieved: f64) -> Self {
        Error::Numeric {
            context: context.into(),
            achieved,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
