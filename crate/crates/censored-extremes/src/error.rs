use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the support or representation interval of a model.
    #[error("domain error: {0}")]
    Domain(String),

    /// A lifetime/censoring family combination with no analytic balance parameter.
    #[error("unsupported distribution pair: {0}")]
    UnsupportedPair(String),

    /// The balance parameter is infinite; limit-law machinery refuses it.
    #[error("kappa is infinite: {0}")]
    InfiniteKappa(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed: estimate {estimate:e}, error estimate {error:e} > tol {tol:e}")]
    Quadrature { estimate: f64, error: f64, tol: f64 },

    /// Root bracketing failed (e.g. n too small for the representation interval).
    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("insufficient replications: got {got}, need at least {need}")]
    InsufficientReplications { got: usize, need: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
