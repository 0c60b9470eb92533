use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operator is not Hermitian (max |M - M†| = {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },

    #[error("Hermitian eigendecomposition failed for a {dim}x{dim} matrix")]
    Eigendecomposition { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Both the squared signal slope and the readout variance vanish, so the
    /// method-of-moments ratio is 0/0 at this point.
    #[error("indeterminate 0/0 point (signal^2 = {signal_sq:e}, variance = {variance:e})")]
    Indeterminate { signal_sq: f64, variance: f64 },

    #[error("readout variance vanishes while the signal slope does not (signal^2 = {signal_sq:e})")]
    VanishingVariance { signal_sq: f64 },

    #[error("small-angle extrapolation diverged (estimates {estimates:?})")]
    ExtrapolationDivergence { estimates: Vec<f64> },

    #[error("adaptive quadrature did not reach tolerance (estimate {estimate}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("{what} evaluated to a non-finite value")]
    NonFinite { what: &'static str },

    #[error("statevector with {sites} sites exceeds the cap of {cap}")]
    TooManySites { sites: usize, cap: usize },
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
