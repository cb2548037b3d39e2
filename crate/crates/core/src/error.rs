use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operation needs a bipartite split (dA, dB) on the density matrix")]
    MissingSplit,

    #[error("matrix is not Hermitian (max |m - m^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue = {0:.3e})")]
    NotPsd(f64),

    #[error("parameter a = {a} is outside the certified domain of `{family}` {domain}")]
    Domain {
        family: String,
        a: f64,
        domain: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative coupling h[{index}] = {value}")]
    NegativeCoupling { index: usize, value: f64 },

    #[error("{sites} sites exceeds the cap of {cap}")]
    SizeCap { sites: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid point {index} (a = {a}): {source}")]
    GridPoint {
        index: usize,
        a: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that come from a caller-supplied parameter lying outside
    /// a family domain, including when wrapped by a scan grid index.
    pub fn is_domain(&self) -> bool {
        match self {
            Error::Domain { .. } => true,
            Error::GridPoint { source, .. } => source.is_domain(),
            _ => false,
        }
    }
}
