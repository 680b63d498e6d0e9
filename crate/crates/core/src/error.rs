use thiserror::Error;

/// Errors raised by the numerical kernels, assembly routines and model reduction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("non-finite sample at x = {x}")]
    NonFiniteSample { x: f64 },

    #[error("coefficient must be positive, found {value} at x = {x}")]
    CoefficientSign { x: f64, value: f64 },

    #[error("coefficient discontinuity at x = {0} is not aligned with the mesh")]
    MisalignedCoefficient(f64),

    #[error("matrix is not positive definite ({0})")]
    Indefinite(String),

    #[error("matrix is numerically singular: pivot {pivot:e} below threshold {threshold:e}")]
    Singular { pivot: f64, threshold: f64 },

    #[error("linear solve inaccurate: relative residual {0:e}")]
    InaccurateSolve(f64),

    #[error("meshes are not nested: {coarse} elements do not divide {fine}")]
    Nesting { coarse: usize, fine: usize },

    #[error("quadrature orders disagree by {difference:e} at x = {x}")]
    QuadratureMismatch { x: f64, difference: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("greedy stagnation: orthogonal component has relative norm {0:e}")]
    Stagnation(f64),

    #[error("residual dual norm squared is negative ({0:e})")]
    NegativeResidual(f64),

    #[error("singular value decomposition did not converge")]
    SvdConvergence,

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
