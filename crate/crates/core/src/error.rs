use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { point: f64, lo: f64, hi: f64 },

    #[error("custom processes have no closed-form covariance")]
    NoClosedForm,

    #[error("invalid process: {0}")]
    InvalidProcess(String),

    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("samples are not strictly convex at sample {index}")]
    NonConvexSamples { index: usize },

    #[error("singular covariance at point {point} (row {row})")]
    SingularCovariance { point: f64, row: usize },

    #[error("unsupported flux: {0}")]
    UnsupportedFlux(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("path has {found} values but the grid has {expected} points")]
    PathMismatch { expected: usize, found: usize },

    #[error("path was not sampled at y = {point}")]
    PathCoverage { point: f64 },

    #[error("minimization window truncated: argmin sits on the edge y = {edge}")]
    WindowTruncated { edge: f64 },

    #[error("dimension {dimension} exceeds the quadrature cap of {cap}; use Monte Carlo")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("CFL number {0} is outside (0, 1]")]
    Cfl(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Short stable identifier, used in machine-readable error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. } => "out-of-domain",
            Error::NoClosedForm => "no-closed-form",
            Error::InvalidProcess(_) => "invalid-process",
            Error::InvalidFlux(_) => "invalid-flux",
            Error::NonConvexSamples { .. } => "non-convex",
            Error::SingularCovariance { .. } => "singular-covariance",
            Error::UnsupportedFlux(_) => "unsupported-flux",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::PathMismatch { .. } => "path-mismatch",
            Error::PathCoverage { .. } => "path-coverage",
            Error::WindowTruncated { .. } => "window-truncated",
            Error::DimensionCap { .. } => "dimension-cap",
            Error::Cfl(_) => "cfl",
            Error::InvalidArgument(_) => "invalid-argument",
        }
    }
}
