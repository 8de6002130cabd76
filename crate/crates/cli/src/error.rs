use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Engine(#[from] eflux::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// `(code, exit status)`.
    pub fn code(&self) -> (&'static str, i32) {
        match self {
            CliError::Config(_) => ("config", 2),
            CliError::Engine(e) => {
                let code = e.code();
                match e {
                    eflux::Error::SingularCovariance { .. }
                    | eflux::Error::PathMismatch { .. }
                    | eflux::Error::PathCoverage { .. }
                    | eflux::Error::WindowTruncated { .. } => (code, 3),
                    _ => (code, 2),
                }
            }
            CliError::Io(_) | CliError::Csv(_) => ("io", 1),
        }
    }
}
