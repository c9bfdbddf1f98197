use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("unphysical covariance: smallest symplectic eigenvalue {min_eig:.3e} at t = {t}")]
    Physicality { t: f64, min_eig: f64 },
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("no entanglement at the lower bracket r = {r_lo}")]
    Bracket { r_lo: f64 },
    #[error("unstable normal modes: {0}")]
    Stability(String),
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by user input rather than by a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse { .. } | Error::Validation(_) | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
