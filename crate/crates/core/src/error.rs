use thiserror::Error;

/// Errors raised by model assembly, load identification and the solution paths.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid crowd layout: {0}")]
    InvalidLayout(String),

    #[error("singular stiffness matrix: {0}")]
    SingularStiffness(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("numeric failure: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    /// The optimizer did not reach an admissible minimum. `best` holds the
    /// best coefficient vector seen, `(c1, c2, c3)` per filter.
    #[error("identification failed: {message} (best objective {objective:e})")]
    Identification {
        message: String,
        best: Vec<f64>,
        objective: f64,
    },

    #[error("drift matrix is not Hurwitz (largest eigenvalue real part {max_real:e}); no stationary solution exists")]
    Unstable { max_real: f64 },

    #[error("dynamic stiffness is singular at omega = {omega} rad/s")]
    SingularFrf { omega: f64 },

    #[error("integration step unstable: {0}")]
    StepSize(String),

    #[error("moments undefined: {0}")]
    UndefinedMoments(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidLayout(_)
                | Error::InvalidInput(_)
                | Error::InvalidRequest(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
