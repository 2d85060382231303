use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used for the CLI exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Geometry,
    Solver,
    Hypothesis,
    Verification,
    Io,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Geometry => "geometry",
            ErrorCategory::Solver => "solver",
            ErrorCategory::Hypothesis => "hypothesis",
            ErrorCategory::Verification => "verification",
            ErrorCategory::Io => "io",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Geometry => 3,
            ErrorCategory::Solver => 4,
            ErrorCategory::Hypothesis => 5,
            ErrorCategory::Verification => 6,
            ErrorCategory::Io => 7,
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Geometry(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear solver: {0}")]
    Solver(String),

    #[error("friction fixed point did not converge at t = {t}: {message}")]
    FixedPoint { t: f64, message: String },

    #[error("hypothesis {condition} violated: {message}")]
    Hypothesis { condition: String, message: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Geometry(_) => ErrorCategory::Geometry,
            Error::Config { .. } | Error::InvalidArgument(_) => ErrorCategory::Config,
            Error::Solver(_) | Error::FixedPoint { .. } | Error::Quadrature(_) => {
                ErrorCategory::Solver
            }
            Error::Hypothesis { .. } => ErrorCategory::Hypothesis,
            Error::Verification(_) => ErrorCategory::Verification,
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}
