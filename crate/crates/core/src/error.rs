use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("integration step failure: {0}")]
    StepSize(String),

    #[error("filter function pole at tan argument {argument}")]
    FilterPole { argument: f64 },

    #[error("outside the weak-kick regime: lambda^2 * n0 = {value} >= 1")]
    Regime { value: f64 },

    #[error("outcome has vanishing probability {probability:e}")]
    ZeroProbability { probability: f64 },

    #[error("degenerate bath occupancy {0}: the P-function of the vacuum is singular")]
    DegenerateBath(f64),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse { .. } | Error::Validation { .. } | Error::Io { .. } => 2,
            Error::Truncation(_) => 4,
            Error::StepSize(_)
            | Error::FilterPole { .. }
            | Error::Regime { .. }
            | Error::ZeroProbability { .. }
            | Error::DegenerateBath(_)
            | Error::Numeric(_) => 3,
        }
    }
}
