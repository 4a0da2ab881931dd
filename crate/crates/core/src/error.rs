use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unsupported format version {0}")]
    Version(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("state error: {0}")]
    State(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the command-line tool: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Version(_) | Error::Parse(_) | Error::State(_) => 2,
            Error::Dimension { .. } | Error::Data(_) | Error::Calibration(_) | Error::Io { .. } => 3,
            Error::Domain(_) | Error::Divergence { .. } | Error::Numeric(_) => 4,
        }
    }
}
