use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate column `{0}` (zero variance)")]
    DegenerateColumn(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(
        "training diverged at iteration {iteration}: teacher loss {teacher_loss}, \
         student loss {student_loss}, sigma2 {sigma2}"
    )]
    Divergence {
        iteration: usize,
        teacher_loss: f64,
        student_loss: f64,
        sigma2: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("{0} unavailable")]
    Unavailable(String),

    #[error("unsupported model file version `{0}`")]
    UnsupportedVersion(String),

    #[error("checksum error: {0}")]
    Checksum(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the command-line runner:
    /// 1 config, 2 data, 3 training/numerics, 4 I/O and model files.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownMethod(_) => 1,
            Error::InsufficientData { .. }
            | Error::DegenerateColumn(_)
            | Error::Degenerate(_)
            | Error::Schema(_)
            | Error::Parse { .. }
            | Error::Format(_)
            | Error::Unavailable(_) => 2,
            Error::Shape { .. }
            | Error::Contract(_)
            | Error::Singular(_)
            | Error::NonFinite(_)
            | Error::Divergence { .. } => 3,
            Error::UnsupportedVersion(_) | Error::Checksum(_) | Error::Io { .. } => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
