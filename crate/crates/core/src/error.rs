use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid fold plan: {0}")]
    Plan(String),

    #[error("unsupported network for this operation: {0}")]
    Unsupported(String),

    /// Training aborted: a loss or gradient stopped being finite.
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("dataset error: {0}")]
    Data(String),

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("unsupported model format version \"{found}\" (expected \"{expected}\")")]
    ModelVersion { found: String, expected: String },

    #[error("report file error: {0}")]
    ReportFormat(String),

    /// A loaded or constructed network failed structural validation;
    /// the message lists the violation codes.
    #[error("network failed validation: {0}")]
    InvalidNetwork(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
