use thiserror::Error;

#[derive(Debug, Error)]
pub enum MfError {
    #[error("format error: {0}")]
    Format(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient scaling range at q = {q}: {reason}")]
    InsufficientScalingRange { q: f64, reason: String },

    #[error("singularity spectrum undefined: {0}")]
    SpectrumUndefined(String),

    #[error("unreliable surrogate test: {failed} of {requested} replicates failed")]
    UnreliableTest { failed: usize, requested: usize },

    #[error("incompatible ensemble members: {0}")]
    IncompatibleMembers(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl MfError {
    /// True for errors caused by bad configuration or malformed requests,
    /// as opposed to failures of an otherwise well-posed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            MfError::InvalidParameter { .. } | MfError::Format(_) | MfError::EmptyInput(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, MfError>;
