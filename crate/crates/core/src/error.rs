use thiserror::Error;

#[derive(Debug, Error)]
pub enum WalkError {
    /// Returned when an input violates a documented precondition.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    /// Two records that must describe the same walk do not.
    #[error("records are not comparable: {0}")]
    Mismatch(String),

    /// A requested site was not retained by the record.
    #[error("site {site} is not retained by the record")]
    SiteNotRecorded { site: i64 },

    /// The saturation ratio never crosses unity inside the scanned grid.
    #[error("no unity crossing inside the removal-time grid: {0}")]
    NoCrossing(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type WalkResult<T> = Result<T, WalkError>;

impl WalkError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
