use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Distance below the model's reference distance.
    #[error("distance {distance_m} m is outside the model validity range (d >= {d0_m} m)")]
    OutOfValidityRange { distance_m: f64, d0_m: f64 },

    /// Argument violates a mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or incomplete configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Not enough usable bins for a dual-slope fit.
    #[error("fit error: the {side} side of the breakpoint has {found} usable bins, need {needed}")]
    InsufficientBins {
        side: &'static str,
        found: usize,
        needed: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Every sample was censored; location and scale cannot be estimated.
    #[error("all samples are censored; parameters are not identifiable")]
    NonIdentifiable,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems are reported separately from runtime failures
    /// by the command-line front end.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Format(_))
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
