use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stability violation: {0}")]
    Stability(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infinite moment: {0}")]
    InfiniteMoment(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("solution diverged at step {step}")]
    Divergence { step: usize },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors raised because an input violated a precondition, as
    /// opposed to failures discovered while computing.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidParameter(_)
                | Error::Stability(_)
                | Error::Domain(_)
                | Error::InfiniteMoment(_)
                | Error::Configuration(_)
                | Error::Alignment(_)
        )
    }
}
