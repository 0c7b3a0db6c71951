use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("margin {margin} only takes values in {{0, 1}}; moment estimates are undefined")]
    DegenerateMargin { margin: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("every observed pair is (0, 0); the count parameters are not identifiable")]
    NoInformation,
    #[error("models are not comparable: {0}")]
    InvalidComparison(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
