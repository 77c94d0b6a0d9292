use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("total dimension {requested} exceeds the cap of {cap}")]
    DimensionCap { requested: usize, cap: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("schur construction failed: {0}")]
    Construction(String),
    #[error("sampler aborted: {0}")]
    SamplerAbort(String),
    #[error("cache error: {0}")]
    Cache(String),
}

impl Error {
    /// Numerical failures (as opposed to bad inputs) map to a distinct exit status in the CLI.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Construction(_) | Error::SamplerAbort(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
