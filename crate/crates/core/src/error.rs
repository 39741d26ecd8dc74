use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("enumeration guard exceeded: {0} tuples")]
    EnumerationTooLarge(u128),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// True for errors caused by the caller's configuration rather than a
    /// failure during the run.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Parameter(_) | Error::Domain(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
