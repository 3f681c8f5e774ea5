use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An environment schedule produced a probability that is not below 1.
    #[error("invalid schedule: epsilon = {eps} for N = {pop_size} (need eps < 1)")]
    Schedule { eps: f64, pop_size: u64 },

    #[error("sample size {n} exceeds the exact-computation cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    /// A simulated genealogy did not reach its most recent common ancestor
    /// within the configured number of generations.
    #[error("generation cap of {cap} reached before the sample tree was complete")]
    GenerationCap { cap: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{aborted} of {total} replicates aborted (limit {limit})")]
    AbortThreshold {
        aborted: usize,
        total: usize,
        limit: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
