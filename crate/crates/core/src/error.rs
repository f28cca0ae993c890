use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("vertex {vertex} has a self-loop")]
    SelfLoop { vertex: usize },

    #[error("duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { u: usize, v: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("value {value} out of range [{lo}, {hi}] at {location}")]
    OutOfRange {
        value: f64,
        lo: f64,
        hi: f64,
        location: String,
    },

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("profile space has {states} states, exceeds dense cap of {cap}")]
    DenseCapExceeded { states: u128, cap: usize },

    #[error(
        "profile space has {states} states, exceeds exact-OT cap of {cap}; \
         use the upper bound |V|*TV instead"
    )]
    OtCapExceeded { states: u128, cap: usize },

    #[error("regularity condition violated: Delta*beta = {0} >= 1")]
    Regularity(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
