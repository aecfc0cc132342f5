use crate::label::Class;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("channel {channel} is not valid for {label}")]
    InvalidChannel { label: String, channel: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectrum grids are not compatible (step {a} MHz vs {b} MHz)")]
    GridMismatch { a: f64, b: f64 },

    /// Malformed input. `line` is 1-based when known.
    #[error("{}", match .line { Some(l) => format!("{}:{}: {}", .source_name, l, .message), None => format!("{}: {}", .source_name, .message) })]
    Parse {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    #[error("unsupported {format} version {found}; this reader understands major version {supported}")]
    UnsupportedVersion {
        format: String,
        found: String,
        supported: u32,
    },

    #[error("schema mismatch in column `{column}`: {message}")]
    Schema { column: String, message: String },

    #[error("label partition for {0} is empty")]
    EmptyPartition(Class),

    #[error("burst is incomplete (envelope only) and cannot be classified")]
    IncompleteBurst,

    #[error("SVM learner {learner} did not converge: {iterations} iterations, max KKT violation {violation:.3e} (tolerance {tolerance:.1e})")]
    NonConvergence {
        learner: String,
        iterations: usize,
        violation: f64,
        tolerance: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
