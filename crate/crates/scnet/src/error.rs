use thiserror::Error;

/// Errors surfaced by graph construction, analysis, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty graph")]
    EmptyGraph,

    #[error("duplicate firm id with conflicting attributes: {0}")]
    ConflictingAttrs(String),

    #[error("unknown firm id: {0}")]
    UnknownFirm(String),

    #[error("tier truncation requires k >= 1 (an MSF-only graph has no supply structure)")]
    ZeroTierTruncation,

    #[error("no evaluable MSFs (every MSF has an empty baseline terminal-supplier set)")]
    NoEvaluableMsfs,

    #[error("no known values to impute {attribute} from")]
    NoKnownValues { attribute: &'static str },

    #[error("damping factor must lie in (0, 1), got {0}")]
    InvalidDamping(f64),

    #[error("degree statistics need at least {needed} nodes with degree >= 1, got {got}")]
    TooFewDegrees { needed: usize, got: usize },

    #[error("unit {unit} has no {what} value; run imputation first")]
    MissingUnitValue { unit: String, what: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: expected header `{expected}`, found `{found}`")]
    BadHeader {
        path: String,
        expected: String,
        found: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
