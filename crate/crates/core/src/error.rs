use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the scoring pipeline.
///
/// Every variant maps onto a stable, greppable code via [`Error::code`]; the
/// CLI prints it as the prefix of its one-line error message.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: field `{field}`: {message}")]
    CorpusRow {
        line: usize,
        field: String,
        message: String,
    },

    #[error("duplicate essay_id `{0}`")]
    DuplicateEssay(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("rule file line {line}, column {column}: {message}")]
    RuleSyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate rule id `{0}`")]
    DuplicateRule(String),

    #[error("unknown rule category `{0}`")]
    UnknownCategory(String),

    #[error("document has no words")]
    EmptyDocument,

    #[error("essay `{0}` has no words")]
    EmptyEssay(String),

    #[error("token `{0}` is not pending review")]
    NotPending(String),

    #[error("unknown topic `{topic}`; known topics: {known}")]
    UnknownTopic { topic: String, known: String },

    #[error("{0} is constant; correlation is undefined")]
    ConstantInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("feature rows and corpus disagree at position {position}: `{feature_id}` vs `{corpus_id}`")]
    Misaligned {
        position: usize,
        feature_id: String,
        corpus_id: String,
    },

    #[error("unsupported {what} format version {found} (expected {expected})")]
    FormatVersion {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("{path}: locked by another process (remove {lock} if stale)")]
    Locked { path: PathBuf, lock: PathBuf },

    #[error("config: {0}")]
    Config(String),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::CorpusRow { .. } | Error::DuplicateEssay(_) => "E_CORPUS",
            Error::InvalidInput(_) => "E_INPUT",
            Error::RuleSyntax { .. } | Error::DuplicateRule(_) | Error::UnknownCategory(_) => "E_RULES",
            Error::EmptyDocument | Error::EmptyEssay(_) => "E_EMPTY",
            Error::NotPending(_) | Error::Locked { .. } => "E_WHITELIST",
            Error::UnknownTopic { .. } => "E_TOPIC",
            Error::ConstantInput(_) => "E_CONSTANT",
            Error::DimensionMismatch { .. } => "E_DIMENSION",
            Error::Misaligned { .. } => "E_ALIGN",
            Error::FormatVersion { .. } => "E_FORMAT",
            Error::Config(_) | Error::Toml(_) => "E_CONFIG",
            Error::Json(_) | Error::Csv(_) => "E_PARSE",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
