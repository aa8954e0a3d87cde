use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed XML at {position}: {message}", path.display())]
    MalformedXml {
        path: PathBuf,
        /// `line:column` of the offending byte.
        position: String,
        message: String,
    },

    #[error("sentence {sentence_id}: {message}")]
    SchemaViolation { sentence_id: String, message: String },

    #[error("duplicate sentence id {0:?}")]
    DuplicateId(String),

    #[error("cannot merge a {left} corpus with a {right} corpus")]
    SplitMismatch { left: String, right: String },

    #[error("sentence {sentence_id}: term {term:?} cannot be rendered as a target ({reason})")]
    UnrepresentableTerm {
        sentence_id: String,
        term: String,
        reason: &'static str,
    },

    #[error("{excluded} sentences had unrepresentable terms (limit {limit})")]
    TooManyUnrepresentable { excluded: usize, limit: usize },

    #[error("template {name}: {message}")]
    Template { name: String, message: String },

    #[error("backend {0} is not trainable")]
    NotTrainable(String),

    #[error("training dataset is empty")]
    EmptyDataset,

    #[error("backend resources exhausted: {0}")]
    ResourceExhausted(String),

    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("gold and predictions disagree on ids: {0}")]
    IdMismatch(String),

    #[error("gold has {gold} items but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },

    #[error("cannot aggregate reports from different subtasks")]
    MixedSubtasks,

    #[error("nothing to aggregate")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("experiment {cell}: {source}")]
    Experiment {
        cell: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
