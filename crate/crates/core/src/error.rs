//! Error type shared by all modules.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The corpus contained no tokens.
    #[error("empty corpus: no tokens found")]
    EmptyCorpus,

    /// Vocabulary construction filtered out every token.
    #[error("empty vocabulary: no token meets min_count")]
    EmptyVocabulary,

    /// PMI is undefined because a marginal count is zero.
    #[error("PMI undefined for pair ({i}, {j}): zero marginal count")]
    UndefinedPmi { i: usize, j: usize },

    /// A numeric failure: divergence, or a non-finite value in a computation.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Model or training configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A query word is not in the vocabulary.
    #[error("out-of-vocabulary word: {0:?}")]
    Oov(String),

    /// No evaluation item was covered by the vocabulary.
    #[error("no query was covered by the vocabulary")]
    NoCoverage,

    /// A rank correlation is undefined for the given inputs.
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    /// A data file failed to parse or is internally inconsistent.
    #[error("{path}:{line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// An I/O failure tied to a specific file.
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
