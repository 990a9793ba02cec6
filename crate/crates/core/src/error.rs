use std::io;

use thiserror::Error;

use crate::lang::Lang;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown language code `{0}`")]
    UnknownLanguage(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("feature space is empty after document-frequency filtering")]
    EmptyVocabulary,

    #[error("no positive training examples for language `{0}`")]
    NoPositives(Lang),

    #[error("no negative training examples for language `{0}`")]
    NoNegatives(Lang),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("node `{0}` is not in the graph")]
    MissingNode(String),

    #[error("node `{0}` has no incident edges")]
    IsolatedNode(String),

    #[error("graph has no seeded nodes")]
    NoSeeds,

    #[error("tweet `{0}` has no propagated scores")]
    MissingScores(String),

    #[error("prediction ids do not match gold: {0}")]
    IdMismatch(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
