use thiserror::Error;

/// Errors produced by parsing, validation and the optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("word {word:?} is not cyclically reduced at position {position}")]
    NotCyclicallyReduced { word: String, position: usize },

    #[error("letter {letter:?} at position {position} in word {word:?} is outside rank {rank}")]
    LetterOutOfRank {
        word: String,
        position: usize,
        letter: char,
        rank: usize,
    },

    #[error("enumeration truncated by caps: {0}")]
    Truncated(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("malformed json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
