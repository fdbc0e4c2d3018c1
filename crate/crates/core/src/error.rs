use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: duplicate id `{id}`")]
    DuplicateId { path: PathBuf, id: String },

    #[error("invalid dependency tree: {0}")]
    InvalidTree(String),

    #[error("{path}: sentence {sentence}: {msg}")]
    Conllu { path: PathBuf, sentence: usize, msg: String },

    #[error("non-finite value {value} for `{id}`")]
    NonFinite { id: String, value: f64 },

    #[error("pair `{0}` has no semantic score")]
    MissingSem(String),

    #[error("empty candidate token sequence")]
    EmptyCandidate,

    #[error("no {side} token is in the embedding vocabulary")]
    AllOutOfVocabulary { side: &'static str },

    #[error("averaged {side} sentence vector has zero norm")]
    ZeroNorm { side: &'static str },

    #[error("pair `{id}`: {source}")]
    Pair {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("values have zero variance")]
    ZeroVariance,

    #[error("column `{0}` is constant")]
    ConstantColumn(String),

    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("design matrix is singular or ill-conditioned (condition number {condition:.3e}); collinear columns: {}", columns.join(", "))]
    Singular { condition: f64, columns: Vec<String> },

    #[error("id sets do not intersect")]
    EmptyJoin,

    #[error("factor `{0}` missing from row")]
    MissingFactor(String),

    #[error("table `{table}` has no score for `{id}`")]
    MissingId { table: String, id: String },

    #[error("unknown metric `{0}`")]
    UnknownMember(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }

    pub(crate) fn for_pair(self, id: &str) -> Self {
        Error::Pair { id: id.to_string(), source: Box::new(self) }
    }
}
