use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::IngestIssue;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("language `{language}` missing for `{item}`")]
    MissingLanguage { item: String, language: String },

    #[error("outside the bound's domain: {0}")]
    Domain(String),

    #[error("shuffling needs at least 2 triples, got {0}")]
    DegenerateShuffle(usize),

    #[error("no records for language `{0}`")]
    EmptyCohort(String),

    #[error("taxonomy: {0}")]
    Taxonomy(String),

    #[error("not a binary partition: {0}")]
    Partition(String),

    #[error("prompt spec: {0}")]
    PromptSpec(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("dangling reference to `{0}`")]
    DanglingReference(String),

    #[error("pivot language `{0}` not present in report")]
    Pivot(String),

    #[error("{} validation error(s) in {}", .issues.len(), .path.display())]
    Ingest { path: PathBuf, issues: Vec<IngestIssue> },

    #[error("triple {index}: {source}")]
    AtTriple {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad input data rather than by the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
