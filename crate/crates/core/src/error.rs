//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while building, persisting or querying a
/// knowledge base.
#[derive(Debug, Error)]
pub enum Error {
    /// The corpus contains no tokens at all.
    #[error("corpus is empty: no tokens to build a vocabulary from")]
    EmptyCorpus,

    /// Every document in the corpus was filtered down to nothing.
    #[error("all documents were filtered to empty token sequences")]
    AllDocumentsFiltered,

    /// A vector was asked to shrink, which would drop stored entries.
    #[error("cannot pad vector of dimension {current} down to {requested}")]
    DimensionShrink { current: usize, requested: usize },

    /// Two vectors of different dimension were compared.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Cosine distance is undefined for a zero vector.
    #[error("zero vector: cosine distance is undefined for a fully filtered document")]
    ZeroVector,

    /// The knowledge base has no rows to search.
    #[error("knowledge base is empty")]
    EmptyKnowledgeBase,

    /// k is outside 1..=rows.
    #[error("k = {k} is invalid for a knowledge base of {rows} rows")]
    KTooLarge { k: usize, rows: usize },

    /// A classification or build parameter is out of range, or the provided
    /// pipeline does not match the one the knowledge base was built with.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    /// Underlying I/O failure.
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The knowledge-base file declares a format this build does not speak.
    #[error("knowledge base format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },

    /// The knowledge-base file is damaged: unparseable, checksum mismatch,
    /// or internally inconsistent.
    #[error("corrupt knowledge base file: {0}")]
    CorruptFile(String),

    /// A corpus line could not be parsed.
    #[error("corpus format error at record {record}: {message}")]
    CorpusFormat { record: usize, message: String },

    /// A stopword or lemma resource file is malformed.
    #[error("resource format error in {path} at line {line}: {message}")]
    ResourceFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// The evaluation protocol cannot run on this corpus.
    #[error("evaluation protocol infeasible: {0}")]
    ProtocolInfeasible(String),

    /// A metric name did not match any known metric.
    #[error("unknown metric {0:?} (expected cosine|euclidean|manhattan|chebyshev|canberra|hamming)")]
    UnknownMetric(String),
}

impl Error {
    /// Stable machine-readable kind tag, used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyCorpus => "EmptyCorpus",
            Error::AllDocumentsFiltered => "AllDocumentsFiltered",
            Error::DimensionShrink { .. } => "DimensionShrink",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ZeroVector => "ZeroVector",
            Error::EmptyKnowledgeBase => "EmptyKnowledgeBase",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::IoFailure { .. } => "IoFailure",
            Error::FormatVersionMismatch { .. } => "FormatVersionMismatch",
            Error::CorruptFile(_) => "CorruptFile",
            Error::CorpusFormat { .. } => "CorpusFormat",
            Error::ResourceFormat { .. } => "ResourceFormat",
            Error::ProtocolInfeasible(_) => "ProtocolInfeasible",
            Error::UnknownMetric(_) => "UnknownMetric",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
