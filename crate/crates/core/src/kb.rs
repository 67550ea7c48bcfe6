//! Corpus ingestion, knowledge-base construction and persistence.
//!
//! A knowledge base is an immutable matrix of labeled document vectors over
//! a fixed vocabulary, stamped with a fingerprint of the preprocessing
//! pipeline that produced it. Queries preprocessed under a different
//! pipeline are rejected instead of silently mixing vector spaces.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{preprocess, PipelineConfig, Token};
use crate::vectorspace::{build_vocabulary, vectorize, SparseVector, VectorizeMode, Vocabulary};

/// One labeled raw document of the ingestion corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub category: String,
    pub text: String,
}

impl CorpusDocument {
    pub fn new(category: impl Into<String>, text: impl Into<String>) -> Self {
        CorpusDocument {
            category: category.into(),
            text: text.into(),
        }
    }
}

/// Preprocessing pipeline plus vectorization mode; what a knowledge base is
/// built with, and what a query must match.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildConfig {
    pub pipeline: PipelineConfig,
    pub mode: VectorizeMode,
}

impl BuildConfig {
    pub fn new(pipeline: PipelineConfig, mode: VectorizeMode) -> Self {
        BuildConfig { pipeline, mode }
    }

    /// Digest over the stopword list, lemma lexicon and mode. Any change to
    /// the pipeline changes the fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"stopwords\n");
        for term in self.pipeline.stopwords.iter() {
            hasher.update((term.len() as u64).to_le_bytes());
            hasher.update(term.as_bytes());
        }
        hasher.update(b"lemmas\n");
        for (form, lemma) in self.pipeline.lexicon.iter() {
            hasher.update((form.len() as u64).to_le_bytes());
            hasher.update(form.as_bytes());
            hasher.update((lemma.len() as u64).to_le_bytes());
            hasher.update(lemma.as_bytes());
        }
        hasher.update(b"mode\n");
        hasher.update(self.mode.as_str().as_bytes());
        hex_digest(hasher)
    }
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Immutable labeled vector matrix: the search target of every query.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    vocabulary: Vocabulary,
    rows: Vec<SparseVector>,
    labels: Vec<usize>,
    categories: Vec<String>,
    fingerprint: String,
}

impl KnowledgeBase {
    /// Assembles a knowledge base from parts, validating the invariants:
    /// parallel rows/labels, labels within range, distinct sorted
    /// categories, rows of vocabulary dimension with at least one positive
    /// entry.
    pub fn from_parts(
        vocabulary: Vocabulary,
        rows: Vec<SparseVector>,
        labels: Vec<usize>,
        categories: Vec<String>,
        fingerprint: String,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::ConfigInvalid(format!(
                "rows ({}) and labels ({}) must be parallel",
                rows.len(),
                labels.len()
            )));
        }
        for pair in categories.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::ConfigInvalid(
                    "categories must be distinct and lexicographically sorted".into(),
                ));
            }
        }
        for (i, label) in labels.iter().enumerate() {
            if *label >= categories.len() {
                return Err(Error::ConfigInvalid(format!(
                    "label {label} of row {i} exceeds {} categories",
                    categories.len()
                )));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.dim() != vocabulary.len() {
                return Err(Error::ConfigInvalid(format!(
                    "row {i} has dimension {} but the vocabulary has {} terms",
                    row.dim(),
                    vocabulary.len()
                )));
            }
            if row.is_zero() {
                return Err(Error::ConfigInvalid(format!("row {i} is a zero vector")));
            }
        }
        Ok(KnowledgeBase {
            vocabulary,
            rows,
            labels,
            categories,
            fingerprint,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_classes(&self) -> usize {
        self.categories.len()
    }

    /// Dimension of every row; equals the vocabulary size.
    pub fn row_dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn category_name(&self, label: usize) -> Option<&str> {
        self.categories.get(label).map(String::as_str)
    }
}

/// Result of a knowledge-base build: the base itself plus the positions of
/// corpus documents that preprocessed to nothing and were dropped.
#[derive(Debug, Clone)]
pub struct KbBuild {
    pub kb: KnowledgeBase,
    /// Zero-based positions in the input corpus of documents excluded
    /// because they vectorized to zero.
    pub dropped: Vec<usize>,
}

/// Preprocesses every document, builds the vocabulary over all of them,
/// vectorizes each in the configured mode, and assigns class ids by
/// lexicographic category order.
///
/// Documents that vectorize to zero are dropped, with their corpus
/// positions reported. Class ids cover every input category, including any
/// whose documents were all dropped, so ids never shift when a document is
/// filtered away.
pub fn build_kb(corpus: &[CorpusDocument], config: &BuildConfig) -> Result<KbBuild> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for (i, doc) in corpus.iter().enumerate() {
        if doc.category.is_empty() {
            return Err(Error::CorpusFormat {
                record: i + 1,
                message: "category must be non-empty".into(),
            });
        }
    }

    let tokenized: Vec<Vec<Token>> = corpus
        .iter()
        .map(|doc| preprocess(&doc.text, &config.pipeline))
        .collect();
    if tokenized.iter().all(Vec::is_empty) {
        return Err(Error::AllDocumentsFiltered);
    }
    let vocabulary = build_vocabulary(&tokenized)?;

    let mut categories: Vec<String> = corpus.iter().map(|d| d.category.clone()).collect();
    categories.sort();
    categories.dedup();
    let label_of = |category: &str| -> usize {
        categories
            .binary_search_by(|c| c.as_str().cmp(category))
            .expect("category was collected above")
    };

    let mut rows = Vec::with_capacity(corpus.len());
    let mut labels = Vec::with_capacity(corpus.len());
    let mut dropped = Vec::new();
    for (i, (doc, tokens)) in corpus.iter().zip(&tokenized).enumerate() {
        let row = vectorize(tokens, &vocabulary, config.mode);
        if row.is_zero() {
            dropped.push(i);
        } else {
            rows.push(row);
            labels.push(label_of(&doc.category));
        }
    }

    let kb = KnowledgeBase::from_parts(
        vocabulary,
        rows,
        labels,
        categories,
        config.fingerprint(),
    )?;
    Ok(KbBuild { kb, dropped })
}

// ---------------------------------------------------------------------------
// Corpus file readers
// ---------------------------------------------------------------------------

/// Reads a corpus file. Paths ending in `.csv` are parsed as CSV with a
/// `category,text` header; everything else is parsed as JSON Lines with one
/// `{"category": ..., "text": ...}` object per line.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusDocument>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        read_corpus_csv(file)
    } else {
        read_corpus_jsonl(file)
    }
}

/// Parses JSON Lines corpus data; blank lines are skipped.
pub fn read_corpus_jsonl(reader: impl Read) -> Result<Vec<CorpusDocument>> {
    let mut docs = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|source| Error::IoFailure {
            path: "<corpus>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: CorpusDocument =
            serde_json::from_str(&line).map_err(|e| Error::CorpusFormat {
                record: idx + 1,
                message: e.to_string(),
            })?;
        if doc.category.is_empty() {
            return Err(Error::CorpusFormat {
                record: idx + 1,
                message: "category must be non-empty".into(),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Parses CSV corpus data with a `category,text` header.
pub fn read_corpus_csv(reader: impl Read) -> Result<Vec<CorpusDocument>> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut docs = Vec::new();
    for (idx, record) in csv_reader.deserialize::<CorpusDocument>().enumerate() {
        let doc = record.map_err(|e| Error::CorpusFormat {
            record: idx + 1,
            message: e.to_string(),
        })?;
        if doc.category.is_empty() {
            return Err(Error::CorpusFormat {
                record: idx + 1,
                message: "category must be non-empty".into(),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// Current knowledge-base file format version.
pub const KB_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct KbFileProbe {
    #[serde(rename = "kbFormat")]
    kb_format: u32,
}

#[derive(Serialize, Deserialize)]
struct KbFile {
    #[serde(rename = "kbFormat")]
    kb_format: u32,
    vocabulary: Vec<String>,
    /// One row per document: `[index, value]` pairs in ascending index
    /// order. Row dimension is implicitly the vocabulary size.
    rows: Vec<Vec<(usize, f64)>>,
    labels: Vec<usize>,
    categories: Vec<String>,
    #[serde(rename = "pipelineFingerprint")]
    pipeline_fingerprint: String,
    checksum: String,
}

/// Digest over the semantic content of a knowledge base, independent of
/// JSON formatting. Float values enter by their exact bit pattern.
fn content_checksum(
    vocabulary: &[String],
    rows: &[Vec<(usize, f64)>],
    labels: &[usize],
    categories: &[String],
    fingerprint: &str,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"domainknn-kb-v1");
    hasher.update((vocabulary.len() as u64).to_le_bytes());
    for term in vocabulary {
        hasher.update((term.len() as u64).to_le_bytes());
        hasher.update(term.as_bytes());
    }
    hasher.update((rows.len() as u64).to_le_bytes());
    for row in rows {
        hasher.update((row.len() as u64).to_le_bytes());
        for &(i, v) in row {
            hasher.update((i as u64).to_le_bytes());
            hasher.update(v.to_bits().to_le_bytes());
        }
    }
    hasher.update((labels.len() as u64).to_le_bytes());
    for &label in labels {
        hasher.update((label as u64).to_le_bytes());
    }
    hasher.update((categories.len() as u64).to_le_bytes());
    for category in categories {
        hasher.update((category.len() as u64).to_le_bytes());
        hasher.update(category.as_bytes());
    }
    hasher.update((fingerprint.len() as u64).to_le_bytes());
    hasher.update(fingerprint.as_bytes());
    hex_digest(hasher)
}

/// Writes the knowledge base as a versioned, checksummed JSON container.
pub fn save_kb(kb: &KnowledgeBase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let vocabulary: Vec<String> = kb.vocabulary.terms().to_vec();
    let rows: Vec<Vec<(usize, f64)>> = kb.rows.iter().map(|r| r.entries().to_vec()).collect();
    let checksum = content_checksum(
        &vocabulary,
        &rows,
        &kb.labels,
        &kb.categories,
        &kb.fingerprint,
    );
    let file = KbFile {
        kb_format: KB_FORMAT_VERSION,
        vocabulary,
        rows,
        labels: kb.labels.clone(),
        categories: kb.categories.clone(),
        pipeline_fingerprint: kb.fingerprint.clone(),
        checksum,
    };
    let json = serde_json::to_string(&file).expect("knowledge base serializes infallibly");
    std::fs::write(path, json).map_err(|source| Error::IoFailure {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a knowledge base written by [`save_kb`], verifying the format
/// version, the checksum and every structural invariant.
pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    let probe: KbFileProbe = serde_json::from_str(&text)
        .map_err(|e| Error::CorruptFile(format!("not a knowledge base file: {e}")))?;
    if probe.kb_format != KB_FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            found: probe.kb_format,
            expected: KB_FORMAT_VERSION,
        });
    }
    let file: KbFile = serde_json::from_str(&text)
        .map_err(|e| Error::CorruptFile(format!("malformed container: {e}")))?;
    let expected = content_checksum(
        &file.vocabulary,
        &file.rows,
        &file.labels,
        &file.categories,
        &file.pipeline_fingerprint,
    );
    if expected != file.checksum {
        return Err(Error::CorruptFile("checksum mismatch".into()));
    }
    let vocabulary = Vocabulary::from_sorted_terms(file.vocabulary)
        .map_err(|e| Error::CorruptFile(e.to_string()))?;
    let dim = vocabulary.len();
    let rows = file
        .rows
        .into_iter()
        .map(|entries| SparseVector::from_entries(dim, entries))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::CorruptFile(e.to_string()))?;
    KnowledgeBase::from_parts(
        vocabulary,
        rows,
        file.labels,
        file.categories,
        file.pipeline_fingerprint,
    )
    .map_err(|e| Error::CorruptFile(e.to_string()))
}
