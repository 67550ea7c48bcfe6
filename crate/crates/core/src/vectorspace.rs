//! Vocabulary construction and the sparse bag-of-words encoding, including
//! the penalized out-of-vocabulary query extension.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::Token;

/// Bijective term-to-index map fixing the dimensionality of the vector
/// space. Terms are lexicographically ordered so vector layouts are
/// reproducible across runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from an explicit term list, which must be
    /// strictly lexicographically sorted and duplicate-free.
    pub fn from_sorted_terms(terms: Vec<String>) -> Result<Self> {
        for pair in terms.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::ConfigInvalid(format!(
                    "vocabulary terms must be strictly sorted: {:?} before {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Builds the vocabulary of all distinct tokens in the corpus,
/// lexicographically ordered.
pub fn build_vocabulary<D: AsRef<[Token]>>(corpus: &[D]) -> Result<Vocabulary> {
    let distinct: BTreeSet<&str> = corpus
        .iter()
        .flat_map(|doc| doc.as_ref().iter().map(Token::as_str))
        .collect();
    if distinct.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Vocabulary::from_sorted_terms(distinct.into_iter().map(str::to_string).collect())
}

/// Non-negative vector stored as (index, value) pairs sorted by index.
/// Zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Validates and normalizes raw entries: indices must be in range and
    /// distinct, values finite and non-negative. Zero values are dropped.
    pub fn from_entries(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_unstable_by_key(|&(i, _)| i);
        for &(i, v) in &entries {
            if i >= dim {
                return Err(Error::ConfigInvalid(format!(
                    "sparse entry index {i} out of range for dimension {dim}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::ConfigInvalid(format!(
                    "sparse entry value {v} at index {i} must be finite and positive"
                )));
            }
        }
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::ConfigInvalid(format!(
                    "duplicate sparse entry index {}",
                    pair[0].0
                )));
            }
        }
        Ok(SparseVector { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (non-zero) entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    /// Stored entries in ascending index order.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            dense[i] = v;
        }
        dense
    }
}

/// How token occurrences are turned into vector entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VectorizeMode {
    /// Entry = number of occurrences of the term.
    #[default]
    Count,
    /// Entry = 1 if the term occurs at all.
    Binary,
}

impl VectorizeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            VectorizeMode::Count => "count",
            VectorizeMode::Binary => "binary",
        }
    }
}

impl FromStr for VectorizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(VectorizeMode::Count),
            "binary" => Ok(VectorizeMode::Binary),
            other => Err(Error::ConfigInvalid(format!(
                "unknown vectorize mode {other:?} (expected count|binary)"
            ))),
        }
    }
}

/// Encodes tokens over the vocabulary. Out-of-vocabulary tokens are ignored
/// here; they are the business of [`extend_query`].
pub fn vectorize(tokens: &[Token], vocab: &Vocabulary, mode: VectorizeMode) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for token in tokens {
        if let Some(idx) = vocab.index_of(token.as_str()) {
            match mode {
                VectorizeMode::Count => *counts.entry(idx).or_insert(0.0) += 1.0,
                VectorizeMode::Binary => {
                    counts.entry(idx).or_insert(1.0);
                }
            }
        }
    }
    SparseVector {
        dim: vocab.len(),
        entries: counts.into_iter().collect(),
    }
}

/// A query vector extended with one penalized dimension per distinct
/// out-of-vocabulary term.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedQuery {
    /// Query vector of dimension vocabulary size + number of distinct OOV
    /// terms. OOV dimensions occupy the highest indices.
    pub vector: SparseVector,
    /// Distinct OOV terms with their raw counts, in first-occurrence order.
    pub extra_dimensions: Vec<(String, u64)>,
    pub penalty_factor: f64,
}

/// Counts in-vocabulary tokens into the base dimensions and gives each
/// distinct out-of-vocabulary term a fresh dimension holding
/// `count * penalty_factor`, in first-occurrence order.
pub fn extend_query(
    tokens: &[Token],
    vocab: &Vocabulary,
    penalty_factor: f64,
) -> Result<ExtendedQuery> {
    if !(penalty_factor > 0.0 && penalty_factor.is_finite()) {
        return Err(Error::ConfigInvalid(format!(
            "penalty factor must be positive, got {penalty_factor}"
        )));
    }
    let mut in_vocab: BTreeMap<usize, f64> = BTreeMap::new();
    let mut oov_order: Vec<String> = Vec::new();
    let mut oov_counts: HashMap<String, u64> = HashMap::new();
    for token in tokens {
        match vocab.index_of(token.as_str()) {
            Some(idx) => *in_vocab.entry(idx).or_insert(0.0) += 1.0,
            None => {
                let count = oov_counts.entry(token.as_str().to_string()).or_insert(0);
                if *count == 0 {
                    oov_order.push(token.as_str().to_string());
                }
                *count += 1;
            }
        }
    }
    let dim = vocab.len() + oov_order.len();
    let mut entries: Vec<(usize, f64)> = in_vocab.into_iter().collect();
    let mut extra = Vec::with_capacity(oov_order.len());
    for (offset, term) in oov_order.into_iter().enumerate() {
        let count = oov_counts[&term];
        entries.push((vocab.len() + offset, count as f64 * penalty_factor));
        extra.push((term, count));
    }
    Ok(ExtendedQuery {
        vector: SparseVector { dim, entries },
        extra_dimensions: extra,
        penalty_factor,
    })
}

/// Returns the same stored entries with the dimension raised to
/// `new_dimension`; appended coordinates are implicit zeros.
pub fn pad_row(row: &SparseVector, new_dimension: usize) -> Result<SparseVector> {
    if new_dimension < row.dim {
        return Err(Error::DimensionShrink {
            current: row.dim,
            requested: new_dimension,
        });
    }
    Ok(SparseVector {
        dim: new_dimension,
        entries: row.entries.clone(),
    })
}

/// Corpus-wide term totals, sorted by count descending with lexicographic
/// ascending tie-break.
pub fn term_frequencies<D: AsRef<[Token]>>(corpus: &[D]) -> Vec<(String, u64)> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in corpus {
        for token in doc.as_ref() {
            *counts.entry(token.as_str()).or_insert(0) += 1;
        }
    }
    let mut out: Vec<(String, u64)> = counts
        .into_iter()
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
