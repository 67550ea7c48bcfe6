//! Brute-force k-nearest-neighbor search and the domain-membership
//! decision.
//!
//! Every query scans the whole knowledge base. Row distances may be
//! computed on several worker threads; the merge is deterministic
//! (ascending distance, ties by ascending row index), so results are
//! bit-identical for any worker count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kb::{BuildConfig, KnowledgeBase};
use crate::metrics::Metric;
use crate::pipeline::preprocess;
use crate::vectorspace::{extend_query, pad_row, SparseVector};

/// One knowledge-base row at its distance from the query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Neighbor {
    #[serde(rename = "rowIndex")]
    pub row_index: usize,
    pub label: usize,
    pub distance: f64,
}

/// Classification parameters. Defaults follow the engine's fixed choices:
/// cosine metric, single nearest neighbor, membership threshold 0.5,
/// out-of-vocabulary penalty 2.5.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    pub metric: Metric,
    pub k: usize,
    /// Membership cutoff on the minimum cosine distance; at or below it the
    /// query is in-domain.
    pub threshold: f64,
    pub penalty_factor: f64,
    /// Worker threads for the row-distance scan. Never changes results.
    pub workers: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            metric: Metric::Cosine,
            k: 1,
            threshold: 0.5,
            penalty_factor: 2.5,
            workers: 1,
        }
    }
}

impl ClassifyConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::ConfigInvalid(format!(
                "threshold must be in [0, 1], got {}",
                self.threshold
            )));
        }
        if !(self.penalty_factor > 0.0 && self.penalty_factor.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "penalty factor must be positive, got {}",
                self.penalty_factor
            )));
        }
        if self.k == 0 {
            return Err(Error::ConfigInvalid("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Distances from `query` to every row, padded to the query dimension.
/// Row order is preserved.
fn row_distances(
    kb: &KnowledgeBase,
    query: &SparseVector,
    metric: Metric,
    workers: usize,
) -> Result<Vec<f64>> {
    if query.dim() < kb.row_dim() {
        return Err(Error::DimensionMismatch {
            left: query.dim(),
            right: kb.row_dim(),
        });
    }
    if metric == Metric::Cosine && query.is_zero() {
        return Err(Error::ZeroVector);
    }
    let rows = kb.rows();
    let compute = |row: &SparseVector| -> Result<f64> {
        let padded = pad_row(row, query.dim())?;
        metric.distance(query, &padded)
    };
    let workers = workers.max(1).min(rows.len().max(1));
    if workers == 1 {
        return rows.iter().map(compute).collect();
    }
    let mut distances = vec![0.0; rows.len()];
    let chunk = rows.len().div_ceil(workers);
    let mut first_err = None;
    std::thread::scope(|scope| {
        let handles: Vec<_> = rows
            .chunks(chunk)
            .zip(distances.chunks_mut(chunk))
            .map(|(row_chunk, out_chunk)| {
                scope.spawn(move || -> Result<()> {
                    for (row, out) in row_chunk.iter().zip(out_chunk) {
                        *out = compute(row)?;
                    }
                    Ok(())
                })
            })
            .collect();
        for handle in handles {
            if let Err(e) = handle.join().expect("distance worker panicked") {
                first_err.get_or_insert(e);
            }
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(distances),
    }
}

/// The k nearest rows, ascending by distance with ties broken by ascending
/// row index. Rows are padded to the query dimension before comparison.
pub fn query(
    kb: &KnowledgeBase,
    query_vector: &SparseVector,
    metric: Metric,
    k: usize,
) -> Result<Vec<Neighbor>> {
    query_with_workers(kb, query_vector, metric, k, 1)
}

/// [`query`] with an explicit worker count; the result never depends on it.
pub fn query_with_workers(
    kb: &KnowledgeBase,
    query_vector: &SparseVector,
    metric: Metric,
    k: usize,
    workers: usize,
) -> Result<Vec<Neighbor>> {
    if kb.num_rows() == 0 {
        return Err(Error::EmptyKnowledgeBase);
    }
    if k == 0 || k > kb.num_rows() {
        return Err(Error::KTooLarge {
            k,
            rows: kb.num_rows(),
        });
    }
    let distances = row_distances(kb, query_vector, metric, workers)?;
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| {
        distances[a]
            .total_cmp(&distances[b])
            .then_with(|| a.cmp(&b))
    });
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| Neighbor {
            row_index: i,
            label: kb.labels()[i],
            distance: distances[i],
        })
        .collect())
}

/// Majority label among the neighbors. A tie goes to the label of the
/// nearest neighbor holding one of the tied labels, so k = 1 reduces to
/// taking the top sorted row.
///
/// `neighbors` must be non-empty, sorted ascending by distance, with every
/// label below `num_classes`.
pub fn vote(neighbors: &[Neighbor], num_classes: usize) -> usize {
    assert!(!neighbors.is_empty(), "vote requires at least one neighbor");
    let mut counts = vec![0usize; num_classes];
    for n in neighbors {
        assert!(n.label < num_classes, "label {} out of range", n.label);
        counts[n.label] += 1;
    }
    let best = *counts.iter().max().expect("non-empty counts");
    neighbors
        .iter()
        .find(|n| counts[n.label] == best)
        .expect("some neighbor holds the winning label")
        .label
}

/// Full classification outcome for one input text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    /// `1 - min cosine distance`. Populated when the ranking metric is
    /// cosine (and for the degenerate empty-query result); other metrics
    /// report their raw minimum under `min_distance` instead.
    #[serde(rename = "similarityValue")]
    pub similarity_value: Option<f64>,
    /// One-hot over the class ids; all zeros for an unclassifiable query.
    #[serde(rename = "knnResult")]
    pub knn_result: Vec<f64>,
    /// Winning class id; `None` when the query preprocessed to nothing.
    pub label: Option<usize>,
    pub category: Option<String>,
    /// Whether the minimum cosine distance is at or below the threshold.
    #[serde(rename = "inDomain")]
    pub in_domain: bool,
    pub metric: Metric,
    pub k: usize,
    /// Minimum distance under the configured ranking metric.
    #[serde(rename = "minDistance")]
    pub min_distance: Option<f64>,
    /// The k retained neighbors, nearest first.
    pub neighbors: Vec<Neighbor>,
}

impl ClassificationResult {
    fn unclassifiable(kb: &KnowledgeBase, config: &ClassifyConfig) -> Self {
        ClassificationResult {
            similarity_value: Some(0.0),
            knn_result: vec![0.0; kb.num_classes()],
            label: None,
            category: None,
            in_domain: false,
            metric: config.metric,
            k: config.k,
            min_distance: None,
            neighbors: Vec::new(),
        }
    }
}

/// Classifies a raw sentence against the knowledge base.
///
/// The text runs through the same preprocessing pipeline the base was built
/// with (`build` must fingerprint-match, else the call is rejected), gets
/// the penalized out-of-vocabulary extension, and is compared against every
/// padded row. Membership is always decided on the minimum cosine distance,
/// even when another metric ranks the neighbors.
pub fn classify(
    kb: &KnowledgeBase,
    text: &str,
    build: &BuildConfig,
    config: &ClassifyConfig,
) -> Result<ClassificationResult> {
    config.validate()?;
    if kb.num_rows() == 0 {
        return Err(Error::EmptyKnowledgeBase);
    }
    if build.fingerprint() != kb.fingerprint() {
        return Err(Error::ConfigInvalid(
            "pipeline fingerprint mismatch: the knowledge base was built with a different \
             stopword list, lemma lexicon, or vectorize mode"
                .into(),
        ));
    }
    let tokens = preprocess(text, &build.pipeline);
    if tokens.is_empty() {
        return Ok(ClassificationResult::unclassifiable(kb, config));
    }
    let extended = extend_query(&tokens, kb.vocabulary(), config.penalty_factor)?;
    let q = &extended.vector;

    let neighbors = query_with_workers(kb, q, config.metric, config.k, config.workers)?;
    let min_distance = neighbors[0].distance;
    let min_cosine = if config.metric == Metric::Cosine {
        min_distance
    } else {
        query_with_workers(kb, q, Metric::Cosine, 1, config.workers)?[0].distance
    };

    let label = vote(&neighbors, kb.num_classes());
    let mut knn_result = vec![0.0; kb.num_classes()];
    knn_result[label] = 1.0;
    Ok(ClassificationResult {
        similarity_value: (config.metric == Metric::Cosine).then_some(1.0 - min_cosine),
        knn_result,
        label: Some(label),
        category: kb.category_name(label).map(str::to_string),
        in_domain: min_cosine <= config.threshold,
        metric: config.metric,
        k: config.k,
        min_distance: Some(min_distance),
        neighbors,
    })
}

/// Square matrix of pairwise distances between knowledge-base rows:
/// symmetric with a zero diagonal.
pub fn pairwise_distance_matrix(kb: &KnowledgeBase, metric: Metric) -> Result<Vec<Vec<f64>>> {
    let n = kb.num_rows();
    if n == 0 {
        return Err(Error::EmptyKnowledgeBase);
    }
    let rows = kb.rows();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = metric.distance(&rows[i], &rows[j])?;
            matrix[i][j] = d;
            matrix[j][i] = d;
        }
    }
    Ok(matrix)
}
