//! Deterministic synthetic corpus generator for evaluation and
//! benchmarking.
//!
//! Each category gets its own word pool plus an anchor word that appears in
//! every phrase of the category with a fixed repeat count. The `overlap`
//! parameter is the probability that a non-anchor word slot draws from a
//! pool shared across categories instead of the category pool. At overlap
//! 0 the per-category vocabularies are fully disjoint, which makes
//! 1-nearest-neighbor retrieval provably exact: a held-out phrase shares
//! its anchor (and only same-category phrases share anything) with every
//! phrase of its own category.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kb::CorpusDocument;

/// Shape of a generated corpus.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub categories: usize,
    pub phrases_per_category: usize,
    /// Distinct non-anchor words per phrase.
    pub words_per_phrase: usize,
    /// Size of each category's private word pool.
    pub vocab_per_category: usize,
    /// Size of the pool shared across categories.
    pub shared_vocab: usize,
    /// Probability in [0, 1] that a word slot draws from the shared pool.
    pub overlap: f64,
    /// Occurrences of the category anchor word in every phrase.
    pub anchor_repeats: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The 10-category, 300-phrase-per-category scale at a given overlap.
    pub fn table_scale(overlap: f64, seed: u64) -> Self {
        SyntheticSpec {
            categories: 10,
            phrases_per_category: 300,
            words_per_phrase: 7,
            vocab_per_category: 40,
            shared_vocab: 60,
            overlap,
            anchor_repeats: 3,
            seed,
        }
    }
}

/// Generates the corpus. Output is fully determined by the parameters,
/// seed included, and independent of platform.
pub fn generate(spec: &SyntheticSpec) -> Vec<CorpusDocument> {
    assert!(spec.categories >= 1, "need at least one category");
    assert!(
        spec.words_per_phrase <= spec.vocab_per_category,
        "phrase cannot hold more distinct words than the category pool"
    );
    assert!(
        spec.overlap == 0.0 || spec.words_per_phrase <= spec.shared_vocab,
        "phrase cannot hold more distinct words than the shared pool"
    );
    assert!((0.0..=1.0).contains(&spec.overlap), "overlap must be in [0, 1]");

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shared_pool: Vec<String> = (0..spec.shared_vocab).map(|i| format!("shw{i:03}")).collect();

    let mut corpus = Vec::with_capacity(spec.categories * spec.phrases_per_category);
    for cat in 0..spec.categories {
        let category = format!("cat{cat:02}");
        let anchor = format!("c{cat:02}anchor");
        let category_pool: Vec<String> = (0..spec.vocab_per_category)
            .map(|i| format!("c{cat:02}w{i:03}"))
            .collect();
        for _ in 0..spec.phrases_per_category {
            let mut own = category_pool.clone();
            own.shuffle(&mut rng);
            let mut shared = shared_pool.clone();
            shared.shuffle(&mut rng);
            let mut words: Vec<&str> = Vec::with_capacity(spec.anchor_repeats + spec.words_per_phrase);
            for _ in 0..spec.anchor_repeats {
                words.push(&anchor);
            }
            let (mut own_next, mut shared_next) = (0, 0);
            for _ in 0..spec.words_per_phrase {
                let from_shared = spec.overlap > 0.0 && rng.gen_bool(spec.overlap);
                if from_shared && shared_next < shared.len() {
                    words.push(&shared[shared_next]);
                    shared_next += 1;
                } else {
                    words.push(&own[own_next]);
                    own_next += 1;
                }
            }
            corpus.push(CorpusDocument::new(&category, words.join(" ")));
        }
    }
    corpus
}
