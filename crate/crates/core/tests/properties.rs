//! Property tests for the pipeline, vector-space, metric, search and
//! persistence invariants.

use proptest::prelude::*;

use domainknn::kb::{build_kb, load_kb, save_kb, BuildConfig, CorpusDocument};
use domainknn::knn::{classify, query, query_with_workers, ClassifyConfig, Neighbor};
use domainknn::metrics::Metric;
use domainknn::pipeline::{
    lemmatize, preprocess, remove_stopwords, tokenize, LemmaLexicon, PipelineConfig, StopwordList,
    Token,
};
use domainknn::vectorspace::{
    build_vocabulary, extend_query, pad_row, vectorize, SparseVector, VectorizeMode,
};

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

const POOL: [&str; 12] = [
    "adsl", "fibra", "modem", "offerta", "pasta", "pizza", "forno", "sugo", "gatto", "cane",
    "casa", "banda",
];

fn word() -> impl Strategy<Value = &'static str> {
    prop::sample::select(&POOL[..])
}

fn text() -> impl Strategy<Value = String> {
    // free-form unicode plus pool words so either side of the pipeline is hit
    prop_oneof![
        "[ -~]{0,40}",
        prop::collection::vec(word(), 0..8).prop_map(|w| w.join(" ")),
        "\\PC{0,20}",
    ]
}

fn sparse_pair(max_dim: usize, integer: bool) -> impl Strategy<Value = (SparseVector, SparseVector)> {
    (1..=max_dim).prop_flat_map(move |dim| {
        let one = move || {
            let value = if integer {
                (1..=9u32).prop_map(|v| v as f64).boxed()
            } else {
                (0.1f64..10.0).boxed()
            };
            prop::collection::vec(prop::option::of(value), dim).prop_map(move |slots| {
                let entries = slots
                    .into_iter()
                    .enumerate()
                    .filter_map(|(i, v)| v.map(|v| (i, v)))
                    .collect();
                SparseVector::from_entries(dim, entries).expect("generated entries are valid")
            })
        };
        (one(), one())
    })
}

fn corpus(max_docs: usize) -> impl Strategy<Value = Vec<CorpusDocument>> {
    prop::collection::vec(
        (
            prop::sample::select(&["alpha", "beta", "gamma"][..]),
            prop::collection::vec(word(), 1..6),
        ),
        2..=max_docs,
    )
    .prop_map(|docs| {
        docs.into_iter()
            .map(|(cat, words)| CorpusDocument::new(cat, words.join(" ")))
            .collect()
    })
}

// ---------------------------------------------------------------------------
// dense reference implementations (independent of the sparse merge-join)
// ---------------------------------------------------------------------------

fn dense_distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    match metric {
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let n2a: f64 = a.iter().map(|x| x * x).sum();
            let n2b: f64 = b.iter().map(|x| x * x).sum();
            (1.0 - dot / (n2a * n2b).sqrt()).max(0.0)
        }
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Metric::Chebyshev => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
        Metric::Canberra => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                if *x == 0.0 && *y == 0.0 {
                    0.0
                } else {
                    (x - y).abs() / (x.abs() + y.abs())
                }
            })
            .sum(),
        Metric::Hamming => a.iter().zip(b).filter(|(x, y)| x != y).count() as f64,
    }
}

// ---------------------------------------------------------------------------
// pipeline invariants
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn preprocess_equals_stage_composition(text in text()) {
        let config = PipelineConfig::new(
            StopwordList::from_terms(["adsl", "e", "il"]),
            LemmaLexicon::from_pairs([("pizze", "pizza"), ("gatti", "gatto")]).unwrap(),
        );
        let staged = lemmatize(
            remove_stopwords(tokenize(&text), &config.stopwords),
            &config.lexicon,
        );
        prop_assert_eq!(preprocess(&text, &config), staged);
    }

    #[test]
    fn tokenize_is_idempotent_on_rejoined_output(text in text()) {
        let once = tokenize(&text);
        let rejoined = once.iter().map(Token::as_str).collect::<Vec<_>>().join(" ");
        prop_assert_eq!(tokenize(&rejoined), once);
    }

    #[test]
    fn stage_length_laws(text in text()) {
        let tokens = tokenize(&text);
        let stop = StopwordList::from_terms(["pizza", "a"]);
        let lex = LemmaLexicon::from_pairs([("fibra", "fibre")]).unwrap();
        let filtered = remove_stopwords(tokens.clone(), &stop);
        prop_assert!(filtered.len() <= tokens.len());
        prop_assert_eq!(lemmatize(filtered.clone(), &lex).len(), filtered.len());
    }

    #[test]
    fn no_stage_output_contains_uppercase_or_separators(text in text()) {
        let config = PipelineConfig::new(
            StopwordList::from_terms(["il"]),
            LemmaLexicon::from_pairs([("case", "casa")]).unwrap(),
        );
        for token in preprocess(&text, &config) {
            prop_assert!(!token.as_str().is_empty());
            for c in token.as_str().chars() {
                prop_assert!(c.is_alphanumeric(), "separator {c:?} in token");
            }
            // lowercased form is a fixed point (chars without a lowercase
            // mapping are their own lowercase form)
            prop_assert_eq!(token.as_str().to_lowercase(), token.as_str());
        }
    }
}

// ---------------------------------------------------------------------------
// vector-space invariants
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn count_entries_sum_to_in_vocab_token_count(
        doc in prop::collection::vec(word(), 0..30),
        vocab_words in prop::collection::vec(word(), 1..8),
    ) {
        let vocab_doc = vocab_words.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ");
        let vocab = build_vocabulary(&[tokenize(&vocab_doc)]).unwrap();
        let tokens: Vec<Token> = doc.iter().flat_map(|w| tokenize(w)).collect();
        let v = vectorize(&tokens, &vocab, VectorizeMode::Count);
        let sum: f64 = v.entries().iter().map(|&(_, x)| x).sum();
        let in_vocab = tokens.iter().filter(|t| vocab.index_of(t.as_str()).is_some()).count();
        prop_assert_eq!(sum as usize, in_vocab);
    }

    #[test]
    fn binary_entries_are_the_indicator_of_counts(
        doc in prop::collection::vec(word(), 0..30),
    ) {
        let vocab = build_vocabulary(&[tokenize(&POOL.join(" "))]).unwrap();
        let tokens: Vec<Token> = doc.iter().flat_map(|w| tokenize(w)).collect();
        let counts = vectorize(&tokens, &vocab, VectorizeMode::Count);
        let binary = vectorize(&tokens, &vocab, VectorizeMode::Binary);
        let indicator: Vec<(usize, f64)> =
            counts.entries().iter().map(|&(i, _)| (i, 1.0)).collect();
        prop_assert_eq!(binary.entries(), &indicator[..]);
    }

    #[test]
    fn extend_query_without_oov_is_plain_count_vector(
        doc in prop::collection::vec(word(), 1..20),
    ) {
        let vocab = build_vocabulary(&[tokenize(&POOL.join(" "))]).unwrap();
        let tokens: Vec<Token> = doc.iter().flat_map(|w| tokenize(w)).collect();
        let extended = extend_query(&tokens, &vocab, 2.5).unwrap();
        prop_assert!(extended.extra_dimensions.is_empty());
        prop_assert_eq!(extended.vector, vectorize(&tokens, &vocab, VectorizeMode::Count));
    }

    #[test]
    fn padding_preserves_every_metric((a, b) in sparse_pair(20, false), extra in 1..10usize) {
        let target = a.dim() + extra;
        let pa = pad_row(&a, target).unwrap();
        let pb = pad_row(&b, target).unwrap();
        for metric in Metric::ALL {
            let before = metric.distance(&a, &b);
            let after = metric.distance(&pa, &pb);
            match (before, after) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y, "{} changed under padding", metric),
                (Err(_), Err(_)) => {} // zero vectors stay zero vectors
                _ => prop_assert!(false, "{} error state changed under padding", metric),
            }
        }
    }

    #[test]
    fn vocabulary_build_is_order_insensitive(docs in corpus(10), rotation in 0..10usize) {
        let tokenized: Vec<Vec<Token>> = docs.iter().map(|d| tokenize(&d.text)).collect();
        let mut rotated = tokenized.clone();
        let shift = rotation % rotated.len().max(1);
        rotated.rotate_left(shift);
        prop_assert_eq!(
            build_vocabulary(&tokenized).unwrap(),
            build_vocabulary(&rotated).unwrap()
        );
    }
}

// ---------------------------------------------------------------------------
// metric invariants
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn metrics_are_symmetric_with_zero_identity((a, b) in sparse_pair(25, false)) {
        for metric in Metric::ALL {
            if !a.is_zero() || metric != Metric::Cosine {
                prop_assert_eq!(metric.distance(&a, &a).unwrap(), 0.0, "{} identity", metric);
            }
            match (metric.distance(&a, &b), metric.distance(&b, &a)) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y, "{} symmetry", metric),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "{} asymmetric error", metric),
            }
        }
    }

    #[test]
    fn triangle_inequality_holds(
        (a, b) in sparse_pair(15, false),
        c_slots in prop::collection::vec(prop::option::of(0.1f64..10.0), 15),
    ) {
        let entries = c_slots
            .iter()
            .take(a.dim())
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .collect();
        let c = SparseVector::from_entries(a.dim(), entries).unwrap();
        for metric in [Metric::Euclidean, Metric::Manhattan, Metric::Chebyshev, Metric::Hamming] {
            let ab = metric.distance(&a, &b).unwrap();
            let bc = metric.distance(&b, &c).unwrap();
            let ac = metric.distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12, "{}: {ac} > {ab} + {bc}", metric);
        }
    }

    #[test]
    fn cosine_is_scale_invariant((a, b) in sparse_pair(25, false), alpha in 0.01f64..100.0) {
        prop_assume!(!a.is_zero() && !b.is_zero());
        let scaled = SparseVector::from_entries(
            b.dim(),
            b.entries().iter().map(|&(i, v)| (i, v * alpha)).collect(),
        )
        .unwrap();
        let d1 = Metric::Cosine.distance(&a, &b).unwrap();
        let d2 = Metric::Cosine.distance(&a, &scaled).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-9, "{d1} vs {d2}");
    }

    #[test]
    fn cosine_stays_in_unit_interval((a, b) in sparse_pair(25, false)) {
        prop_assume!(!a.is_zero() && !b.is_zero());
        let d = Metric::Cosine.distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d), "{d}");
    }

    #[test]
    fn appending_a_query_coordinate_never_decreases_cosine_distance(
        (a, b) in sparse_pair(20, false),
        extra_value in 0.5f64..5.0,
    ) {
        prop_assume!(!a.is_zero() && !b.is_zero());
        let mut entries = a.entries().to_vec();
        entries.push((a.dim(), extra_value));
        let extended = SparseVector::from_entries(a.dim() + 1, entries).unwrap();
        let padded_b = pad_row(&b, b.dim() + 1).unwrap();

        let before = Metric::Cosine.distance(&a, &b).unwrap();
        let after = Metric::Cosine.distance(&extended, &padded_b).unwrap();
        prop_assert!(after >= before - 1e-12, "{after} < {before}");

        let dot: f64 = a
            .entries()
            .iter()
            .map(|&(i, v)| v * b.value(i))
            .sum();
        if dot > 0.0 {
            prop_assert!(after > before, "penalized coordinate must strictly push away");
        }
    }

    #[test]
    fn sparse_distance_matches_dense_reference((a, b) in sparse_pair(25, false)) {
        let (da, db) = (a.to_dense(), b.to_dense());
        for metric in Metric::ALL {
            if metric == Metric::Cosine && (a.is_zero() || b.is_zero()) {
                continue;
            }
            let sparse = metric.distance(&a, &b).unwrap();
            let dense = dense_distance(metric, &da, &db);
            prop_assert!((sparse - dense).abs() <= 1e-12, "{}: {sparse} vs {dense}", metric);
        }
    }
}

// ---------------------------------------------------------------------------
// search invariants
// ---------------------------------------------------------------------------

fn naive_neighbors(
    rows: &[SparseVector],
    labels: &[usize],
    q: &SparseVector,
    metric: Metric,
    k: usize,
) -> Vec<Neighbor> {
    let mut scored: Vec<Neighbor> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let padded = q.to_dense();
            let mut dense_row = row.to_dense();
            dense_row.resize(padded.len(), 0.0);
            Neighbor {
                row_index: i,
                label: labels[i],
                distance: dense_distance(metric, &padded, &dense_row),
            }
        })
        .collect();
    scored.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.row_index.cmp(&b.row_index)));
    scored.truncate(k);
    scored
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn query_matches_naive_full_sort(docs in corpus(12), k in 1..6usize, metric_idx in 0..6usize) {
        let build = BuildConfig::default();
        let built = build_kb(&docs, &build).unwrap();
        let kb = built.kb;
        prop_assume!(k <= kb.num_rows());
        let metric = Metric::ALL[metric_idx];
        let q = {
            let tokens = tokenize("pizza casa drago");
            extend_query(&tokens, kb.vocabulary(), 2.5).unwrap().vector
        };
        let engine = query(&kb, &q, metric, k).unwrap();
        let naive = naive_neighbors(kb.rows(), kb.labels(), &q, metric, k);
        prop_assert_eq!(engine, naive);
    }

    #[test]
    fn query_is_bit_identical_across_worker_counts(docs in corpus(12), workers in 2..9usize) {
        let built = build_kb(&docs, &BuildConfig::default()).unwrap();
        let kb = built.kb;
        let q = extend_query(&tokenize("pasta banda zzz"), kb.vocabulary(), 2.5)
            .unwrap()
            .vector;
        let k = kb.num_rows();
        let sequential = query_with_workers(&kb, &q, Metric::Cosine, k, 1).unwrap();
        let parallel = query_with_workers(&kb, &q, Metric::Cosine, k, workers).unwrap();
        prop_assert_eq!(sequential, parallel);
    }

    #[test]
    fn adding_a_row_never_increases_min_distance(
        docs in corpus(10),
        extra_words in prop::collection::vec(word(), 1..5),
    ) {
        let build = BuildConfig::default();
        let kb = build_kb(&docs, &build).unwrap().kb;
        let mut extended_docs = docs.clone();
        extended_docs.push(CorpusDocument::new("alpha", extra_words.join(" ")));
        let kb2 = build_kb(&extended_docs, &build).unwrap().kb;
        // same vocabulary keeps the query comparable across both bases
        prop_assume!(kb.vocabulary() == kb2.vocabulary());

        let q = extend_query(&tokenize("fibra sugo"), kb.vocabulary(), 2.5)
            .unwrap()
            .vector;
        let before = query(&kb, &q, Metric::Cosine, 1).unwrap()[0].distance;
        let after = query(&kb2, &q, Metric::Cosine, 1).unwrap()[0].distance;
        prop_assert!(after <= before, "{after} > {before}");
    }

    #[test]
    fn classify_retrieves_a_kb_document_with_full_similarity(docs in corpus(10), pick in 0..10usize) {
        let build = BuildConfig::default();
        let kb = build_kb(&docs, &build).unwrap().kb;
        let doc = &docs[pick % docs.len()];
        prop_assume!(!tokenize(&doc.text).is_empty());
        let result = classify(&kb, &doc.text, &build, &ClassifyConfig::default()).unwrap();
        let similarity = result.similarity_value.unwrap();
        prop_assert!((similarity - 1.0).abs() <= 1e-9, "{similarity}");
        prop_assert!(result.in_domain);
    }

    #[test]
    fn kb_round_trips_through_disk(docs in corpus(10)) {
        let build = BuildConfig::default();
        let kb = build_kb(&docs, &build).unwrap().kb;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.json");
        save_kb(&kb, &path).unwrap();
        prop_assert_eq!(load_kb(&path).unwrap(), kb);
    }
}
