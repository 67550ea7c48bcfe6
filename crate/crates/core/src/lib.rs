//! Sentence domain classification by brute-force k-nearest-neighbor search
//! over bag-of-words vectors.
//!
//! A knowledge base is built from a labeled corpus: every document runs
//! through a tokenize / stopword / lemma pipeline and becomes a sparse
//! term-count vector over the corpus vocabulary. A query sentence takes the
//! same pipeline; words the vocabulary does not know get fresh dimensions
//! penalized by a configurable factor (default 2.5), which pushes
//! out-of-vocabulary text away from every stored row. The sentence belongs
//! to the domain when its minimum cosine distance to the knowledge base is
//! at or below the membership threshold (default 0.5).
//!
//! ```
//! use domainknn::kb::{build_kb, BuildConfig, CorpusDocument};
//! use domainknn::knn::{classify, ClassifyConfig};
//!
//! let corpus = vec![
//!     CorpusDocument::new("telco", "offerta adsl e fibra"),
//!     CorpusDocument::new("food", "pizza al forno"),
//! ];
//! let build = BuildConfig::default();
//! let kb = build_kb(&corpus, &build).unwrap().kb;
//! let result = classify(&kb, "nuova offerta fibra", &build, &ClassifyConfig::default()).unwrap();
//! assert_eq!(result.category.as_deref(), Some("telco"));
//! ```

pub mod error;
pub mod eval;
pub mod kb;
pub mod knn;
pub mod metrics;
pub mod pipeline;
pub mod synthetic;
pub mod vectorspace;

pub use error::{Error, Result};
