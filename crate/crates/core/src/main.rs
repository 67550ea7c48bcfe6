//! Command-line surface: build knowledge bases, classify sentences,
//! evaluate metric × k accuracy grids, and benchmark query latency.
//!
//! Machine-readable JSON goes to stdout; human-oriented output (the
//! evaluation table) and error JSON go to stderr. Exit codes: 0 success,
//! 1 operational error, 2 usage error.

use std::io::BufRead;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use domainknn::error::{Error, Result};
use domainknn::eval::{evaluate, EvalOptions, Protocol};
use domainknn::kb::{build_kb, load_kb, read_corpus, save_kb, BuildConfig, KnowledgeBase};
use domainknn::knn::{classify, ClassifyConfig};
use domainknn::metrics::Metric;
use domainknn::pipeline::{LemmaLexicon, PipelineConfig, StopwordList};
use domainknn::vectorspace::VectorizeMode;

#[derive(Parser)]
#[command(name = "domainknn", version, about = "Sentence domain classification by k-NN over bag-of-words vectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Pipeline resource flags shared by every subcommand. They must match the
/// knowledge base they are used against.
#[derive(Args)]
struct PipelineArgs {
    /// Stopword file: one term per line, `#` lines ignored
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Lemma lexicon file: one `inflected<TAB>lemma` pair per line
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Vectorization mode for knowledge-base rows
    #[arg(long, default_value = "count", value_parser = parse_mode)]
    mode: VectorizeMode,
}

impl PipelineArgs {
    fn load(&self) -> Result<BuildConfig> {
        let stopwords = match &self.stopwords {
            Some(path) => StopwordList::load(path)?,
            None => StopwordList::empty(),
        };
        let lexicon = match &self.lemmas {
            Some(path) => LemmaLexicon::load(path)?,
            None => LemmaLexicon::empty(),
        };
        Ok(BuildConfig::new(
            PipelineConfig::new(stopwords, lexicon),
            self.mode,
        ))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a knowledge base from a corpus file (JSON Lines or CSV)
    Build {
        /// Corpus path: `.csv` with a category,text header, else JSON Lines
        corpus: PathBuf,
        /// Output knowledge-base path
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Classify a sentence (or stdin lines) against a knowledge base
    Classify {
        kb: PathBuf,
        /// Sentence to classify; reads newline-delimited stdin when omitted
        text: Option<String>,
        #[arg(long, default_value = "cosine", value_parser = parse_metric)]
        metric: Metric,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 2.5)]
        penalty: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Evaluate accuracy of every metric × k cell over a corpus
    Evaluate {
        corpus: PathBuf,
        /// Comma-separated metric names
        #[arg(long, value_delimiter = ',', default_value = "euclidean,manhattan,canberra,cosine", value_parser = parse_metric)]
        metrics: Vec<Metric>,
        /// Comma-separated neighbor counts
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        ks: Vec<usize>,
        #[arg(long, default_value = "loo", value_parser = ["loo", "split"], requires_ifs = [("split", "seed")])]
        protocol: String,
        /// Split seed; required with --protocol split
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.8)]
        split_ratio: f64,
        #[arg(long, default_value_t = 2.5)]
        penalty: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Measure classification latency against a knowledge base
    Bench {
        kb: PathBuf,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = "cosine", value_parser = parse_metric)]
        metric: Metric,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 2.5)]
        penalty: f64,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<VectorizeMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let payload = serde_json::json!({
            "error": {"kind": e.kind(), "message": e.to_string()}
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build {
            corpus,
            out,
            pipeline,
        } => cmd_build(&corpus, &out, &pipeline),
        Command::Classify {
            kb,
            text,
            metric,
            k,
            threshold,
            penalty,
            workers,
            pipeline,
        } => {
            let config = ClassifyConfig {
                metric,
                k,
                threshold,
                penalty_factor: penalty,
                workers,
            };
            cmd_classify(&kb, text.as_deref(), &pipeline, &config)
        }
        Command::Evaluate {
            corpus,
            metrics,
            ks,
            protocol,
            seed,
            split_ratio,
            penalty,
            workers,
            pipeline,
        } => {
            let protocol = match protocol.as_str() {
                "split" => Protocol::Split {
                    seed: seed.expect("clap enforces --seed with --protocol split"),
                    ratio: split_ratio,
                },
                _ => Protocol::LeaveOneOut,
            };
            let options = EvalOptions {
                metrics,
                ks,
                protocol,
                penalty_factor: penalty,
                workers,
            };
            cmd_evaluate(&corpus, &pipeline, &options)
        }
        Command::Bench {
            kb,
            queries,
            workers,
            metric,
            k,
            threshold,
            penalty,
            pipeline,
        } => {
            let config = ClassifyConfig {
                metric,
                k,
                threshold,
                penalty_factor: penalty,
                workers,
            };
            cmd_bench(&kb, queries, &pipeline, &config)
        }
    }
}

fn cmd_build(corpus_path: &PathBuf, out: &PathBuf, pipeline: &PipelineArgs) -> Result<()> {
    let corpus = read_corpus(corpus_path)?;
    let build_config = pipeline.load()?;
    let build = build_kb(&corpus, &build_config)?;
    save_kb(&build.kb, out)?;
    let summary = serde_json::json!({
        "rows": build.kb.num_rows(),
        "classes": build.kb.num_classes(),
        "vocabSize": build.kb.vocabulary().len(),
        "dropped": build.dropped.len(),
        "droppedPositions": build.dropped,
        "kbPath": out,
    });
    println!("{summary}");
    Ok(())
}

fn cmd_classify(
    kb_path: &PathBuf,
    text: Option<&str>,
    pipeline: &PipelineArgs,
    config: &ClassifyConfig,
) -> Result<()> {
    let kb = load_kb(kb_path)?;
    let build_config = pipeline.load()?;
    let emit = |line: &str| -> Result<()> {
        let result = classify(&kb, line, &build_config, config)?;
        println!(
            "{}",
            serde_json::to_string(&result).expect("result serializes infallibly")
        );
        Ok(())
    };
    match text {
        Some(line) => emit(line),
        None => {
            for line in std::io::stdin().lock().lines() {
                let line = line.map_err(|source| Error::IoFailure {
                    path: "<stdin>".into(),
                    source,
                })?;
                emit(&line)?;
            }
            Ok(())
        }
    }
}

fn cmd_evaluate(corpus_path: &PathBuf, pipeline: &PipelineArgs, options: &EvalOptions) -> Result<()> {
    let corpus = read_corpus(corpus_path)?;
    let build_config = pipeline.load()?;
    let report = evaluate(&corpus, &build_config, options)?;
    eprint!("{}", report.render_table());
    println!(
        "{}",
        serde_json::to_string(&report).expect("report serializes infallibly")
    );
    Ok(())
}

#[derive(Serialize)]
struct LatencyStats {
    min: f64,
    mean: f64,
    p95: f64,
    max: f64,
}

#[derive(Serialize)]
struct BenchReport {
    #[serde(rename = "kbRows")]
    kb_rows: usize,
    queries: usize,
    workers: usize,
    #[serde(rename = "latenciesMs")]
    latencies_ms: LatencyStats,
    /// Digest over all result JSON lines; equal digests across worker
    /// counts certify identical classification outputs.
    #[serde(rename = "resultsDigest")]
    results_digest: String,
}

/// Rebuilds a query text from a stored row: each vocabulary term repeated
/// by its (rounded) count. Round-trips through the same pipeline to the
/// same vector, so benchmark queries look like real corpus sentences.
fn reconstruct_text(kb: &KnowledgeBase, row: usize) -> String {
    let mut words: Vec<&str> = Vec::new();
    for &(idx, value) in kb.rows()[row].entries() {
        let term = kb.vocabulary().term(idx).expect("entry index within vocabulary");
        let repeats = (value.round() as usize).max(1);
        for _ in 0..repeats {
            words.push(term);
        }
    }
    words.join(" ")
}

fn cmd_bench(
    kb_path: &PathBuf,
    queries: usize,
    pipeline: &PipelineArgs,
    config: &ClassifyConfig,
) -> Result<()> {
    let kb = load_kb(kb_path)?;
    let build_config = pipeline.load()?;
    if kb.num_rows() == 0 {
        return Err(Error::EmptyKnowledgeBase);
    }
    if queries == 0 {
        return Err(Error::ConfigInvalid("need at least one query".into()));
    }
    let mut latencies = Vec::with_capacity(queries);
    let mut hasher = Sha256::new();
    for i in 0..queries {
        let text = reconstruct_text(&kb, i % kb.num_rows());
        let start = Instant::now();
        let result = classify(&kb, &text, &build_config, config)?;
        latencies.push(start.elapsed().as_secs_f64() * 1000.0);
        hasher.update(serde_json::to_string(&result).expect("result serializes infallibly"));
        hasher.update(b"\n");
    }
    let mut sorted = latencies.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let p95_index = ((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1;
    let report = BenchReport {
        kb_rows: kb.num_rows(),
        queries,
        workers: config.workers,
        latencies_ms: LatencyStats {
            min: sorted[0],
            mean: latencies.iter().sum::<f64>() / n as f64,
            p95: sorted[p95_index],
            max: sorted[n - 1],
        },
        results_digest: hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect(),
    };
    println!(
        "{}",
        serde_json::to_string(&report).expect("report serializes infallibly")
    );
    Ok(())
}
