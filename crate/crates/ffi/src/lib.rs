//! C ABI for the domain classification engine.
//!
//! Objects cross the boundary as opaque handles created by `dk_*_open` /
//! freed by the matching `dk_*_free`. Strings returned as `char*` are owned
//! by the caller and must be released with [`dk_string_free`]. Input
//! strings must be NUL-terminated UTF-8. Functions returning [`DkStatus`]
//! report failure details through [`dk_last_error_message`], which is
//! thread-local.
//!
//! The generated header lands in `include/domainknn.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use domainknn::error::Error;
use domainknn::kb::{build_kb, load_kb, read_corpus, save_kb, BuildConfig};
use domainknn::knn::{classify, ClassifyConfig};
use domainknn::metrics::Metric;
use domainknn::pipeline::{LemmaLexicon, PipelineConfig, StopwordList};
use domainknn::vectorspace::VectorizeMode;

/// Result codes for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkStatus {
    DkOk = 0,
    /// A required pointer argument was NULL.
    DkErrNullArgument = 1,
    /// An input string was not valid UTF-8.
    DkErrInvalidUtf8 = 2,
    /// File could not be read or written.
    DkErrIo = 3,
    /// Corpus or resource file content was rejected.
    DkErrCorpus = 4,
    /// Knowledge-base file is corrupt or has an unsupported version.
    DkErrKbFormat = 5,
    /// A parameter is out of range, unknown, or does not match the base.
    DkErrConfig = 6,
    /// The query could not be answered (empty base, bad k, zero vector).
    DkErrQuery = 7,
    /// Unexpected internal failure.
    DkErrInternal = 8,
}

/// Opaque classifier: a loaded knowledge base plus the pipeline resources
/// it was built with.
pub struct DkClassifier {
    kb: domainknn::kb::KnowledgeBase,
    build: BuildConfig,
}

/// Per-call classification parameters. Obtain defaults from
/// [`dk_classify_options_default`]; `metric` may be NULL for cosine.
#[repr(C)]
pub struct DkClassifyOptions {
    /// Metric name: cosine|euclidean|manhattan|chebyshev|canberra|hamming.
    pub metric: *const c_char,
    pub k: u32,
    /// Membership cutoff on the minimum cosine distance.
    pub threshold: f64,
    /// Multiplier applied to out-of-vocabulary term counts.
    pub penalty: f64,
    /// Worker threads for the row scan; never affects results.
    pub workers: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

fn status_of(error: &Error) -> DkStatus {
    match error {
        Error::IoFailure { .. } => DkStatus::DkErrIo,
        Error::EmptyCorpus
        | Error::AllDocumentsFiltered
        | Error::CorpusFormat { .. }
        | Error::ResourceFormat { .. } => DkStatus::DkErrCorpus,
        Error::FormatVersionMismatch { .. } | Error::CorruptFile(_) => DkStatus::DkErrKbFormat,
        Error::ConfigInvalid(_) | Error::UnknownMetric(_) | Error::ProtocolInfeasible(_) => {
            DkStatus::DkErrConfig
        }
        Error::ZeroVector
        | Error::DimensionMismatch { .. }
        | Error::DimensionShrink { .. }
        | Error::EmptyKnowledgeBase
        | Error::KTooLarge { .. } => DkStatus::DkErrQuery,
    }
}

fn fail(error: &Error) -> DkStatus {
    set_last_error(&error.to_string());
    status_of(error)
}

/// Runs a fallible body, converting panics into `DkErrInternal`.
fn guarded<F: FnOnce() -> DkStatus>(body: F) -> DkStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            DkStatus::DkErrInternal
        }
    }
}

unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, DkStatus> {
    if ptr.is_null() {
        set_last_error(&format!("{name} must not be NULL"));
        return Err(DkStatus::DkErrNullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(&format!("{name} is not valid UTF-8"));
        DkStatus::DkErrInvalidUtf8
    })
}

unsafe fn optional_path(ptr: *const c_char, name: &str) -> Result<Option<PathBuf>, DkStatus> {
    if ptr.is_null() {
        return Ok(None);
    }
    required_str(ptr, name).map(|s| Some(PathBuf::from(s)))
}

unsafe fn build_config_from(
    stopwords_path: *const c_char,
    lemmas_path: *const c_char,
    mode: *const c_char,
) -> Result<BuildConfig, DkStatus> {
    let stopwords = match optional_path(stopwords_path, "stopwords_path")? {
        Some(path) => StopwordList::load(path).map_err(|e| fail(&e))?,
        None => StopwordList::empty(),
    };
    let lexicon = match optional_path(lemmas_path, "lemmas_path")? {
        Some(path) => LemmaLexicon::load(path).map_err(|e| fail(&e))?,
        None => LemmaLexicon::empty(),
    };
    let mode: VectorizeMode = if mode.is_null() {
        VectorizeMode::Count
    } else {
        required_str(mode, "mode")?.parse().map_err(|e: Error| fail(&e))?
    };
    Ok(BuildConfig::new(PipelineConfig::new(stopwords, lexicon), mode))
}

fn export_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn dk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent error on this thread, or NULL. The caller
/// owns the returned string and frees it with [`dk_string_free`].
#[no_mangle]
pub extern "C" fn dk_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Frees a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned by a `dk_*` function and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn dk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a knowledge base from a corpus file and writes it to `out_path`.
/// When `out_summary_json` is non-NULL it receives a JSON build summary
/// (caller-owned).
///
/// # Safety
/// `corpus_path` and `out_path` must be valid NUL-terminated strings;
/// optional pointers may be NULL. `out_summary_json`, when non-NULL, must
/// point to writable storage for one `char*`.
#[no_mangle]
pub unsafe extern "C" fn dk_build_kb(
    corpus_path: *const c_char,
    out_path: *const c_char,
    stopwords_path: *const c_char,
    lemmas_path: *const c_char,
    mode: *const c_char,
    out_summary_json: *mut *mut c_char,
) -> DkStatus {
    guarded(|| {
        clear_last_error();
        let corpus_path = match required_str(corpus_path, "corpus_path") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        let out_path = match required_str(out_path, "out_path") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        let config = match build_config_from(stopwords_path, lemmas_path, mode) {
            Ok(config) => config,
            Err(status) => return status,
        };
        let corpus = match read_corpus(&corpus_path) {
            Ok(docs) => docs,
            Err(e) => return fail(&e),
        };
        let built = match build_kb(&corpus, &config) {
            Ok(b) => b,
            Err(e) => return fail(&e),
        };
        if let Err(e) = save_kb(&built.kb, &out_path) {
            return fail(&e);
        }
        if !out_summary_json.is_null() {
            let summary = serde_json::json!({
                "rows": built.kb.num_rows(),
                "classes": built.kb.num_classes(),
                "vocabSize": built.kb.vocabulary().len(),
                "dropped": built.dropped.len(),
            });
            *out_summary_json = export_string(summary.to_string());
        }
        DkStatus::DkOk
    })
}

/// Loads a knowledge base and the pipeline resources to query it with.
/// Returns NULL on failure (see [`dk_last_error_message`]).
///
/// # Safety
/// `kb_path` must be a valid NUL-terminated string; optional pointers may
/// be NULL. The handle must be released with [`dk_classifier_free`].
#[no_mangle]
pub unsafe extern "C" fn dk_classifier_open(
    kb_path: *const c_char,
    stopwords_path: *const c_char,
    lemmas_path: *const c_char,
    mode: *const c_char,
) -> *mut DkClassifier {
    let result = catch_unwind(AssertUnwindSafe(|| {
        clear_last_error();
        let kb_path = match required_str(kb_path, "kb_path") {
            Ok(s) => PathBuf::from(s),
            Err(_) => return ptr::null_mut(),
        };
        let build = match build_config_from(stopwords_path, lemmas_path, mode) {
            Ok(config) => config,
            Err(_) => return ptr::null_mut(),
        };
        let kb = match load_kb(&kb_path) {
            Ok(kb) => kb,
            Err(e) => {
                fail(&e);
                return ptr::null_mut();
            }
        };
        if build.fingerprint() != kb.fingerprint() {
            set_last_error(
                "pipeline fingerprint mismatch: pass the stopwords, lemmas and mode the base was built with",
            );
            return ptr::null_mut();
        }
        Box::into_raw(Box::new(DkClassifier { kb, build }))
    }));
    match result {
        Ok(handle) => handle,
        Err(_) => {
            set_last_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// Releases a classifier handle. NULL is a no-op.
///
/// # Safety
/// `handle` must come from [`dk_classifier_open`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn dk_classifier_free(handle: *mut DkClassifier) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of knowledge-base rows; 0 for NULL.
///
/// # Safety
/// `handle` must be NULL or a live classifier handle.
#[no_mangle]
pub unsafe extern "C" fn dk_classifier_rows(handle: *const DkClassifier) -> u64 {
    handle.as_ref().map_or(0, |c| c.kb.num_rows() as u64)
}

/// Number of classes; 0 for NULL.
///
/// # Safety
/// `handle` must be NULL or a live classifier handle.
#[no_mangle]
pub unsafe extern "C" fn dk_classifier_classes(handle: *const DkClassifier) -> u64 {
    handle.as_ref().map_or(0, |c| c.kb.num_classes() as u64)
}

/// Vocabulary size; 0 for NULL.
///
/// # Safety
/// `handle` must be NULL or a live classifier handle.
#[no_mangle]
pub unsafe extern "C" fn dk_classifier_vocab_size(handle: *const DkClassifier) -> u64 {
    handle.as_ref().map_or(0, |c| c.kb.vocabulary().len() as u64)
}

/// Name of the class with the given id, or NULL when out of range. The
/// caller owns the returned string.
///
/// # Safety
/// `handle` must be NULL or a live classifier handle.
#[no_mangle]
pub unsafe extern "C" fn dk_classifier_category(
    handle: *const DkClassifier,
    index: u64,
) -> *mut c_char {
    handle
        .as_ref()
        .and_then(|c| c.kb.category_name(index as usize))
        .map(|name| export_string(name.to_string()))
        .unwrap_or(ptr::null_mut())
}

/// Engine defaults: cosine metric, k 1, threshold 0.5, penalty 2.5, one
/// worker.
#[no_mangle]
pub extern "C" fn dk_classify_options_default() -> DkClassifyOptions {
    DkClassifyOptions {
        metric: ptr::null(),
        k: 1,
        threshold: 0.5,
        penalty: 2.5,
        workers: 1,
    }
}

/// Classifies `text` and stores the result JSON (the same object the CLI
/// prints) in `out_json`, caller-owned. `options` may be NULL for defaults.
///
/// # Safety
/// `handle` must be a live classifier handle, `text` a valid
/// NUL-terminated string, and `out_json` writable storage for one `char*`.
/// When `options` is non-NULL, its `metric` field must be NULL or a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dk_classifier_classify_json(
    handle: *const DkClassifier,
    text: *const c_char,
    options: *const DkClassifyOptions,
    out_json: *mut *mut c_char,
) -> DkStatus {
    guarded(|| {
        clear_last_error();
        if out_json.is_null() {
            set_last_error("out_json must not be NULL");
            return DkStatus::DkErrNullArgument;
        }
        *out_json = ptr::null_mut();
        let classifier = match handle.as_ref() {
            Some(c) => c,
            None => {
                set_last_error("handle must not be NULL");
                return DkStatus::DkErrNullArgument;
            }
        };
        let text = match required_str(text, "text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let defaults = dk_classify_options_default();
        let options = options.as_ref().unwrap_or(&defaults);
        let metric: Metric = if options.metric.is_null() {
            Metric::Cosine
        } else {
            match required_str(options.metric, "metric") {
                Ok(name) => match name.parse() {
                    Ok(metric) => metric,
                    Err(e) => return fail(&e),
                },
                Err(status) => return status,
            }
        };
        let config = ClassifyConfig {
            metric,
            k: options.k as usize,
            threshold: options.threshold,
            penalty_factor: options.penalty,
            workers: options.workers.max(1) as usize,
        };
        match classify(&classifier.kb, text, &classifier.build, &config) {
            Ok(result) => {
                let json = serde_json::to_string(&result).expect("result serializes infallibly");
                *out_json = export_string(json);
                DkStatus::DkOk
            }
            Err(e) => fail(&e),
        }
    })
}
