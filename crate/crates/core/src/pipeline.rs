//! Text preprocessing: tokenization, stopword removal, dictionary
//! lemmatization.
//!
//! The stage order is fixed: tokenize, then remove stopwords, then map each
//! surviving token to its lemma. All stages are pure functions over
//! immutable inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// A normalized lexical unit: non-empty, lowercase, and free of whitespace
/// and separator characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    /// Validates the token invariants and wraps the string. A token must be
    /// non-empty, consist of letters and digits only, and be a fixed point
    /// of lowercasing (characters with no lowercase mapping count as their
    /// own lowercase form).
    pub fn new(surface: impl Into<String>) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(Error::ConfigInvalid("token must be non-empty".into()));
        }
        if !surface.chars().all(|c| c.is_alphanumeric()) || surface != surface.to_lowercase() {
            return Err(Error::ConfigInvalid(format!(
                "token {surface:?} must be lowercase letters and digits only"
            )));
        }
        Ok(Token(surface))
    }

    // Callers guarantee the invariants (used by tokenize, whose output is
    // lowercase alphanumeric runs by construction).
    fn new_unchecked(surface: String) -> Self {
        debug_assert!(!surface.is_empty());
        debug_assert!(surface.chars().all(char::is_alphanumeric));
        debug_assert!(surface == surface.to_lowercase());
        Token(surface)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Set of terms to drop from token streams. Lookup is exact-match on the
/// lowercase surface form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    entries: BTreeSet<String>,
}

impl StopwordList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a list from terms, lowercasing each.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList {
            entries: terms
                .into_iter()
                .map(|t| t.as_ref().to_lowercase())
                .collect(),
        }
    }

    /// Parses the one-term-per-line format. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn parse(text: &str) -> Self {
        Self::from_terms(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::IoFailure {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Terms in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

/// Inflected-form to lemma dictionary with identity fallback: forms absent
/// from the mapping are their own lemma.
///
/// The mapping is idempotent by construction: any lemma appearing in the
/// range either maps to itself or is absent, so applying the lexicon twice
/// equals applying it once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaLexicon {
    mapping: BTreeMap<String, String>,
}

impl LemmaLexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a lexicon from (inflected, lemma) pairs.
    ///
    /// Rejects duplicate inflected forms and mappings that would break
    /// idempotence (a lemma that itself maps to a different lemma).
    pub fn from_pairs<I, S, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut mapping = BTreeMap::new();
        for (form, lemma) in pairs {
            let form = form.as_ref().to_lowercase();
            let lemma = lemma.as_ref().to_lowercase();
            if mapping.insert(form.clone(), lemma).is_some() {
                return Err(Error::ConfigInvalid(format!(
                    "duplicate inflected form {form:?} in lemma lexicon"
                )));
            }
        }
        for (form, lemma) in &mapping {
            if let Some(next) = mapping.get(lemma) {
                if next != lemma {
                    return Err(Error::ConfigInvalid(format!(
                        "lemma lexicon is not idempotent: {form:?} -> {lemma:?} -> {next:?}"
                    )));
                }
            }
        }
        Ok(LemmaLexicon { mapping })
    }

    /// Parses the `inflected<TAB>lemma` format. Blank lines and lines
    /// starting with `#` are ignored; duplicate inflected forms are an
    /// error.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.splitn(2, '\t');
            let form = fields.next().unwrap_or("").trim();
            let lemma = fields.next().map(str::trim).unwrap_or("");
            if form.is_empty() || lemma.is_empty() {
                return Err(Error::ResourceFormat {
                    path: origin.to_path_buf(),
                    line: idx + 1,
                    message: "expected `inflected<TAB>lemma`".into(),
                });
            }
            pairs.push((form.to_string(), lemma.to_string()));
        }
        Self::from_pairs(pairs).map_err(|e| Error::ResourceFormat {
            path: origin.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::IoFailure {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Lemma for `form`, falling back to `form` itself.
    pub fn lemma<'a>(&'a self, form: &'a str) -> &'a str {
        self.mapping.get(form).map(String::as_str).unwrap_or(form)
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Pairs in lexicographic order of the inflected form.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.mapping.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Resources driving the preprocessing stages. Either may be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineConfig {
    pub stopwords: StopwordList,
    pub lexicon: LemmaLexicon,
}

impl PipelineConfig {
    pub fn new(stopwords: StopwordList, lexicon: LemmaLexicon) -> Self {
        PipelineConfig { stopwords, lexicon }
    }
}

/// Splits text into the maximal runs of letters and digits of its lowercased
/// form. Everything else (punctuation, symbols, whitespace) separates tokens
/// and is discarded. Degenerate inputs yield an empty sequence.
pub fn tokenize(text: &str) -> Vec<Token> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in lowered.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            tokens.push(Token::new_unchecked(lowered[s..i].to_string()));
        }
    }
    if let Some(s) = start {
        tokens.push(Token::new_unchecked(lowered[s..].to_string()));
    }
    tokens
}

/// Keeps the subsequence of tokens not present in the stopword list.
pub fn remove_stopwords(tokens: Vec<Token>, stopwords: &StopwordList) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| !stopwords.contains(t.as_str()))
        .collect()
}

/// Replaces each token by its lemma; tokens absent from the lexicon pass
/// through unchanged. Length is preserved.
pub fn lemmatize(tokens: Vec<Token>, lexicon: &LemmaLexicon) -> Vec<Token> {
    tokens
        .into_iter()
        .map(|t| {
            let lemma = lexicon.lemma(t.as_str());
            if lemma == t.as_str() {
                t
            } else {
                Token::new_unchecked(lemma.to_string())
            }
        })
        .collect()
}

/// Full pipeline: tokenize, drop stopwords, lemmatize, in that order.
pub fn preprocess(text: &str, config: &PipelineConfig) -> Vec<Token> {
    lemmatize(
        remove_stopwords(tokenize(text), &config.stopwords),
        &config.lexicon,
    )
}
