//! Text side of the pipeline: raw class documents in, TF-IDF vectors out.
//!
//! Processing order is tokenize → stopword removal → Porter stemming, then a
//! vocabulary built over the training (seen-class) corpus assigns indices and
//! document frequencies. Unseen-class documents are encoded against that same
//! vocabulary with out-of-vocabulary terms dropped, so every vector has the
//! fixed width the generator expects.

mod porter;

pub use porter::porter_stem;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("stoplist file {path:?} could not be read: {source}")]
    StoplistIo {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("vocabulary construction requires a non-empty corpus")]
    EmptyCorpus,
    #[error("tf-idf entry index {index} exceeds dimension {dimension}")]
    EntryOutOfRange { index: usize, dimension: usize },
    #[error("tf-idf entries must be sorted by index without duplicates (index {index})")]
    UnsortedEntries { index: usize },
}

/// Split text into maximal runs of Unicode letters, lowercased. Digits,
/// punctuation and whitespace all act as separators.
pub fn tokenize(raw_text: &str) -> Vec<String> {
    let mut terms = Vec::new();
    let mut current = String::new();
    for ch in raw_text.chars() {
        if ch.is_alphabetic() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            terms.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        terms.push(current);
    }
    terms
}

/// Drop stoplisted terms, preserving the order of survivors.
pub fn strip_stopwords(terms: &[String], stoplist: &BTreeSet<String>) -> Vec<String> {
    terms
        .iter()
        .filter(|t| !stoplist.contains(t.as_str()))
        .cloned()
        .collect()
}

/// Read a stoplist file: one term per line, blank lines ignored.
pub fn load_stoplist(path: &Path) -> Result<BTreeSet<String>, TextError> {
    let content = std::fs::read_to_string(path).map_err(|source| TextError::StoplistIo {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_stoplist(&content))
}

/// Parse stoplist text (the file format, exposed separately so embedded
/// defaults and fuzzing share the code path).
pub fn parse_stoplist(content: &str) -> BTreeSet<String> {
    content
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

/// The standard English stoplist shipped with the crate
/// (`data/stopwords_en.txt`); used whenever no stoplist file is configured.
pub fn default_stoplist() -> BTreeSet<String> {
    parse_stoplist(include_str!("../../data/stopwords_en.txt"))
}

/// Full preprocessing for one document: tokenize, strip stopwords, stem.
/// Terms that stem to the empty string (e.g. a bare "s" from a possessive)
/// are dropped.
pub fn process_text(raw_text: &str, stoplist: &BTreeSet<String>) -> Vec<String> {
    strip_stopwords(&tokenize(raw_text), stoplist)
        .iter()
        .map(|t| porter_stem(t))
        .filter(|t| !t.is_empty())
        .collect()
}

/// Term index plus document frequencies over the corpus the vocabulary was
/// built from. Term order is lexicographic, which makes construction
/// deterministic for a given corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_frequency: Vec<usize>,
    corpus_size: usize,
}

impl Vocabulary {
    /// Build from processed (tokenized, stopped, stemmed) term lists.
    pub fn build(corpus: &[Vec<String>]) -> Result<Self, TextError> {
        if corpus.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let distinct: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
            for term in distinct {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let doc_frequency: Vec<usize> = df.values().copied().collect();
        Ok(Self {
            terms,
            doc_frequency,
            corpus_size: corpus.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn doc_frequency_of(&self, index: usize) -> usize {
        self.doc_frequency[index]
    }

    /// Content hash covering terms, document frequencies and corpus size.
    /// Model artifacts store this so evaluation can verify it rebuilt the
    /// exact text space the model was trained in.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.corpus_size.to_le_bytes());
        for (term, df) in self.terms.iter().zip(&self.doc_frequency) {
            hasher.update(term.as_bytes());
            hasher.update([0u8]);
            hasher.update(df.to_le_bytes());
        }
        to_hex(&hasher.finalize())
    }
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Sparse TF-IDF vector. Entries are `(index, weight)` pairs sorted by
/// index; the serialized form is `{"dimension": d, "entries": [[i, w], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TfIdfVector {
    dimension: usize,
    entries: Vec<(usize, f64)>,
}

impl TfIdfVector {
    pub fn new(dimension: usize, entries: Vec<(usize, f64)>) -> Result<Self, TextError> {
        let mut last: Option<usize> = None;
        for &(index, _) in &entries {
            if index >= dimension {
                return Err(TextError::EntryOutOfRange { index, dimension });
            }
            if last.is_some_and(|p| p >= index) {
                return Err(TextError::UnsortedEntries { index });
            }
            last = Some(index);
        }
        Ok(Self { dimension, entries })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dimension];
        for &(i, w) in &self.entries {
            dense[i] = w;
        }
        dense
    }
}

impl<'de> Deserialize<'de> for TfIdfVector {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            dimension: usize,
            entries: Vec<(usize, f64)>,
        }
        let raw = Raw::deserialize(deserializer)?;
        TfIdfVector::new(raw.dimension, raw.entries).map_err(serde::de::Error::custom)
    }
}

/// Encode one processed document against a vocabulary:
/// `weight(t) = tf(t) * ln(N / df(t))`, L2-normalized when the norm is
/// positive. Out-of-vocabulary terms are dropped; ubiquitous terms
/// (df == N) get weight zero and fall out of the sparse form.
pub fn encode_tfidf(doc_terms: &[String], vocab: &Vocabulary) -> TfIdfVector {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for term in doc_terms {
        if let Some(index) = vocab.index_of(term) {
            *counts.entry(index).or_insert(0) += 1;
        }
    }
    let n = vocab.corpus_size() as f64;
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(index, tf)| {
            let idf = (n / vocab.doc_frequency_of(index) as f64).ln();
            (index, tf as f64 * idf)
        })
        .filter(|&(_, w)| w != 0.0)
        .collect();
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut entries {
            *w /= norm;
        }
    }
    TfIdfVector {
        dimension: vocab.len(),
        entries,
    }
}

/// Outcome of running the full text pipeline over per-class documents.
#[derive(Debug, Clone)]
pub struct EncodedCorpus {
    pub vocabulary: Vocabulary,
    /// One TF-IDF vector per class, keyed by class id.
    pub vectors: BTreeMap<crate::ClassId, TfIdfVector>,
    /// Classes whose documents encoded to the zero vector; such a class
    /// cannot be discriminated by text and callers should surface this.
    pub zero_vector_classes: Vec<crate::ClassId>,
}

/// Build the vocabulary from the training (seen) classes' documents, then
/// encode every document against it. `docs` maps class id → raw text;
/// `training_classes` selects which documents define the vocabulary.
pub fn encode_corpus(
    docs: &BTreeMap<crate::ClassId, String>,
    training_classes: &[crate::ClassId],
    stoplist: &BTreeSet<String>,
) -> Result<EncodedCorpus, TextError> {
    let processed: BTreeMap<crate::ClassId, Vec<String>> = docs
        .iter()
        .map(|(&id, text)| (id, process_text(text, stoplist)))
        .collect();
    let training: Vec<Vec<String>> = training_classes
        .iter()
        .filter_map(|id| processed.get(id).cloned())
        .collect();
    let vocabulary = Vocabulary::build(&training)?;
    let mut vectors = BTreeMap::new();
    let mut zero_vector_classes = Vec::new();
    for (&id, terms) in &processed {
        let vector = encode_tfidf(terms, &vocabulary);
        if vector.is_zero() {
            zero_vector_classes.push(id);
        }
        vectors.insert(id, vector);
    }
    Ok(EncodedCorpus {
        vocabulary,
        vectors,
        zero_vector_classes,
    })
}
