//! Sentence features: word n-grams and part-of-speech tags weighted by TF-IDF.

use crate::corpus::{tokenize_with, Sentence};
use crate::treekernel::ParseTree;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

pub const VOCABULARY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("part-of-speech features need a parse tree for every sentence")]
    MissingTree,
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
}

/// Term-frequency weighting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfMode {
    #[default]
    Raw,
    /// `1 + ln(count)`.
    Log,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub ngram_orders: BTreeSet<usize>,
    pub use_pos: bool,
    pub min_df: usize,
    pub lowercase: bool,
    pub tf: TfMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ngram_orders: [1, 2].into_iter().collect(),
            use_pos: false,
            min_df: 1,
            lowercase: true,
            tf: TfMode::Raw,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.ngram_orders.is_empty() {
            return Err(FeatureError::InvalidConfig("ngram_orders is empty".into()));
        }
        if self.ngram_orders.contains(&0) {
            return Err(FeatureError::InvalidConfig("n-gram order 0".into()));
        }
        if self.min_df == 0 {
            return Err(FeatureError::InvalidConfig("min_df must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sparse vector with strictly increasing indices and non-zero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector { dim, entries: Vec::new() }
    }

    /// Sorts, merges duplicate indices by summing, and drops zeros.
    ///
    /// Panics if an index is out of range.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            assert!(i < dim, "index {i} out of range for dimension {dim}");
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += w,
                _ => entries.push((i, w)),
            }
        }
        entries.retain(|&(_, w)| w != 0.0);
        SparseVector { dim, entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(i, &w)| (i, w)).collect();
        SparseVector { dim: values.len(), entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries.binary_search_by_key(&index, |&(i, _)| i).map_or(0.0, |k| self.entries[k].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (small, large) = if self.nnz() <= other.nnz() { (self, other) } else { (other, self) };
        if small.nnz() * 16 < large.nnz() {
            let mut rest = large.entries.as_slice();
            let mut sum = 0.0;
            for &(i, x) in &small.entries {
                let k = rest.partition_point(|&(j, _)| j < i);
                rest = &rest[k..];
                match rest.first() {
                    Some(&(j, y)) if j == i => sum += x * y,
                    None => break,
                    _ => {}
                }
            }
            return sum;
        }
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().filter_map(|&(i, w)| dense.get(i).map(|d| d * w)).sum()
    }

    /// `dense += scale * self`.
    pub fn add_to(&self, dense: &mut [f64], scale: f64) {
        for &(i, w) in &self.entries {
            dense[i] += scale * w;
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        self.add_to(&mut dense, 1.0);
        dense
    }

    fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            for (_, w) in &mut self.entries {
                *w /= norm;
            }
        }
        self
    }
}

/// Consecutive `n`-token windows joined with `_`, prefixed `w{n}:`.
pub fn extract_ngrams(tokens: &[String], n: usize) -> Vec<String> {
    assert!(n >= 1, "n-gram order must be at least 1");
    if tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| format!("w{n}:{}", w.join("_"))).collect()
}

/// Preterminal labels, left to right, prefixed `p:`.
pub fn pos_bag(tree: &ParseTree) -> Vec<String> {
    tree.preterminal_labels().map(|label| format!("p:{label}")).collect()
}

/// All terms of one sentence under `config`, with repetitions.
pub fn sentence_terms(
    sentence: &Sentence,
    tree: Option<&ParseTree>,
    config: &FeatureConfig,
) -> Result<Vec<String>, FeatureError> {
    let recased;
    let tokens: &[String] = if config.lowercase {
        &sentence.tokens
    } else {
        recased = tokenize_with(&sentence.text, false);
        &recased
    };
    let mut terms = Vec::new();
    for &n in &config.ngram_orders {
        terms.extend(extract_ngrams(tokens, n));
    }
    if config.use_pos {
        let tree = tree.ok_or(FeatureError::MissingTree)?;
        terms.extend(pos_bag(tree));
    }
    Ok(terms)
}

/// Term index with sentence-level document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
    n_fit: usize,
}

/// Fits a vocabulary over `(sentence, tree)` pairs; terms are indexed in
/// lexicographic order.
pub fn build_vocabulary<'a, I>(sentences: I, config: &FeatureConfig) -> Result<Vocabulary, FeatureError>
where
    I: IntoIterator<Item = (&'a Sentence, Option<&'a ParseTree>)>,
{
    config.validate()?;
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_fit = 0;
    for (sentence, tree) in sentences {
        let terms = sentence_terms(sentence, tree, config)?;
        let distinct: BTreeSet<String> = terms.into_iter().collect();
        for term in distinct {
            *df.entry(term).or_default() += 1;
        }
        n_fit += 1;
    }
    let (terms, df): (Vec<String>, Vec<usize>) = df.into_iter().filter(|&(_, d)| d >= config.min_df).unzip();
    Ok(Vocabulary::from_parts(terms, df, n_fit))
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, df: Vec<usize>, n_fit: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms, index, df, n_fit }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_fit(&self) -> usize {
        self.n_fit
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn df(&self, index: usize) -> usize {
        self.df[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_fit as f64) / (1.0 + self.df[index] as f64)).ln() + 1.0
    }

    /// L2-normalised TF-IDF vector of one sentence. Out-of-vocabulary terms
    /// are ignored.
    pub fn vectorize(
        &self,
        sentence: &Sentence,
        tree: Option<&ParseTree>,
        config: &FeatureConfig,
    ) -> Result<SparseVector, FeatureError> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for term in sentence_terms(sentence, tree, config)? {
            if let Some(i) = self.index_of(&term) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let pairs = counts
            .into_iter()
            .map(|(i, count)| {
                let tf = match config.tf {
                    TfMode::Raw => count as f64,
                    TfMode::Log => 1.0 + (count as f64).ln(),
                };
                (i, tf * self.idf(i))
            })
            .collect();
        Ok(SparseVector::from_pairs(self.len(), pairs).normalized())
    }
}

pub fn vectorize(
    sentence: &Sentence,
    tree: Option<&ParseTree>,
    vocab: &Vocabulary,
    config: &FeatureConfig,
) -> Result<SparseVector, FeatureError> {
    vocab.vectorize(sentence, tree, config)
}

#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    format_version: u32,
    n_fit: usize,
    /// `(term, index, df)` triples in index order.
    entries: Vec<(String, usize, usize)>,
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        VocabularyRecord {
            format_version: VOCABULARY_FORMAT_VERSION,
            n_fit: self.n_fit,
            entries: self.terms.iter().zip(&self.df).enumerate().map(|(i, (t, &d))| (t.clone(), i, d)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let record = VocabularyRecord::deserialize(deserializer)?;
        if record.format_version != VOCABULARY_FORMAT_VERSION {
            return Err(D::Error::custom(format!(
                "vocabulary format version {} (expected {VOCABULARY_FORMAT_VERSION})",
                record.format_version
            )));
        }
        let mut terms = Vec::with_capacity(record.entries.len());
        let mut df = Vec::with_capacity(record.entries.len());
        for (k, (term, index, d)) in record.entries.into_iter().enumerate() {
            if index != k {
                return Err(D::Error::custom(format!("vocabulary index {index} at position {k}")));
            }
            if d > record.n_fit {
                return Err(D::Error::custom(format!("df {d} of {term:?} exceeds {}", record.n_fit)));
            }
            terms.push(term);
            df.push(d);
        }
        Ok(Vocabulary::from_parts(terms, df, record.n_fit))
    }
}
