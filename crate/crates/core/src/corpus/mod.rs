//! Tagged Terms-of-Service corpus: tag parsing, sentence segmentation and
//! label projection.

mod segment;
mod stats;
mod tags;

pub use segment::{segment_sentences, tokenize, tokenize_with, Sentence, ABBREVIATIONS};
pub use stats::{corpus_stats, CategoryStats, DocumentRate, StatsTable};
pub use tags::{
    parse_tagged_text, parse_tagged_text_with, render_tagged_text, ClauseCategory, FairnessLevel, TagError, TagMode,
    TagSpan, TaggedText,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Which fairness levels make a sentence positive for detection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveLevels {
    /// Levels 2 and 3.
    #[default]
    Unfair,
    /// Level 2 only.
    PotentiallyUnfairOnly,
}

impl PositiveLevels {
    pub fn contains(self, level: FairnessLevel) -> bool {
        match self {
            PositiveLevels::Unfair => level.is_unfair(),
            PositiveLevels::PotentiallyUnfairOnly => level == FairnessLevel::POTENTIALLY_UNFAIR,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusOptions {
    pub tag_mode: TagMode,
    pub positive_levels: PositiveLevels,
}

/// A sentence with the clause labels that overlap it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub sentence: Sentence,
    pub labels: BTreeSet<(ClauseCategory, FairnessLevel)>,
    pub detection_label: bool,
}

impl LabeledSentence {
    /// Categories present at level 2 or 3.
    pub fn unfair_categories(&self) -> BTreeSet<ClauseCategory> {
        self.labels.iter().filter(|(_, l)| l.is_unfair()).map(|(c, _)| *c).collect()
    }
}

/// Whether `span` covers a non-whitespace char of `sentence`.
fn overlaps(span: &TagSpan, sentence: &Sentence) -> bool {
    let lo = span.start.max(sentence.start);
    let hi = span.end.min(sentence.end);
    lo < hi && sentence.text.chars().skip(lo - sentence.start).take(hi - lo).any(|c| !c.is_whitespace())
}

/// Attaches labels to sentences with the default positive levels {2, 3}.
pub fn project_labels(spans: &[TagSpan], sentences: &[Sentence]) -> Vec<LabeledSentence> {
    project_labels_with(spans, sentences, PositiveLevels::default())
}

pub fn project_labels_with(
    spans: &[TagSpan],
    sentences: &[Sentence],
    positive: PositiveLevels,
) -> Vec<LabeledSentence> {
    sentences
        .iter()
        .map(|sentence| {
            let labels: BTreeSet<_> =
                spans.iter().filter(|span| overlaps(span, sentence)).map(|span| (span.category, span.level)).collect();
            let detection_label = labels.iter().any(|(_, level)| positive.contains(*level));
            LabeledSentence { sentence: sentence.clone(), labels, detection_label }
        })
        .collect()
}

/// One parsed document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub name: String,
    pub plain: String,
    pub spans: Vec<TagSpan>,
    pub sentences: Vec<LabeledSentence>,
}

impl Document {
    /// Runs tag parsing, segmentation, tokenisation and label projection.
    pub fn parse(name: &str, raw: &str, options: CorpusOptions) -> Result<Self, TagError> {
        let tagged = parse_tagged_text_with(raw, options.tag_mode)?;
        let sentences = segment_sentences(&tagged.plain);
        let sentences = project_labels_with(&tagged.spans, &sentences, options.positive_levels);
        Ok(Document { name: name.to_string(), plain: tagged.plain, spans: tagged.spans, sentences })
    }

    pub fn positive_count(&self) -> usize {
        self.sentences.iter().filter(|s| s.detection_label).count()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{file}: {source}")]
    Tag {
        file: String,
        #[source]
        source: TagError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no .txt documents in {0}")]
    EmptyCorpus(PathBuf),
    #[error("duplicate document name {0}")]
    DuplicateName(String),
}

/// Documents in filename order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus from `(name, raw tagged text)` pairs, kept in the given order.
    pub fn from_raw<N, R>(docs: &[(N, R)], options: CorpusOptions) -> Result<Self, CorpusError>
    where
        N: AsRef<str> + Sync,
        R: AsRef<str> + Sync,
    {
        let mut seen = HashSet::new();
        for (name, _) in docs {
            if !seen.insert(name.as_ref()) {
                return Err(CorpusError::DuplicateName(name.as_ref().to_string()));
            }
        }
        let documents = docs
            .par_iter()
            .map(|(name, raw)| {
                Document::parse(name.as_ref(), raw.as_ref(), options)
                    .map_err(|source| CorpusError::Tag { file: name.as_ref().to_string(), source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Corpus { documents })
    }

    /// Total sentence count N.
    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    /// Document count M.
    pub fn document_count(&self) -> usize {
        self.documents.len()
    }

    pub fn document(&self, name: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.name == name)
    }

    pub fn sentences(&self) -> impl Iterator<Item = &LabeledSentence> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    /// SHA-256 over document names, plain texts and spans.
    pub fn fingerprint(&self) -> String {
        fingerprint_documents(&self.documents)
    }
}

/// SHA-256 over the names, plain texts and spans of `docs`, in order.
pub fn fingerprint_documents<'a, I>(docs: I) -> String
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut hasher = Sha256::new();
    for doc in docs {
        hasher.update(doc.name.as_bytes());
        hasher.update([0]);
        hasher.update(doc.plain.as_bytes());
        hasher.update([0]);
        for span in &doc.spans {
            hasher.update(format!("{}{}:{}-{};", span.category.symbol(), span.level.value(), span.start, span.end));
        }
        hasher.update([1]);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads every `*.txt` file of `dir`, named by file stem, in filename order.
pub fn load_corpus(dir: &Path, options: CorpusOptions) -> Result<Corpus, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CorpusError::EmptyCorpus(dir.to_path_buf()));
    }
    let docs = files
        .iter()
        .map(|path| {
            let raw = std::fs::read_to_string(path).map_err(io_err(path))?;
            let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok((name, raw))
        })
        .collect::<Result<Vec<_>, CorpusError>>()?;
    Corpus::from_raw(&docs, options).map_err(|e| match e {
        CorpusError::Tag { file, source } => CorpusError::Tag { file: format!("{file}.txt"), source },
        other => other,
    })
}
