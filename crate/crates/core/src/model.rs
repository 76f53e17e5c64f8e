//! Trained pipelines: fitting, prediction, the versioned model file and the
//! per-sentence analysis record shared by the CLI and the service.

use crate::config::PipelineConfig;
use crate::corpus::{
    fingerprint_documents, parse_tagged_text_with, segment_sentences, ClauseCategory, Document, Sentence, TagMode,
};
use crate::features::{build_vocabulary, FeatureConfig, FeatureError, SparseVector, Vocabulary};
use crate::seqmodel::{train_chain, viterbi, ChainModel, SeqError, SeqExample};
use crate::svm::{predict_kernel, train_linear, train_smo, KernelModel, LinearModel, SvmError};
use crate::treekernel::{gram_matrix, kernel_row, self_kernels, KernelError, ParseTree, TreeBank};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LinearBow,
    KernelSstk,
    Chain,
    CategoryOvr,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LinearBow => "linear-bow",
            ModelKind::KernelSstk => "kernel-sstk",
            ModelKind::Chain => "chain",
            ModelKind::CategoryOvr => "category-ovr",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [ModelKind::LinearBow, ModelKind::KernelSstk, ModelKind::Chain, ModelKind::CategoryOvr]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown model kind {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("no parse trees for document {0}")]
    MissingTrees(String),
    #[error("{found} trees supplied for {expected} sentences")]
    TreeCount { expected: usize, found: usize },
    #[error("no training sentences")]
    EmptyTraining,
    #[error("model format version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u32 },
    #[error("model header says {header} but payload is {payload}")]
    KindMismatch { header: ModelKind, payload: ModelKind },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPayload {
    pub model: KernelModel,
    /// Trees of `model.supports`, in the same order.
    pub support_trees: Vec<ParseTree>,
    /// Used when prediction has no trees.
    pub fallback: LinearModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryModel {
    pub category: ClauseCategory,
    pub model: LinearModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payload {
    LinearBow(LinearModel),
    KernelSstk(KernelPayload),
    Chain(ChainModel),
    CategoryOvr(Vec<CategoryModel>),
}

impl Payload {
    pub fn kind(&self) -> ModelKind {
        match self {
            Payload::LinearBow(_) => ModelKind::LinearBow,
            Payload::KernelSstk(_) => ModelKind::KernelSstk,
            Payload::Chain(_) => ModelKind::Chain,
            Payload::CategoryOvr(_) => ModelKind::CategoryOvr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub config: PipelineConfig,
    pub corpus_fingerprint: String,
    pub documents: usize,
    pub sentences: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub kind: ModelKind,
    pub features: FeatureConfig,
    pub vocabulary: Vocabulary,
    pub payload: Payload,
    pub metadata: TrainingMetadata,
}

impl ModelFile {
    /// Canonical JSON; the byte form used for saving and comparing models.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("model serialises");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| ModelError::Format("missing format_version".into()))?;
        if found != u64::from(MODEL_FORMAT_VERSION) {
            return Err(ModelError::Version { found, expected: MODEL_FORMAT_VERSION });
        }
        let model: ModelFile = serde_json::from_value(value).map_err(|e| ModelError::Format(e.to_string()))?;
        if model.payload.kind() != model.kind {
            return Err(ModelError::KindMismatch { header: model.kind, payload: model.payload.kind() });
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    fn needs_trees(&self) -> bool {
        self.features.use_pos
    }
}

fn document_trees<'a>(
    treebank: Option<&'a TreeBank>,
    doc: &Document,
    needed: bool,
) -> Result<Option<&'a [ParseTree]>, ModelError> {
    if !needed {
        return Ok(None);
    }
    let trees = treebank.and_then(|tb| tb.get(&doc.name)).ok_or_else(|| ModelError::MissingTrees(doc.name.clone()))?;
    if trees.len() != doc.sentences.len() {
        return Err(ModelError::TreeCount { expected: doc.sentences.len(), found: trees.len() });
    }
    Ok(Some(trees))
}

fn tree_at(trees: Option<&[ParseTree]>, i: usize) -> Option<&ParseTree> {
    trees.map(|t| &t[i])
}

fn signed(label: bool) -> i8 {
    if label {
        1
    } else {
        -1
    }
}

/// Fits vocabulary and model on `documents` only.
pub fn train_model(
    documents: &[&Document],
    treebank: Option<&TreeBank>,
    kind: ModelKind,
    config: &PipelineConfig,
) -> Result<ModelFile, ModelError> {
    config.features.validate()?;
    let use_pos = config.features.use_pos;
    let pos_trees = documents.iter().map(|d| document_trees(treebank, d, use_pos)).collect::<Result<Vec<_>, _>>()?;
    let vocabulary = build_vocabulary(
        documents
            .iter()
            .zip(&pos_trees)
            .flat_map(|(d, trees)| d.sentences.iter().enumerate().map(move |(i, s)| (&s.sentence, tree_at(*trees, i)))),
        &config.features,
    )?;
    let doc_vectors = documents
        .iter()
        .zip(&pos_trees)
        .map(|(d, trees)| {
            d.sentences
                .iter()
                .enumerate()
                .map(|(i, s)| vocabulary.vectorize(&s.sentence, tree_at(*trees, i), &config.features))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let x: Vec<SparseVector> = doc_vectors.iter().flatten().cloned().collect();
    if x.is_empty() {
        return Err(ModelError::EmptyTraining);
    }
    let detection: Vec<i8> =
        documents.iter().flat_map(|d| d.sentences.iter().map(|s| signed(s.detection_label))).collect();

    let mut warnings = Vec::new();
    let mut converged = true;
    let mut note_linear = |what: &str, model: &LinearModel, warnings: &mut Vec<String>| {
        if let Some(w) = &model.warning {
            warnings.push(format!("{what}: {w}"));
        }
        if !model.converged {
            converged = false;
            warnings.push(format!("{what}: dual coordinate descent hit max_iter ({} epochs)", model.epochs));
        }
    };

    let payload = match kind {
        ModelKind::LinearBow => {
            let model = train_linear(&x, &detection, &config.train)?;
            note_linear("detection", &model, &mut warnings);
            Payload::LinearBow(model)
        }
        ModelKind::CategoryOvr => {
            let mut models = Vec::with_capacity(ClauseCategory::ALL.len());
            for category in ClauseCategory::ALL {
                let y: Vec<i8> = documents
                    .iter()
                    .flat_map(|d| d.sentences.iter().map(move |s| signed(s.unfair_categories().contains(&category))))
                    .collect();
                let model = train_linear(&x, &y, &config.train)?;
                note_linear(category.symbol(), &model, &mut warnings);
                models.push(CategoryModel { category, model });
            }
            Payload::CategoryOvr(models)
        }
        ModelKind::Chain => {
            let examples: Vec<SeqExample> = documents
                .iter()
                .zip(doc_vectors)
                .filter(|(d, _)| !d.sentences.is_empty())
                .map(|(d, xs)| SeqExample {
                    xs,
                    ys: d.sentences.iter().map(|s| usize::from(s.detection_label)).collect(),
                })
                .collect();
            let mut model = train_chain(&examples, 2, &config.train)?;
            model.labels = vec!["fair".into(), "unfair".into()];
            if detection.iter().all(|&l| l == detection[0]) {
                warnings.push(format!("detection: single-class training data (all {:+})", detection[0]));
            }
            Payload::Chain(model)
        }
        ModelKind::KernelSstk => {
            let trees: Vec<ParseTree> = documents
                .iter()
                .map(|d| document_trees(treebank, d, true).map(|t| t.unwrap_or_default().to_vec()))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .flatten()
                .collect();
            let fallback = train_linear(&x, &detection, &config.train)?;
            let kernel = config.kernel;
            let model = if detection.iter().all(|&l| l == detection[0]) {
                warnings
                    .push(format!("detection: single-class training data (all {:+}); constant model", detection[0]));
                KernelModel {
                    supports: Vec::new(),
                    bias: f64::from(detection[0]),
                    kernel,
                    iterations: 0,
                    max_violation: 0.0,
                }
            } else {
                let gram = gram_matrix(&trees, kernel.lambda, kernel.normalize)?;
                match train_smo(&gram, &detection, &config.train) {
                    Ok(model) => model,
                    Err(SvmError::NoConvergence { model, violation, iterations }) => {
                        converged = false;
                        warnings.push(format!(
                            "detection: SMO stopped after {iterations} iterations with KKT violation {violation:.3e}"
                        ));
                        *model
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            let support_trees = model.supports.iter().map(|s| trees[s.index].clone()).collect();
            Payload::KernelSstk(KernelPayload { model, support_trees, fallback })
        }
    };

    Ok(ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        features: config.features.clone(),
        vocabulary,
        payload,
        metadata: TrainingMetadata {
            seed: config.train.seed,
            config: config.clone(),
            corpus_fingerprint: fingerprint_documents(documents.iter().copied()),
            documents: documents.len(),
            sentences: x.len(),
            converged,
            warnings,
        },
    })
}

/// Model output for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentencePrediction {
    pub detected: bool,
    pub score: f64,
    pub category_scores: BTreeMap<ClauseCategory, f64>,
    pub categories: Vec<ClauseCategory>,
}

/// Predicts every sentence of one document. A sentence is positive when its
/// score is at least `threshold`; the chain model decodes jointly and
/// ignores it.
pub fn predict_sentences(
    model: &ModelFile,
    sentences: &[Sentence],
    trees: Option<&[ParseTree]>,
    threshold: f64,
) -> Result<(Vec<SentencePrediction>, Vec<String>), ModelError> {
    if let Some(t) = trees {
        if t.len() != sentences.len() {
            return Err(ModelError::TreeCount { expected: sentences.len(), found: t.len() });
        }
    }
    if model.needs_trees() && trees.is_none() {
        return Err(FeatureError::MissingTree.into());
    }
    let x = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| model.vocabulary.vectorize(s, tree_at(trees, i), &model.features))
        .collect::<Result<Vec<_>, _>>()?;
    let mut warnings = Vec::new();
    let binary = |score: f64| SentencePrediction {
        detected: score >= threshold,
        score,
        category_scores: BTreeMap::new(),
        categories: Vec::new(),
    };

    let predictions = match &model.payload {
        Payload::LinearBow(m) => x.iter().map(|v| m.score(v).map(binary)).collect::<Result<Vec<_>, _>>()?,
        Payload::KernelSstk(p) => match trees {
            Some(trees) if !sentences.is_empty() => {
                let diag = self_kernels(&p.support_trees, p.model.kernel.lambda, false)?;
                trees
                    .iter()
                    .map(|t| {
                        let row = kernel_row(t, &p.support_trees, p.model.kernel, Some(&diag))?;
                        Ok(binary(predict_kernel(&p.model, &row)?))
                    })
                    .collect::<Result<Vec<_>, ModelError>>()?
            }
            _ => {
                if !sentences.is_empty() {
                    warnings.push("no parse trees supplied; fell back to the linear bag-of-words model".to_string());
                }
                x.iter().map(|v| p.fallback.score(v).map(binary)).collect::<Result<Vec<_>, _>>()?
            }
        },
        Payload::Chain(m) => {
            if x.is_empty() {
                Vec::new()
            } else {
                let (ys, _) = viterbi(m, &x)?;
                m.emission_scores(&x)
                    .iter()
                    .zip(ys)
                    .map(|(e, y)| SentencePrediction {
                        detected: y == 1,
                        score: e[1] - e[0],
                        category_scores: BTreeMap::new(),
                        categories: Vec::new(),
                    })
                    .collect()
            }
        }
        Payload::CategoryOvr(models) => x
            .iter()
            .map(|v| {
                let mut category_scores = BTreeMap::new();
                let mut categories = Vec::new();
                for cm in models {
                    let s = cm.model.score(v)?;
                    category_scores.insert(cm.category, s);
                    if s >= threshold {
                        categories.push(cm.category);
                    }
                }
                let score = category_scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok(SentencePrediction { detected: !categories.is_empty(), score, category_scores, categories })
            })
            .collect::<Result<Vec<_>, ModelError>>()?,
    };
    Ok((predictions, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceResult {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub detected: bool,
    pub score: f64,
    pub category_scores: BTreeMap<ClauseCategory, f64>,
    pub categories: Vec<ClauseCategory>,
}

/// Per-sentence analysis of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub model_kind: ModelKind,
    pub text: String,
    pub sentences: Vec<SentenceResult>,
    pub warnings: Vec<String>,
}

impl AnalysisResult {
    /// The byte form returned by both `predict` and the service.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("analysis serialises");
        out.push('\n');
        out
    }

    pub fn flagged(&self) -> impl Iterator<Item = &SentenceResult> {
        self.sentences.iter().filter(|s| s.detected)
    }
}

/// Segments `text` and predicts every sentence. Corpus tags in the input
/// are stripped; if they do not parse the text is used as is.
pub fn analyze(model: &ModelFile, text: &str, trees: Option<&[ParseTree]>) -> Result<AnalysisResult, ModelError> {
    let mut warnings = Vec::new();
    let plain = match parse_tagged_text_with(text, TagMode::Lenient) {
        Ok(tagged) => tagged.plain,
        Err(e) => {
            warnings.push(format!("input tags ignored: {e}"));
            text.to_string()
        }
    };
    let sentences = segment_sentences(&plain);
    let (predictions, mut predict_warnings) = predict_sentences(model, &sentences, trees, 0.0)?;
    warnings.append(&mut predict_warnings);
    let sentences = sentences
        .into_iter()
        .zip(predictions)
        .map(|(s, p)| SentenceResult {
            text: s.text,
            start: s.start,
            end: s.end,
            detected: p.detected,
            score: p.score,
            category_scores: p.category_scores,
            categories: p.categories,
        })
        .collect();
    Ok(AnalysisResult { model_kind: model.kind, text: plain, sentences, warnings })
}
