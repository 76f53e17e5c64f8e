//! Leave-one-document-out evaluation, metrics, and comparison of corpus
//! statistics against the published reference table.

use crate::config::PipelineConfig;
use crate::corpus::{ClauseCategory, Corpus, Document, StatsTable};
use crate::model::{predict_sentences, train_model, ModelError, ModelFile, ModelKind};
use crate::treekernel::TreeBank;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("leave-one-out needs at least 2 documents, corpus has {0}")]
    TooFewDocuments(usize),
    #[error("gold has {gold} entries, predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("{0} is not a detection model kind")]
    NotDetection(ModelKind),
    #[error("fold {fold} (held out {held_out}): {source}")]
    Fold {
        fold: usize,
        held_out: String,
        #[source]
        source: ModelError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub held_out: String,
    pub train: Vec<String>,
}

/// One split per document, in corpus order.
pub fn make_loo_splits(corpus: &Corpus) -> Result<Vec<FoldSplit>, EvalError> {
    let m = corpus.document_count();
    if m < 2 {
        return Err(EvalError::TooFewDocuments(m));
    }
    Ok(corpus
        .documents
        .iter()
        .map(|held| FoldSplit {
            held_out: held.name.clone(),
            train: corpus.documents.iter().filter(|d| d.name != held.name).map(|d| d.name.clone()).collect(),
        })
        .collect())
}

/// Gold or predicted labels of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SentenceLabels {
    pub detection: bool,
    pub categories: BTreeSet<ClauseCategory>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No gold and no predicted positives.
    pub vacuous: bool,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl TargetMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        TargetMetrics { tp, fp, fn_, precision, recall, f1, vacuous: tp + fp + fn_ == 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: ClauseCategory,
    #[serde(flatten)]
    pub metrics: TargetMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroAverage {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Non-vacuous categories averaged over.
    pub targets: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Detect,
    Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: Task,
    pub model_kind: Option<ModelKind>,
    pub sentences: usize,
    pub detection: TargetMetrics,
    pub categories: Vec<CategoryMetrics>,
    pub micro: TargetMetrics,
    #[serde(rename = "macro")]
    pub macro_: MacroAverage,
    pub warnings: Vec<String>,
}

/// Per-target counts over aligned gold and predicted label sets.
pub fn compute_metrics(gold: &[SentenceLabels], pred: &[SentenceLabels]) -> Result<MetricsReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    let count = |hit: &dyn Fn(&SentenceLabels) -> bool| {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (g, p) in gold.iter().zip(pred) {
            match (hit(g), hit(p)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        TargetMetrics::from_counts(tp, fp, fn_)
    };
    let detection = count(&|s| s.detection);
    let categories: Vec<CategoryMetrics> = ClauseCategory::ALL
        .iter()
        .map(|&category| CategoryMetrics { category, metrics: count(&|s| s.categories.contains(&category)) })
        .collect();
    let (tp, fp, fn_) =
        categories.iter().fold((0, 0, 0), |(a, b, c), m| (a + m.metrics.tp, b + m.metrics.fp, c + m.metrics.fn_));
    let micro = TargetMetrics::from_counts(tp, fp, fn_);
    let live: Vec<&TargetMetrics> = categories.iter().map(|c| &c.metrics).filter(|m| !m.vacuous).collect();
    let mean = |f: fn(&TargetMetrics) -> f64| {
        if live.is_empty() {
            0.0
        } else {
            live.iter().map(|m| f(m)).sum::<f64>() / live.len() as f64
        }
    };
    let macro_ = MacroAverage {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        targets: live.len(),
    };
    Ok(MetricsReport {
        task: Task::Category,
        model_kind: None,
        sentences: gold.len(),
        detection,
        categories,
        micro,
        macro_,
        warnings: Vec::new(),
    })
}

impl MetricsReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let kind = self.model_kind.map(|k| k.name()).unwrap_or("-");
        let task = match self.task {
            Task::Detect => "detection",
            Task::Category => "category",
        };
        let _ = writeln!(out, "Task: {task}  Model: {kind}  Sentences: {}", self.sentences);
        let _ = writeln!(
            out,
            "{:<26} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}",
            "Target", "TP", "FP", "FN", "Precision", "Recall", "F1"
        );
        let row = |out: &mut String, name: &str, m: &TargetMetrics| {
            let _ = writeln!(
                out,
                "{:<26} {:>6} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4}{}",
                name,
                m.tp,
                m.fp,
                m.fn_,
                m.precision,
                m.recall,
                m.f1,
                if m.vacuous { "  (vacuous)" } else { "" }
            );
        };
        match self.task {
            Task::Detect => row(&mut out, "Detection", &self.detection),
            Task::Category => {
                for c in &self.categories {
                    row(&mut out, c.category.name(), &c.metrics);
                }
                row(&mut out, "Micro average", &self.micro);
                let _ = writeln!(
                    out,
                    "{:<26} {:>6} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4}  ({} categories)",
                    "Macro average",
                    "",
                    "",
                    "",
                    self.macro_.precision,
                    self.macro_.recall,
                    self.macro_.f1,
                    self.macro_.targets
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialises");
        out.push('\n');
        out
    }
}

fn gold_labels(doc: &Document) -> Vec<SentenceLabels> {
    doc.sentences
        .iter()
        .map(|s| SentenceLabels { detection: s.detection_label, categories: s.unfair_categories() })
        .collect()
}

/// Trains the model of one fold from its training documents only.
pub fn train_fold(
    corpus: &Corpus,
    split: &FoldSplit,
    kind: ModelKind,
    config: &PipelineConfig,
    treebank: Option<&TreeBank>,
) -> Result<ModelFile, ModelError> {
    let docs: Vec<&Document> = split.train.iter().filter_map(|n| corpus.document(n)).collect();
    train_model(&docs, treebank, kind, config)
}

struct FoldOutcome {
    gold: Vec<SentenceLabels>,
    pred: Vec<SentenceLabels>,
    warnings: Vec<String>,
}

type FoldLabels = (Vec<SentenceLabels>, Vec<SentenceLabels>, Vec<String>);

fn run_folds(
    corpus: &Corpus,
    kind: ModelKind,
    config: &PipelineConfig,
    treebank: Option<&TreeBank>,
) -> Result<FoldLabels, EvalError> {
    let splits = make_loo_splits(corpus)?;
    let outcomes = splits
        .par_iter()
        .enumerate()
        .map(|(fold, split)| {
            let wrap = |source: ModelError| EvalError::Fold { fold, held_out: split.held_out.clone(), source };
            let model = train_fold(corpus, split, kind, config, treebank).map_err(wrap)?;
            let held = corpus.document(&split.held_out).expect("split names come from the corpus");
            let sentences: Vec<_> = held.sentences.iter().map(|s| s.sentence.clone()).collect();
            let trees = match (kind, treebank) {
                (ModelKind::KernelSstk, Some(tb)) => tb.get(&held.name),
                _ if config.features.use_pos => treebank.and_then(|tb| tb.get(&held.name)),
                _ => None,
            };
            let (predictions, predict_warnings) =
                predict_sentences(&model, &sentences, trees, config.threshold).map_err(wrap)?;
            let mut warnings: Vec<String> = model
                .metadata
                .warnings
                .iter()
                .chain(&predict_warnings)
                .map(|w| format!("fold {fold} (held out {}): {w}", split.held_out))
                .collect();
            warnings.dedup();
            let pred = predictions
                .into_iter()
                .map(|p| SentenceLabels { detection: p.detected, categories: p.categories.into_iter().collect() })
                .collect();
            Ok(FoldOutcome { gold: gold_labels(held), pred, warnings })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    let mut warnings = Vec::new();
    for o in outcomes {
        gold.extend(o.gold);
        pred.extend(o.pred);
        warnings.extend(o.warnings);
    }
    Ok((gold, pred, warnings))
}

/// Leave-one-document-out detection with `kind` in {linear-bow, kernel-sstk, chain}.
pub fn run_detection_eval(
    corpus: &Corpus,
    kind: ModelKind,
    config: &PipelineConfig,
    treebank: Option<&TreeBank>,
) -> Result<MetricsReport, EvalError> {
    if kind == ModelKind::CategoryOvr {
        return Err(EvalError::NotDetection(kind));
    }
    let (gold, pred, warnings) = run_folds(corpus, kind, config, treebank)?;
    let mut report = compute_metrics(&gold, &pred)?;
    report.task = Task::Detect;
    report.model_kind = Some(kind);
    report.warnings = warnings;
    Ok(report)
}

/// Leave-one-document-out multi-label category classification with eight
/// one-vs-rest linear models per fold.
pub fn run_category_eval(
    corpus: &Corpus,
    config: &PipelineConfig,
    treebank: Option<&TreeBank>,
) -> Result<MetricsReport, EvalError> {
    let (gold, pred, warnings) = run_folds(corpus, ModelKind::CategoryOvr, config, treebank)?;
    let mut report = compute_metrics(&gold, &pred)?;
    report.model_kind = Some(ModelKind::CategoryOvr);
    report.warnings = warnings;
    Ok(report)
}

/// Clause and document counts per category, in [`ClauseCategory::ALL`] order.
pub const REFERENCE_CLAUSES: [usize; 8] = [44, 188, 118, 68, 70, 296, 236, 117];
pub const REFERENCE_DOCUMENTS: [usize; 8] = [28, 49, 45, 40, 47, 49, 48, 48];
pub const REFERENCE_CORPUS_DOCUMENTS: usize = 50;
pub const REFERENCE_SENTENCES: usize = 12_011;
pub const REFERENCE_POSITIVES: usize = 1_032;
pub const REFERENCE_POSITIVE_PERCENT: f64 = 8.6;
pub const REFERENCE_MIN_RATE_PERCENT: f64 = 3.3;
pub const REFERENCE_MAX_RATE_PERCENT: f64 = 16.2;

pub const SENTENCE_TOLERANCE: f64 = 0.03;
pub const POSITIVE_PERCENT_TOLERANCE: f64 = 1.0;
pub const MIN_RATE_BOUND_PERCENT: f64 = 4.5;
pub const MAX_RATE_BOUND_PERCENT: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffStatus {
    Pass,
    Fail,
    Info,
    NotComparable,
}

impl DiffStatus {
    fn label(self) -> &'static str {
        match self {
            DiffStatus::Pass => "pass",
            DiffStatus::Fail => "FAIL",
            DiffStatus::Info => "info",
            DiffStatus::NotComparable => "not comparable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub name: String,
    pub reference: f64,
    pub observed: f64,
    pub delta: f64,
    pub tolerance: String,
    pub status: DiffStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    /// Only a 50-document corpus is compared against the reference.
    pub comparable: bool,
    pub entries: Vec<DiffEntry>,
}

impl DiffReport {
    pub fn passed(&self) -> bool {
        self.comparable && self.entries.iter().all(|e| e.status != DiffStatus::Fail)
    }

    pub fn entry(&self, name: &str) -> Option<&DiffEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<40} {:>10} {:>10} {:>10}  {:<12} Status",
            "Statistic", "Reference", "Observed", "Delta", "Tolerance"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<40} {:>10} {:>10} {:>+10}  {:<12} {}",
                e.name,
                trim_number(e.reference),
                trim_number(e.observed),
                trim_number(e.delta),
                e.tolerance,
                e.status.label()
            );
        }
        out
    }
}

fn trim_number(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Diffs corpus statistics against the reference table.
pub fn compare_to_reference_stats(stats: &StatsTable) -> DiffReport {
    let comparable = stats.documents == REFERENCE_CORPUS_DOCUMENTS;
    let judge = |ok: bool| match (comparable, ok) {
        (false, _) => DiffStatus::NotComparable,
        (true, true) => DiffStatus::Pass,
        (true, false) => DiffStatus::Fail,
    };
    let mut entries = Vec::new();
    let mut push = |name: String, reference: f64, observed: f64, tolerance: &str, status: DiffStatus| {
        entries.push(DiffEntry {
            name,
            reference,
            observed,
            delta: observed - reference,
            tolerance: tolerance.into(),
            status,
        });
    };
    for (k, &category) in ClauseCategory::ALL.iter().enumerate() {
        let row = stats.categories.iter().find(|c| c.category == category);
        let (clauses, documents) = row.map(|r| (r.clauses, r.documents)).unwrap_or((0, 0));
        push(
            format!("{} clauses", category.name()),
            REFERENCE_CLAUSES[k] as f64,
            clauses as f64,
            "exact",
            judge(clauses == REFERENCE_CLAUSES[k]),
        );
        push(
            format!("{} documents", category.name()),
            REFERENCE_DOCUMENTS[k] as f64,
            documents as f64,
            "exact",
            judge(documents == REFERENCE_DOCUMENTS[k]),
        );
    }
    push("documents".into(), REFERENCE_CORPUS_DOCUMENTS as f64, stats.documents as f64, "exact", judge(comparable));
    let sentences = stats.total_sentences as f64;
    let reference = REFERENCE_SENTENCES as f64;
    push(
        "sentences".into(),
        reference,
        sentences,
        "+/-3%",
        judge((sentences - reference).abs() <= SENTENCE_TOLERANCE * reference),
    );
    push(
        "positive sentences".into(),
        REFERENCE_POSITIVES as f64,
        stats.positive_sentences as f64,
        "none",
        if comparable { DiffStatus::Info } else { DiffStatus::NotComparable },
    );
    let percent = 100.0 * stats.positive_fraction;
    push(
        "positive fraction (%)".into(),
        REFERENCE_POSITIVE_PERCENT,
        percent,
        "+/-1 pp",
        judge((percent - REFERENCE_POSITIVE_PERCENT).abs() <= POSITIVE_PERCENT_TOLERANCE),
    );
    let min = stats.min_document_rate.as_ref().map_or(f64::NAN, |r| r.percent);
    push(
        "min per-document positive rate (%)".into(),
        REFERENCE_MIN_RATE_PERCENT,
        min,
        "<= 4.5",
        judge(min <= MIN_RATE_BOUND_PERCENT),
    );
    let max = stats.max_document_rate.as_ref().map_or(f64::NAN, |r| r.percent);
    push(
        "max per-document positive rate (%)".into(),
        REFERENCE_MAX_RATE_PERCENT,
        max,
        ">= 14",
        judge(max >= MAX_RATE_BOUND_PERCENT),
    );
    DiffReport { comparable, entries }
}
