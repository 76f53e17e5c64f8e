//! Command implementations and the analysis service behind the `claudette`
//! binary.

pub mod service;

use claudette::config::PipelineConfig;
use claudette::corpus::{corpus_stats, load_corpus, Corpus, CorpusError, Document};
use claudette::eval::{compare_to_reference_stats, run_category_eval, run_detection_eval, EvalError};
use claudette::model::{analyze, train_model, ModelError, ModelFile, ModelKind};
use claudette::report::write_report;
use claudette::synth::random_tree;
use claudette::treekernel::{
    enumerate_fragments_oracle, oracle_kernel, oracle_pair_count, parse_treebank, sstk, ParseTree, TreeBank,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::path::{Path, PathBuf};

/// A failed command and the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: bad flags or an empty corpus.
    Usage(String),
    /// Exit 3: unreadable, malformed or incompatible input.
    Data(String),
    /// Exit 4: training finished without converging; the model was still written.
    NoConvergence(String),
    /// Exit 1: a self-test mismatch.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::NoConvergence(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::NoConvergence(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::EmptyCorpus(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Text for stdout and stderr of a finished command.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Defaults, then the config file, then the seed flag.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            PipelineConfig::parse(&read_text(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = seed {
        config.train.seed = seed;
    }
    Ok(config)
}

/// Reads a tree file and pairs its blocks with the corpus documents.
pub fn load_treebank(path: &Path, corpus: &Corpus) -> Result<TreeBank, CliError> {
    let blocks = parse_treebank(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    TreeBank::align(blocks, corpus.documents.iter().map(|d| (d.name.as_str(), d.sentences.len())))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Trees of a single document, in sentence order.
pub fn load_document_trees(path: &Path) -> Result<Vec<ParseTree>, CliError> {
    let blocks = parse_treebank(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(blocks.into_iter().flatten().collect())
}

pub fn cmd_stats(dir: &Path, config: &PipelineConfig) -> Result<Output, CliError> {
    let corpus = load_corpus(dir, config.corpus)?;
    let stats = corpus_stats(&corpus);
    let diff = compare_to_reference_stats(&stats);
    Ok(Output { stdout: format!("{}\n{}", stats.render_text(), diff.render_text()), stderr: String::new() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Detect,
    Category,
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "detect" => Ok(Task::Detect),
            "category" => Ok(Task::Category),
            _ => Err(format!("unknown task {s:?} (expected detect or category)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub task: Task,
    pub model: ModelKind,
    pub corpus: PathBuf,
    pub trees: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

fn resolve_kind(task: Task, model: ModelKind) -> Result<ModelKind, CliError> {
    match (task, model) {
        (Task::Detect, ModelKind::CategoryOvr) => {
            Err(CliError::Usage("category-ovr is trained with --task category".into()))
        }
        (Task::Detect, kind) => Ok(kind),
        (Task::Category, ModelKind::LinearBow | ModelKind::CategoryOvr) => Ok(ModelKind::CategoryOvr),
        (Task::Category, kind) => Err(CliError::Usage(format!("--task category supports linear-bow only, not {kind}"))),
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<Output, CliError> {
    let kind = resolve_kind(args.task, args.model)?;
    let config = load_config(args.config.as_deref(), Some(args.seed))?;
    let corpus = load_corpus(&args.corpus, config.corpus)?;
    let treebank = args.trees.as_deref().map(|p| load_treebank(p, &corpus)).transpose()?;
    let docs: Vec<&Document> = corpus.documents.iter().collect();
    let model = train_model(&docs, treebank.as_ref(), kind, &config)?;
    model.save(&args.out)?;
    let stdout = format!(
        "trained {kind} on {} documents ({} sentences, {} features); wrote {}\n",
        model.metadata.documents,
        model.metadata.sentences,
        model.vocabulary.len(),
        args.out.display()
    );
    let stderr: String = model.metadata.warnings.iter().map(|w| format!("warning: {w}\n")).collect();
    if !model.metadata.converged {
        return Err(CliError::NoConvergence(format!("{stdout}{stderr}training did not converge")));
    }
    Ok(Output { stdout, stderr })
}

#[derive(Debug, Clone)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    pub trees: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Prints the analysis record; optionally writes the HTML report.
pub fn cmd_predict(args: &PredictArgs) -> Result<Output, CliError> {
    let model = ModelFile::load(&args.model)?;
    let text = read_text(&args.input)?;
    let trees = args.trees.as_deref().map(load_document_trees).transpose()?;
    let result = analyze(&model, &text, trees.as_deref())?;
    if let Some(path) = &args.report {
        write_report(&result, path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(Output { stdout: result.to_json(), stderr: String::new() })
}

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub corpus: PathBuf,
    pub model_kind: ModelKind,
    pub trees: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub json: Option<PathBuf>,
}

/// Leave-one-document-out evaluation; `category-ovr` runs the category task.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Output, CliError> {
    let config = load_config(args.config.as_deref(), Some(args.seed))?;
    let corpus = load_corpus(&args.corpus, config.corpus)?;
    let treebank = args.trees.as_deref().map(|p| load_treebank(p, &corpus)).transpose()?;
    let report = match args.model_kind {
        ModelKind::CategoryOvr => run_category_eval(&corpus, &config, treebank.as_ref())?,
        kind => run_detection_eval(&corpus, kind, &config, treebank.as_ref())?,
    };
    if let Some(path) = &args.json {
        write_text(path, &report.to_json())?;
    }
    Ok(Output { stdout: report.render_text(), stderr: String::new() })
}

/// Compares the dynamic-programming kernel with fragment enumeration on
/// random tree pairs.
pub fn cmd_kernel_selftest(pairs: usize, seed: u64) -> Result<Output, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..pairs {
        let t1 = random_tree(&mut rng, 12);
        let t2 = random_tree(&mut rng, 12);
        let f1 = enumerate_fragments_oracle(&t1).map_err(|e| CliError::Failed(e.to_string()))?;
        let f2 = enumerate_fragments_oracle(&t2).map_err(|e| CliError::Failed(e.to_string()))?;
        let count = oracle_pair_count(&f1, &f2) as f64;
        let exact = sstk(&t1, &t2, 1.0).map_err(|e| CliError::Failed(e.to_string()))?;
        if exact != count {
            failures
                .push(format!("pair {k}: lambda=1 kernel {exact} but {count} shared fragment pairs\n  {t1}\n  {t2}"));
        }
        for lambda in [0.5, 0.4] {
            let dp = sstk(&t1, &t2, lambda).map_err(|e| CliError::Failed(e.to_string()))?;
            let err = (dp - oracle_kernel(&f1, &f2, lambda)).abs();
            worst = worst.max(err);
            if err > 1e-9 {
                failures.push(format!("pair {k}: lambda={lambda} error {err:e}\n  {t1}\n  {t2}"));
            }
        }
    }
    let summary = format!("kernel self-test: {pairs} pairs, {} mismatches, max error {worst:e}\n", failures.len());
    if failures.is_empty() {
        Ok(Output { stdout: summary, stderr: String::new() })
    } else {
        Err(CliError::Failed(format!("{summary}{}", failures.join("\n"))))
    }
}
