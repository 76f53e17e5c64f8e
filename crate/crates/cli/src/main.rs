use clap::{Parser, Subcommand};
use claudette::model::{ModelFile, ModelKind};
use claudette_cli::service::{serve, DEFAULT_MAX_BODY};
use claudette_cli::{
    cmd_evaluate, cmd_kernel_selftest, cmd_predict, cmd_stats, cmd_train, load_config, CliError, EvaluateArgs, Output,
    PredictArgs, Task, TrainArgs,
};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "claudette", version, about = "Detect potentially unfair clauses in Terms of Service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics and their comparison with the reference table.
    Stats {
        dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train a model on a tagged corpus.
    Train {
        #[arg(long, default_value = "detect")]
        task: Task,
        #[arg(long, default_value = "linear-bow")]
        model: ModelKind,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        trees: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyse one plain-text document with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        trees: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Leave-one-document-out evaluation.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model_kind: ModelKind,
        #[arg(long)]
        trees: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Serve POST /analyze and GET /health.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = DEFAULT_MAX_BODY)]
        max_body: usize,
    },
    /// Check the tree kernel against brute-force fragment enumeration.
    KernelSelftest {
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Stats { dir, config } => cmd_stats(&dir, &load_config(config.as_deref(), None)?),
        Command::Train { task, model, corpus, trees, config, seed, out } => {
            cmd_train(&TrainArgs { task, model, corpus, trees, config, seed, out })
        }
        Command::Predict { model, input, trees, report } => cmd_predict(&PredictArgs { model, input, trees, report }),
        Command::Evaluate { corpus, model_kind, trees, config, seed, json } => {
            cmd_evaluate(&EvaluateArgs { corpus, model_kind, trees, config, seed, json })
        }
        Command::Serve { model, port, host, max_body } => {
            let model = ModelFile::load(&model)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Data(e.to_string()))?;
            runtime
                .block_on(async {
                    let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                    eprintln!("listening on {}", listener.local_addr()?);
                    serve(listener, model, max_body).await
                })
                .map_err(|e| CliError::Data(e.to_string()))?;
            Ok(Output::default())
        }
        Command::KernelSelftest { pairs, seed } => cmd_kernel_selftest(pairs, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
