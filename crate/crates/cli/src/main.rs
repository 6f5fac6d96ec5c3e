mod commands;
mod settings;
mod trace_text;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use determlr::{Ablation, BackendChoice, Dataset};

/// Premise-driven logical reasoning over pluggable backends.
#[derive(Debug, Parser)]
#[command(name = "determlr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every case of a dataset file and report aggregates.
    Run(RunArgs),
    /// Solve one case read from a file or stdin and print its trace.
    Solve(SolveArgs),
    /// Run the case recorded in a fixture against its scripted responses.
    Replay(ReplayArgs),
    /// Compare the symbolic oracle with brute-force closure on random theories.
    OracleCheck(OracleArgs),
    /// Re-aggregate saved traces or per-case results.
    Report(ReportArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct EngineArgs {
    /// Key-value config file (TOML or JSON) mirroring the engine settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Derived determinate premises required before concluding.
    #[arg(long)]
    pub n_determinate: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Disable a stage: no-identify, no-priority or no-memory. Repeatable.
    #[arg(long)]
    pub ablation: Vec<Ablation>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct BackendArgs {
    #[arg(long, value_parser = parse_backend)]
    pub backend: Option<BackendChoice>,
    #[arg(long)]
    pub model: Option<String>,
    /// Chat-completions URL for the llm backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Response cache directory for the llm backend.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Recorded transcript for the replay backend.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub dataset: Dataset,
    #[arg(long)]
    pub path: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Directory for the report and the traces.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format: json, csv or markdown.
    #[arg(long, default_value = "json")]
    pub format: determlr::harness::ReportFormat,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Case record (JSON); stdin when absent or "-".
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Dataset of the record when the record does not name one.
    #[arg(long)]
    pub dataset: Option<Dataset>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// File for the JSON trace.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub fixture: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// File for the JSON trace.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Random theories to generate.
    #[arg(long, default_value_t = 500)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Forward-chaining round cutoff.
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    /// File for the JSON summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON-lines file of traces or per-case results. Repeatable.
    #[arg(long, required = true)]
    pub path: Vec<PathBuf>,
    #[arg(long)]
    pub dataset: Option<Dataset>,
    #[arg(long, default_value = "json")]
    pub format: determlr::harness::ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_backend(s: &str) -> Result<BackendChoice, String> {
    s.parse().map_err(|e: determlr::Error| e.to_string())
}

/// Failure of a command, mapped onto the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Execution(String),
}

impl From<determlr::Error> for Failure {
    fn from(e: determlr::Error) -> Self {
        Failure::Execution(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Execution(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("DETERMLR_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();
    let outcome = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Solve(args) => commands::solve(args),
        Command::Replay(args) => commands::replay(args),
        Command::OracleCheck(args) => commands::oracle_check(args),
        Command::Report(args) => commands::report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Execution(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
