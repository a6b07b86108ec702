//! `iris`: build paired IR corpora, translate GIMPLE and score the results.

mod commands;
mod config;
mod runner;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "iris", version, about = "GIMPLE to LLVM IR corpus and evaluation toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true, env = "IRIS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Print the planned actions and exit without touching anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Continue from the checkpoint of an interrupted run.
    #[arg(long, global = true)]
    pub resume: bool,
    /// Worker threads.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Seed for clustering, splits and sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for default output paths.
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    /// Exit with status 4 when more than this fraction of items fails.
    #[arg(long, global = true)]
    pub failure_threshold: Option<f64>,
    /// No per-item progress on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build a corpus from a directory of C sources.
    Ingest(commands::IngestArgs),
    /// Split translation-unit records into function-level records.
    Pairs(commands::PairsArgs),
    /// Attach static (and optionally dynamic) metrics to every record.
    Metrics(commands::MetricsArgs),
    /// Keep k diverse submissions per group.
    Select(commands::SelectArgs),
    /// Translate every sample's GIMPLE and record the outputs.
    Translate(commands::TranslateArgs),
    /// Score recorded translations.
    Eval(commands::EvalArgs),
    /// Failure analysis and leaderboard tables.
    Report(commands::ReportArgs),
}

/// Command failures, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    ToolchainMissing(String),
    Partial { stage: &'static str, failed: usize, total: usize, threshold: f64 },
    Interrupted { checkpoint: PathBuf },
    Runtime(anyhow::Error),
}

impl<E: std::error::Error + Send + Sync + 'static> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::ToolchainMissing(_) => 3,
            Failure::Partial { .. } => 4,
            Failure::Interrupted { .. } => 130,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config: {m}"),
            Failure::ToolchainMissing(m) => format!("toolchain: {m}"),
            Failure::Partial { stage, failed, total, threshold } => {
                format!("{stage}: {failed} of {total} items failed (threshold {:.0}%)", threshold * 100.0)
            }
            Failure::Interrupted { checkpoint } => {
                format!("interrupted; checkpoint at {}, rerun with --resume", checkpoint.display())
            }
            Failure::Runtime(e) => format!("{e:#}"),
        }
    }
}

fn settings(g: &Global) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(g.config.as_deref()).map_err(Failure::Config)?;
    if let Some(p) = g.parallelism {
        cfg.parallelism = p;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(w) = &g.workdir {
        cfg.workdir = w.clone();
    }
    if let Some(t) = g.failure_threshold {
        cfg.failure_threshold = t;
    }
    cfg.check().map_err(Failure::Config)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let _ = ctrlc::set_handler(|| {
        if runner::INTERRUPTED.swap(true, std::sync::atomic::Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupt: finishing in-flight items (press again to abort)");
    });
    let stage = match &cli.command {
        Command::Ingest(_) => "ingest",
        Command::Pairs(_) => "pairs",
        Command::Metrics(_) => "metrics",
        Command::Select(_) => "select",
        Command::Translate(_) => "translate",
        Command::Eval(_) => "eval",
        Command::Report(_) => "report",
    };
    let result = settings(&cli.global).and_then(|mut cfg| {
        let g = &cli.global;
        match &cli.command {
            Command::Ingest(a) => commands::ingest(a, &mut cfg, g),
            Command::Pairs(a) => commands::pairs(a, &cfg, g),
            Command::Metrics(a) => commands::metrics(a, &cfg, g),
            Command::Select(a) => commands::select(a, &mut cfg, g),
            Command::Translate(a) => commands::translate(a, &mut cfg, g),
            Command::Eval(a) => commands::eval(a, &cfg, g),
            Command::Report(a) => commands::report(a, &mut cfg, g),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("iris {stage}: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
