//! Command-line driver: configuration, subcommands and report writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::{CliError, Outcome};

#[derive(Debug, Parser)]
#[command(name = "t2m-eval", version, about = "Evaluate text-to-motion outputs")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Abort on invalid records and reject fenced judge replies.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Jitter, ground and body penetration, foot contact metrics.
    EvalPhysical,
    /// Matching score, retrieval precision, ASR, multimodality, diversity.
    EvalSemantic,
    /// Control accuracy against root and body-part targets.
    EvalFinegrained,
    /// Score frame strips with a vision-language judge.
    Judge,
    /// Attribute scores and best output per prompt.
    ScoreSelect,
}

/// Effective configuration after command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.strict |= cli.strict;
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(command: Command, ctx: &Context) -> Result<Outcome, CliError> {
    match command {
        Command::EvalPhysical => commands::eval_physical(ctx),
        Command::EvalSemantic => commands::eval_semantic(ctx),
        Command::EvalFinegrained => commands::eval_finegrained(ctx),
        Command::Judge => commands::judge(ctx),
        Command::ScoreSelect => commands::score_select(ctx),
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = effective_config(&cli).and_then(|config| {
        let jobs = cli
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        execute(cli.command, &Context { config, jobs })
    });
    match result {
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("warning: {f}");
            }
            eprintln!("{} rows written", outcome.rows);
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
