use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Result};
use clap::Parser;
use litscape_core::pipeline::{self, fixture, ErrorClass, PipelineError, RunConfig, RunOptions, StageName, StageStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Stage(StageName),
    All,
    Verify,
    Fixture,
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Target::All),
            "verify" => Ok(Target::Verify),
            "fixture" => Ok(Target::Fixture),
            s => s.parse().map(Target::Stage).map_err(|_| {
                let names: Vec<&str> = StageName::ALL.iter().map(|n| n.as_str()).collect();
                format!("unknown target {s:?}; expected all, verify, fixture or one of {}", names.join(", "))
            }),
        }
    }
}

/// Map a literature corpus: harvest full texts, embed, project, cluster,
/// label clusters, extract structured fields and report statistics.
#[derive(Debug, Parser)]
#[command(name = "litscape", version)]
struct Cli {
    /// A stage name, `all`, `verify` (check outputs against the manifest)
    /// or `fixture` (write the offline mini corpus to DIR).
    target: Target,

    /// Directory for `fixture`.
    dir: Option<PathBuf>,

    /// Run configuration (JSON).
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Global seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Continue an interrupted harvest from its previous output.
    #[arg(long)]
    resume: bool,

    /// Run stages even when their inputs are unchanged.
    #[arg(long)]
    force: bool,

    /// JSON file merged over the config, for provider endpoints and tokens.
    #[arg(long, value_name = "PATH")]
    providers: Option<PathBuf>,

    /// Worker count for harvesting, embedding and extraction.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Output directory; overrides the config.
    #[arg(short, long)]
    output: Option<PathBuf>,

    /// Only log warnings and errors.
    #[arg(short, long)]
    quiet: bool,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_deref().ok_or_else(|| PipelineError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load_with_overlay(path, cli.providers.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!(PipelineError::Config("--workers must be at least 1".into()));
        }
        cfg.harvest.workers = n;
        cfg.embedding.workers = n;
        cfg.chat.workers = n;
    }
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool> {
    match cli.target {
        Target::Fixture => {
            let dir = cli.dir.as_deref().ok_or_else(|| PipelineError::Config("fixture needs a target directory".into()))?;
            let config = fixture::write_mini_corpus(dir)?;
            log::info!("mini corpus written; run with --config {}", config.display());
            Ok(true)
        }
        Target::Verify => {
            let out = match &cli.output {
                Some(o) => o.clone(),
                None => load_config(cli)?.output_dir,
            };
            let problems = pipeline::verify_manifest(&out)?;
            for p in &problems {
                log::error!("{p}");
            }
            if problems.is_empty() {
                log::info!("all outputs in {} match the manifest", out.display());
            }
            Ok(problems.is_empty())
        }
        Target::All | Target::Stage(_) => {
            let cfg = load_config(cli)?;
            let stages = match cli.target {
                Target::Stage(s) => vec![s],
                _ => Vec::new(),
            };
            let opts = RunOptions { stages, resume: cli.resume, force: cli.force };
            let m = pipeline::run(&cfg, &opts)?;
            let ran = m.stages.iter().filter(|s| s.status == StageStatus::Ran).count();
            let skipped = m.stages.iter().filter(|s| s.status == StageStatus::Skipped).count();
            log::info!("{ran} stages ran, {skipped} skipped; outputs in {}", cfg.output_dir.display());
            Ok(true)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<PipelineError>())
        .map_or(ErrorClass::Other, PipelineError::class)
        .exit_code() as u8
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(ErrorClass::Other.exit_code() as u8),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
