//! `qpmsa`: runs the multi-scale analysis experiments and writes plot-ready
//! reports under an output directory.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{EStarMode, Experiment, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] qpmsa::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Parser)]
#[command(name = "qpmsa", version, about = "Multi-scale analysis of quasi-periodic Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble H_Λ(θ*) and check its structure and the resolvent identity
    Assemble(Opts),
    /// Run the multi-scale induction and write the stage trace
    Msa(Opts),
    /// Trace the eigenvalue curves of a resonant block
    Curve(Opts),
    /// Scan integrated-density-of-states increments over shrinking windows
    Ids(Opts),
    /// Spatial moments of e^{itH}e₀
    Moments(Opts),
    /// Every experiment plus the randomized lemma sweeps
    VerifyAll(Opts),
    /// Run the experiment named in the config file
    Run(Opts),
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// TOML or JSON run config; the built-in d = 1 config when absent
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_star: Option<f64>,
    /// reference energy; replaces any reference mode in the config
    #[arg(long, allow_hyphen_values = true, conflicts_with = "reference")]
    e_star: Option<f64>,
    /// take E* as the eigenvalue of the target box nearest v(θ*)
    #[arg(long)]
    reference: bool,
    /// box [−R, R]^d
    #[arg(long, conflicts_with = "side")]
    radius: Option<i64>,
    /// sites per axis of the box
    #[arg(long)]
    side: Option<i64>,
    #[arg(long)]
    stages: Option<usize>,
    /// TOML or JSON file replacing the schedule section
    #[arg(long)]
    schedule_file: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// concurrent solves; all cores by default
    #[arg(long)]
    workers: Option<usize>,
}

fn resolve(experiment: Option<Experiment>, o: Opts) -> Result<RunConfig, CliError> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::from_file(p)?,
        None if experiment.is_none() => return Err(CliError::Config("`run` needs --config".into())),
        None => RunConfig::builtin(),
    };
    if let Some(e) = experiment {
        cfg.experiment = e;
    }
    if let Some(p) = &o.schedule_file {
        cfg.load_schedule(p)?;
    }
    if let Some(d) = o.dim {
        cfg.model.dim = d;
    }
    if let Some(e) = o.epsilon {
        cfg.model.epsilon = e;
    }
    if let Some(t) = o.theta_star {
        cfg.target.theta_star = t;
    }
    if let Some(e) = o.e_star {
        cfg.target.e_star = Some(e);
        cfg.target.e_star_mode = None;
    }
    if o.reference {
        cfg.target.e_star = None;
        cfg.target.e_star_mode = Some(EStarMode::Reference);
    }
    if let Some(r) = o.radius {
        cfg.target.side = 2 * r + 1;
    }
    if let Some(s) = o.side {
        cfg.target.side = s;
    }
    if let Some(n) = o.stages {
        cfg.schedule.stages = n;
    }
    if let Some(d) = o.out_dir {
        cfg.out_dir = d;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if o.workers.is_some() {
        cfg.workers = o.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cfg: RunConfig) -> Result<report::Summary, CliError> {
    if let Some(n) = cfg.workers {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let env = experiments::Env::new(cfg)?;
    let manifest = json!({
        "tool": "qpmsa",
        "version": env!("CARGO_PKG_VERSION"),
        "config": env.cfg,
        "seed": env.cfg.seed,
        "e_star_resolved": env.e_star,
        "omega": env.omega.as_slice(),
    });
    let mut out = report::Output::create(env.cfg.out_dir.clone(), manifest)?;
    let summary = experiments::run(&env, &mut out)?;
    out.finish(&summary)?;
    Ok(summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, opts) = match cli.command {
        Command::Assemble(o) => (Some(Experiment::Assemble), o),
        Command::Msa(o) => (Some(Experiment::Msa), o),
        Command::Curve(o) => (Some(Experiment::Curve), o),
        Command::Ids(o) => (Some(Experiment::Ids), o),
        Command::Moments(o) => (Some(Experiment::Moments), o),
        Command::VerifyAll(o) => (Some(Experiment::VerifyAll), o),
        Command::Run(o) => (None, o),
    };
    let cfg = match resolve(experiment, opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qpmsa: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(cfg) {
        Ok(summary) => {
            print!("{}", summary.text());
            let failed: Vec<_> = summary.failed().map(|c| c.name.clone()).collect();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                for name in failed {
                    eprintln!("qpmsa: check failed: {name}");
                }
                ExitCode::from(1)
            }
        }
        Err(e @ CliError::Config(_)) => {
            eprintln!("qpmsa: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("qpmsa: {e}");
            ExitCode::from(3)
        }
    }
}
