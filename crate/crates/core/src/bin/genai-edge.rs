//! Command-line front end. Exit codes: 0 success, 1 configuration error,
//! 2 a run aborted (rows finished before the abort are still written).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use genai_edge::config::{load_config, ExperimentConfig, PolicyKind};
use genai_edge::harness::{self, MetricRow};
use genai_edge::{ConfigError, SimError};

#[derive(Parser)]
#[command(name = "genai-edge", about = "Edge GenAI caching and resource allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    plots: bool,
    /// Training episodes for the learner.
    #[arg(long, global = true)]
    episodes: Option<usize>,
    /// Noise-free evaluation episodes per run.
    #[arg(long, global = true)]
    eval_episodes: Option<usize>,
    #[arg(long, global = true)]
    actor_lr: Option<f64>,
    #[arg(long, global = true)]
    critic_lr: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy under one seed.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long)]
        seed: u64,
        /// User count; defaults to the config's.
        #[arg(long)]
        users: Option<usize>,
    },
    /// Every policy over a list of user counts and seeds.
    SweepUsers {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// The learner over a list of learning rates and seeds.
    SweepLr {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        lrs: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn configure(path: Option<&PathBuf>, common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match path {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(h) = common.episodes {
        cfg.agent.episodes = h;
    }
    if let Some(e) = common.eval_episodes {
        cfg.sweep.eval_episodes = e;
    }
    if let Some(lr) = common.actor_lr {
        cfg.agent.actor_lr = lr;
    }
    if let Some(lr) = common.critic_lr {
        cfg.agent.critic_lr = lr;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(rows: &[MetricRow], failures: Vec<String>, cfg: &ExperimentConfig, plots: bool) -> Result<(), Failure> {
    let written = harness::emit_outputs(rows, &cfg.output_dir, plots)?;
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(failures.join("; ")))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    match &cli.command {
        Command::Simulate { config, policy, seed, users } => {
            let mut cfg = configure(config.as_ref(), common)?;
            if let Some(n) = users {
                cfg.scenario.users = *n;
                cfg.validate()?;
            }
            harness::prepare_output_dir(&cfg.output_dir)?;
            let mut rows = Vec::new();
            let result = harness::run_policy_into(*policy, &cfg, *seed, cfg.scenario.users, &mut rows);
            let failures = result.err().map(|e| vec![e.to_string()]).unwrap_or_default();
            finish(&rows, failures, &cfg, common.plots)
        }
        Command::SweepUsers { config, counts, seeds } => {
            let mut cfg = configure(config.as_ref(), common)?;
            if let Some(c) = counts {
                cfg.sweep.user_counts = c.clone();
            }
            if let Some(s) = seeds {
                cfg.sweep.seeds = s.clone();
            }
            cfg.validate()?;
            harness::prepare_output_dir(&cfg.output_dir)?;
            let report = harness::sweep_users(&cfg, &cfg.sweep.user_counts, &cfg.sweep.seeds);
            let failures = report.failures.iter().map(|(l, e)| format!("{l}: {e}")).collect();
            finish(&report.rows, failures, &cfg, common.plots)
        }
        Command::SweepLr { config, lrs, seeds } => {
            let mut cfg = configure(config.as_ref(), common)?;
            if let Some(l) = lrs {
                cfg.sweep.learning_rates = l.clone();
            }
            if let Some(s) = seeds {
                cfg.sweep.seeds = s.clone();
            }
            cfg.validate()?;
            harness::prepare_output_dir(&cfg.output_dir)?;
            let report = harness::sweep_learning_rates(&cfg, &cfg.sweep.learning_rates, &cfg.sweep.seeds);
            for c in harness::converged_rewards(&report.rows) {
                println!("lr={} seed={} converged_reward={:.6}", c.lr.unwrap_or(f64::NAN), c.seed, c.reward);
            }
            let failures = report.failures.iter().map(|(l, e)| format!("{l}: {e}")).collect();
            finish(&report.rows, failures, &cfg, common.plots)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("run aborted: {msg}");
            ExitCode::from(2)
        }
    }
}
