//! Experiment runs, sweeps, aggregation and CSV output.
//!
//! `metrics.csv` is the record. Every aggregate file is recomputed from its
//! rows, so reloading `metrics.csv` reproduces them byte for byte.
//!
//! Training episodes of the learner are logged under the policy name
//! `ddpg-train`; noise-free evaluation episodes of every policy use the
//! policy's own name.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, PolicyKind};
use crate::ddpg::{self, DdpgAgent};
use crate::error::{Result, SimError};
use crate::mdp::{self, Environment};
use crate::plot;
use crate::policy::{self, Greedy, Hcras, Policy, Rcars};
use crate::scenario::Scenario;
use crate::seeding::{self, Stream};

pub const METRICS_HEADER: &str = "policy,seed,users,lr,episode,reward,hit_ratio,objective,wall_s";
pub const TRAIN_POLICY: &str = "ddpg-train";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub policy: String,
    pub seed: u64,
    pub users: usize,
    /// Learning rate of learner rows; empty for the baselines.
    pub lr: Option<f64>,
    /// One-based training or evaluation episode index.
    pub episode: usize,
    pub reward: f64,
    pub hit_ratio: f64,
    pub objective: f64,
    pub wall_s: f64,
}

impl MetricRow {
    pub fn is_training(&self) -> bool {
        self.policy == TRAIN_POLICY
    }
}

struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self { start: Instant::now(), enabled }
    }

    fn elapsed(&self) -> f64 {
        if self.enabled {
            self.start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }
}

fn evaluate(
    env: &mut Environment,
    policy: &mut dyn Policy,
    episodes: usize,
    seed: u64,
    lr: Option<f64>,
    clock: &Clock,
    rows: &mut Vec<MetricRow>,
) -> Result<()> {
    let users = env.scenario().users();
    for episode in 1..=episodes {
        let traces = policy::run_episode(env, policy)?;
        rows.push(MetricRow {
            policy: policy.name().to_string(),
            seed,
            users,
            lr,
            episode,
            reward: traces.iter().map(|t| t.reward).sum::<f64>() / traces.len() as f64,
            hit_ratio: mdp::hit_ratio(&traces),
            objective: mdp::objective_average(&traces)?,
            wall_s: clock.elapsed(),
        });
    }
    Ok(())
}

/// Runs one policy under one seed with `users` users.
///
/// The learner trains first and is then evaluated without noise; the
/// baselines are evaluated directly. All policies draw evaluation episodes
/// from the same seeded environment stream.
pub fn run_policy(kind: PolicyKind, config: &ExperimentConfig, seed: u64, users: usize) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    run_policy_into(kind, config, seed, users, &mut rows)?;
    Ok(rows)
}

/// As [`run_policy`], appending to `rows` as episodes finish so that rows
/// produced before an error are kept.
pub fn run_policy_into(
    kind: PolicyKind,
    config: &ExperimentConfig,
    seed: u64,
    users: usize,
    rows: &mut Vec<MetricRow>,
) -> Result<()> {
    let mut scenario_cfg = config.scenario.clone();
    scenario_cfg.users = users;
    let scenario = Scenario::new(scenario_cfg, seed)?;
    let clock = Clock::new(config.record_wall_clock);
    let episodes = config.sweep.eval_episodes;
    let mut eval_env = Environment::new(scenario.clone(), seeding::rng(seed, Stream::EvalEnv));

    match kind {
        PolicyKind::Ddpg => {
            config.agent.validate()?;
            let lr = Some(config.agent.actor_lr);
            let mut agent_rng = seeding::rng(seed, Stream::Agent);
            let mut agent = DdpgAgent::new(
                scenario.state_dim(),
                scenario.action_dim(),
                config.agent.clone(),
                &mut agent_rng,
            )?;
            let mut train_env = Environment::new(scenario, seeding::rng(seed, Stream::TrainEnv));
            ddpg::train(&mut agent, &mut train_env, &mut agent_rng, |ep| {
                rows.push(MetricRow {
                    policy: TRAIN_POLICY.to_string(),
                    seed,
                    users,
                    lr,
                    episode: ep.episode,
                    reward: ep.mean_reward,
                    hit_ratio: ep.hit_ratio,
                    objective: ep.objective,
                    wall_s: clock.elapsed(),
                })
            })?;
            let mut greedy = Greedy { actor: agent.actor };
            evaluate(&mut eval_env, &mut greedy, episodes, seed, lr, &clock, rows)
        }
        PolicyKind::Hcras => {
            config.ga.validate()?;
            let mut p = Hcras { ga: config.ga.clone(), rng: seeding::rng(seed, Stream::Policy) };
            evaluate(&mut eval_env, &mut p, episodes, seed, None, &clock, rows)
        }
        PolicyKind::Rcars => {
            let mut p = Rcars { rng: seeding::rng(seed, Stream::Policy) };
            evaluate(&mut eval_env, &mut p, episodes, seed, None, &clock, rows)
        }
    }
}

/// Rows from every finished cell plus the failures, in cell order.
#[derive(Debug, Default)]
pub struct SweepReport {
    pub rows: Vec<MetricRow>,
    pub failures: Vec<(String, SimError)>,
}

impl SweepReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Worker count from `SIM_THREADS`, defaulting to the available cores.
pub fn thread_count() -> usize {
    std::env::var("SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

#[derive(Debug, Clone)]
struct Cell {
    label: String,
    kind: PolicyKind,
    config: ExperimentConfig,
    seed: u64,
    users: usize,
}

fn run_cells(cells: Vec<Cell>) -> SweepReport {
    let run = |cell: &Cell| {
        let mut rows = Vec::new();
        let result = run_policy_into(cell.kind, &cell.config, cell.seed, cell.users, &mut rows);
        (cell.label.clone(), rows, result)
    };
    let results: Vec<(String, Vec<MetricRow>, Result<()>)> = match rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
    {
        Ok(pool) => pool.install(|| cells.par_iter().map(run).collect()),
        Err(_) => cells.iter().map(run).collect(),
    };
    let mut report = SweepReport::default();
    for (label, rows, result) in results {
        report.rows.extend(rows);
        if let Err(e) = result {
            report.failures.push((label, e));
        }
    }
    report
}

/// Every configured policy at every user count under every seed.
pub fn sweep_users(config: &ExperimentConfig, counts: &[usize], seeds: &[u64]) -> SweepReport {
    let mut cells = Vec::new();
    for &kind in &config.sweep.policies {
        for &users in counts {
            for &seed in seeds {
                cells.push(Cell {
                    label: format!("{} users={users} seed={seed}", kind.name()),
                    kind,
                    config: config.clone(),
                    seed,
                    users,
                });
            }
        }
    }
    run_cells(cells)
}

/// One learner run per (learning rate, seed). The swept value is used for
/// both the actor and the critic.
pub fn sweep_learning_rates(config: &ExperimentConfig, lrs: &[f64], seeds: &[u64]) -> SweepReport {
    let mut cells = Vec::new();
    for &lr in lrs {
        for &seed in seeds {
            let mut cfg = config.clone();
            cfg.agent.actor_lr = lr;
            cfg.agent.critic_lr = lr;
            cells.push(Cell {
                label: format!("ddpg lr={lr} seed={seed}"),
                kind: PolicyKind::Ddpg,
                users: cfg.scenario.users,
                config: cfg,
                seed,
            });
        }
    }
    run_cells(cells)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Key wrapper ordering floats by `total_cmp`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub users: usize,
    pub lr: Option<f64>,
    pub episode: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub seeds: usize,
}

/// Training reward per episode, averaged over seeds.
pub fn convergence_curve(rows: &[MetricRow]) -> Vec<ConvergencePoint> {
    let mut groups: BTreeMap<(usize, Option<Key>, usize), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_training()) {
        groups.entry((r.users, r.lr.map(Key), r.episode)).or_default().push(r.reward);
    }
    groups
        .into_iter()
        .map(|((users, lr, episode), rewards)| {
            let (mean_reward, std_reward) = mean_std(&rewards);
            ConvergencePoint { users, lr: lr.map(|k| k.0), episode, mean_reward, std_reward, seeds: rewards.len() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub users: usize,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

/// Per-seed evaluation means of `metric`, then mean and standard deviation
/// across seeds for each (policy, users).
pub fn summarize(rows: &[MetricRow], metric: impl Fn(&MetricRow) -> f64) -> Vec<PolicySummary> {
    let mut per_seed: BTreeMap<(String, usize, u64), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.is_training()) {
        per_seed.entry((r.policy.clone(), r.users, r.seed)).or_default().push(metric(r));
    }
    let mut groups: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for ((policy, users, _), values) in per_seed {
        groups.entry((policy, users)).or_default().push(mean_std(&values).0);
    }
    groups
        .into_iter()
        .map(|((policy, users), means)| {
            let (mean, std) = mean_std(&means);
            PolicySummary { policy, users, mean, std, seeds: means.len() }
        })
        .collect()
}

pub fn hit_ratio_summary(rows: &[MetricRow]) -> Vec<PolicySummary> {
    summarize(rows, |r| r.hit_ratio)
}

pub fn objective_summary(rows: &[MetricRow]) -> Vec<PolicySummary> {
    summarize(rows, |r| r.objective)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergedReward {
    pub users: usize,
    pub lr: Option<f64>,
    pub seed: u64,
    pub reward: f64,
}

/// Mean training reward over the final tenth of each run's episodes.
pub fn converged_rewards(rows: &[MetricRow]) -> Vec<ConvergedReward> {
    let mut runs: BTreeMap<(usize, Option<Key>, u64), Vec<(usize, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_training()) {
        runs.entry((r.users, r.lr.map(Key), r.seed)).or_default().push((r.episode, r.reward));
    }
    runs.into_iter()
        .map(|((users, lr, seed), mut eps)| {
            eps.sort_by_key(|e| e.0);
            let tail = (eps.len() / 10).max(1);
            let reward = eps[eps.len() - tail..].iter().map(|e| e.1).sum::<f64>() / tail as f64;
            ConvergedReward { users, lr: lr.map(|k| k.0), seed, reward }
        })
        .collect()
}

/// Creates `dir` and proves it is writable.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    out.write_record(header.split(','))?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<()> {
    write_csv(path, METRICS_HEADER, rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows: std::result::Result<Vec<MetricRow>, _> = rdr.deserialize().collect();
    Ok(rows?)
}

pub const FIG3_FILE: &str = "fig3_convergence.csv";
pub const FIG4_FILE: &str = "fig4_hit_ratio.csv";
pub const FIG5_FILE: &str = "fig5_objective.csv";

/// Writes the aggregate files derived from `rows`.
pub fn write_aggregates(rows: &[MetricRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let fig3 = out_dir.join(FIG3_FILE);
    write_csv(&fig3, "users,lr,episode,mean_reward,std_reward,seeds", &convergence_curve(rows))?;
    let fig4 = out_dir.join(FIG4_FILE);
    write_csv(&fig4, "policy,users,mean_hit_ratio,std_hit_ratio,seeds", &hit_ratio_summary(rows))?;
    let fig5 = out_dir.join(FIG5_FILE);
    write_csv(&fig5, "policy,users,mean_objective,std_objective,seeds", &objective_summary(rows))?;
    Ok(vec![fig3, fig4, fig5])
}

/// Writes `metrics.csv`, the aggregate CSVs and, if asked, SVG plots.
pub fn emit_outputs(rows: &[MetricRow], out_dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    prepare_output_dir(out_dir)?;
    let metrics = out_dir.join("metrics.csv");
    write_metrics(&metrics, rows)?;
    let mut written = vec![metrics];
    written.extend(write_aggregates(rows, out_dir)?);
    if plots {
        written.extend(plot::write_plots(rows, out_dir)?);
    }
    Ok(written)
}
