//! Experiment configuration files.
//!
//! Configs are TOML. Every key is optional; omitted keys take the default
//! scenario values (50 slots, alpha 0.7, 20 GB storage, 1000 denoising
//! steps, discount 0.99, target rate 0.005, 500 episodes). Unknown keys are
//! rejected.
//!
//! ```toml
//! output_dir = "out"
//!
//! [scenario]
//! users = 10
//! models = 10
//!
//! [scenario.radio]
//! uplink_hz = 20e6
//!
//! [agent]
//! episodes = 300
//! hidden = [256, 256]
//!
//! [ga]
//! population = 50
//!
//! [sweep]
//! user_counts = [10, 14, 18]
//! seeds = [1, 2, 3]
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::GaConfig;
use crate::ddpg::DdpgHyperparams;
use crate::error::ConfigError;
use crate::scenario::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Ddpg,
    Hcras,
    Rcars,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Ddpg, PolicyKind::Hcras, PolicyKind::Rcars];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ddpg => "ddpg",
            PolicyKind::Hcras => "hcras",
            PolicyKind::Rcars => "rcars",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ddpg" => Ok(PolicyKind::Ddpg),
            "hcras" => Ok(PolicyKind::Hcras),
            "rcars" => Ok(PolicyKind::Rcars),
            other => Err(ConfigError::invalid(format!(
                "unknown policy {other:?} (expected ddpg, hcras or rcars)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub user_counts: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyKind>,
    /// Noise-free evaluation episodes per run.
    pub eval_episodes: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            user_counts: vec![10, 12, 14, 16, 18],
            learning_rates: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            seeds: vec![1, 2, 3],
            policies: PolicyKind::ALL.to_vec(),
            eval_episodes: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    /// Fill the `wall_s` metric column with measured time. Off by default
    /// so reruns produce identical files.
    pub record_wall_clock: bool,
    pub scenario: SystemConfig,
    pub agent: DdpgHyperparams,
    pub ga: GaConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            record_wall_clock: false,
            scenario: SystemConfig::default(),
            agent: DdpgHyperparams::default(),
            ga: GaConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate()?;
        self.agent.validate()?;
        self.ga.validate()?;
        let sw = &self.sweep;
        if sw.user_counts.is_empty() || sw.user_counts.contains(&0) {
            return Err(ConfigError::invalid("sweep.user_counts must be non-empty and positive"));
        }
        if sw.learning_rates.is_empty() || sw.learning_rates.iter().any(|lr| !(*lr > 0.0)) {
            return Err(ConfigError::invalid("sweep.learning_rates must be non-empty and positive"));
        }
        if sw.seeds.is_empty() {
            return Err(ConfigError::invalid("sweep.seeds must be non-empty"));
        }
        if sw.seeds.iter().collect::<HashSet<_>>().len() != sw.seeds.len() {
            return Err(ConfigError::invalid("sweep.seeds must be distinct"));
        }
        if sw.policies.is_empty() {
            return Err(ConfigError::invalid("sweep.policies must be non-empty"));
        }
        if sw.eval_episodes == 0 {
            return Err(ConfigError::invalid("sweep.eval_episodes must be at least 1"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Line of the first assignment to the last segment of a dotted key.
fn locate(text: &str, key_path: &str) -> Option<usize> {
    let key = key_path.rsplit('.').next()?;
    text.lines().position(|line| {
        let line = line.trim_start();
        line.strip_prefix(key)
            .map(|rest| rest.trim_start().starts_with('='))
            .unwrap_or(false)
    })
    .map(|i| i + 1)
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate().map_err(|e| match e {
        ConfigError::Invalid(message) => {
            let key = message.split_whitespace().next().unwrap_or_default();
            match locate(text, key).filter(|_| key.contains('.')) {
                Some(line) => ConfigError::AtLine { line, message },
                None => ConfigError::Invalid(message),
            }
        }
        other => other,
    })?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}
