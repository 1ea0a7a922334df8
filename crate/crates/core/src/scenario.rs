//! Scenario constants and the frozen per-run model catalog.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env_model::{GenAiModelSpec, PopularityChain, RadioConfig, MEGABYTE_BITS};
use crate::error::ConfigError;
use crate::seeding::{self, Stream};

/// Sampling ranges for per-model constants. Each draw lands in `(lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub storage_gb: (f64, f64),
    pub output_mb: (f64, f64),
    pub a1: (f64, f64),
    pub a2: (f64, f64),
    pub a3: (f64, f64),
    pub a4: (f64, f64),
    pub b1: (f64, f64),
    pub b2: (f64, f64),
    /// Explicit catalog; overrides sampling when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<GenAiModelSpec>>,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            storage_gb: (2.0, 10.0),
            output_mb: (5.0, 10.0),
            a1: (50.0, 100.0),
            a2: (100.0, 150.0),
            a3: (150.0, 200.0),
            a4: (0.0, 50.0),
            b1: (0.0, 0.5),
            b2: (0.0, 10.0),
            fixed: None,
        }
    }
}

/// All constants of one edge scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub users: usize,
    pub models: usize,
    /// Slots per episode.
    pub slots: usize,
    /// Kept for reference only; delays are not checked against it.
    pub slot_duration_s: f64,
    pub area_m: (f64, f64),
    /// Delay weight in the utility.
    pub alpha: f64,
    /// Total denoising steps available at the BS per slot.
    pub denoising_steps: f64,
    pub capacity_gb: f64,
    pub input_mb: (f64, f64),
    pub user_power_dbm: f64,
    pub min_distance_m: f64,
    /// Penalty delay as a multiple of the worst cloud-path delay.
    pub penalty_factor: f64,
    /// Channel gain range (dB) mapped onto `[0, 1]` in observations.
    pub gain_db_bounds: (f64, f64),
    pub radio: RadioConfig,
    pub catalog: CatalogConfig,
    pub popularity: PopularityChain,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            users: 10,
            models: 10,
            slots: 50,
            slot_duration_s: 20.0,
            area_m: (250.0, 250.0),
            alpha: 0.7,
            denoising_steps: 1000.0,
            capacity_gb: 20.0,
            input_mb: (5.0, 10.0),
            user_power_dbm: 23.0,
            min_distance_m: 1.0,
            penalty_factor: 10.0,
            gain_db_bounds: (-120.0, -60.0),
            radio: RadioConfig::default(),
            catalog: CatalogConfig::default(),
            popularity: PopularityChain::default(),
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), min: f64) -> Result<(), ConfigError> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= min) {
        return Err(ConfigError::invalid(format!(
            "{name} must be a finite range [lo, hi] with {min} <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.users == 0 {
            return Err(ConfigError::invalid("scenario.users must be at least 1"));
        }
        if self.models == 0 {
            return Err(ConfigError::invalid("scenario.models must be at least 1"));
        }
        if self.slots == 0 {
            return Err(ConfigError::invalid("scenario.slots must be at least 1"));
        }
        if !(self.capacity_gb > 0.0) {
            return Err(ConfigError::invalid("scenario.capacity_gb must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::invalid("scenario.alpha must lie in [0, 1]"));
        }
        if !(self.denoising_steps > 0.0) {
            return Err(ConfigError::invalid("scenario.denoising_steps must be positive"));
        }
        if !(self.area_m.0 > 0.0 && self.area_m.1 > 0.0) {
            return Err(ConfigError::invalid("scenario.area_m must be positive"));
        }
        if !(self.min_distance_m > 0.0) {
            return Err(ConfigError::invalid("scenario.min_distance_m must be positive"));
        }
        if !(self.penalty_factor > 0.0) {
            return Err(ConfigError::invalid("scenario.penalty_factor must be positive"));
        }
        if !(self.gain_db_bounds.0 < self.gain_db_bounds.1) {
            return Err(ConfigError::invalid("scenario.gain_db_bounds must be increasing"));
        }
        check_range("scenario.input_mb", self.input_mb, f64::MIN_POSITIVE)?;
        self.radio.validate()?;
        self.popularity.validate()?;

        let c = &self.catalog;
        check_range("catalog.storage_gb", c.storage_gb, 0.0)?;
        check_range("catalog.output_mb", c.output_mb, 0.0)?;
        check_range("catalog.a1", c.a1, 0.0)?;
        check_range("catalog.a2", c.a2, 0.0)?;
        check_range("catalog.a3", c.a3, 0.0)?;
        check_range("catalog.a4", c.a4, 0.0)?;
        check_range("catalog.b1", c.b1, 0.0)?;
        check_range("catalog.b2", c.b2, 0.0)?;
        if !(c.a1.1 < c.a3.0) {
            return Err(ConfigError::invalid("catalog.a1 range must lie below catalog.a3 range"));
        }
        if !(c.a4.1 < c.a2.0) {
            return Err(ConfigError::invalid("catalog.a4 range must lie below catalog.a2 range"));
        }
        if let Some(fixed) = &c.fixed {
            if fixed.len() != self.models {
                return Err(ConfigError::invalid(format!(
                    "catalog.fixed lists {} models but scenario.models is {}",
                    fixed.len(),
                    self.models
                )));
            }
            for spec in fixed {
                spec.validate()?;
            }
        }
        Ok(())
    }

    /// Length of the observation vector.
    pub fn state_dim(&self) -> usize {
        1 + self.users + self.users * self.models + 2 * self.users
    }

    /// Length of the raw action vector.
    pub fn action_dim(&self) -> usize {
        self.models + 2 * self.users
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.random();
    hi - u * (hi - lo)
}

/// Samples one catalog entry per model from the configured ranges.
pub fn sample_catalog<R: Rng + ?Sized>(
    catalog: &CatalogConfig,
    models: usize,
    rng: &mut R,
) -> Vec<GenAiModelSpec> {
    (0..models)
        .map(|_| GenAiModelSpec {
            storage_gb: draw(rng, catalog.storage_gb),
            output_bits: draw(rng, catalog.output_mb) * MEGABYTE_BITS,
            a1: draw(rng, catalog.a1),
            a2: draw(rng, catalog.a2),
            a3: draw(rng, catalog.a3),
            a4: draw(rng, catalog.a4),
            b1: draw(rng, catalog.b1),
            b2: draw(rng, catalog.b2),
        })
        .collect()
}

/// A validated configuration plus the model catalog frozen for the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub models: Vec<GenAiModelSpec>,
    /// Delay charged when a transfer cannot proceed, and the cap on any
    /// user's total delay.
    pub penalty_delay: f64,
}

impl Scenario {
    /// Validates `config` and freezes the catalog drawn from `seed`.
    pub fn new(config: SystemConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let models = match &config.catalog.fixed {
            Some(fixed) => fixed.clone(),
            None => {
                let mut rng = seeding::rng(seed, Stream::Catalog);
                sample_catalog(&config.catalog, config.models, &mut rng)
            }
        };
        for spec in &models {
            spec.validate()?;
        }
        let penalty_delay = config.penalty_factor * worst_cloud_delay(&config, &models);
        Ok(Self { config, models, penalty_delay })
    }

    /// Same catalog, different user count.
    pub fn with_users(&self, users: usize) -> Result<Self, ConfigError> {
        let mut config = self.config.clone();
        config.users = users;
        config.validate()?;
        Ok(Self { config, ..self.clone() })
    }

    pub fn users(&self) -> usize {
        self.config.users
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn state_dim(&self) -> usize {
        self.config.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.config.action_dim()
    }

    /// Largest utility magnitude a single user can incur.
    pub fn utility_bound(&self) -> f64 {
        let max_a2 = self.models.iter().map(|m| m.a2).fold(0.0, f64::max);
        self.config.alpha * self.penalty_delay + (1.0 - self.config.alpha) * max_a2
    }
}

/// Backhaul legs at the largest sizes plus the slowest cloud generation.
fn worst_cloud_delay(config: &SystemConfig, models: &[GenAiModelSpec]) -> f64 {
    let d_in_max = config.input_mb.1 * MEGABYTE_BITS;
    models
        .iter()
        .map(|m| {
            d_in_max / config.radio.backhaul_up_bps
                + m.output_bits / config.radio.backhaul_down_bps
                + m.cloud_generation_delay()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_catalog_respects_ranges() {
        let s = Scenario::new(SystemConfig::default(), 7).unwrap();
        assert_eq!(s.models.len(), 10);
        for m in &s.models {
            assert!(m.storage_gb > 2.0 && m.storage_gb <= 10.0);
            assert!(m.output_bits > 5.0 * MEGABYTE_BITS && m.output_bits <= 10.0 * MEGABYTE_BITS);
            assert!(m.a1 > 50.0 && m.a1 <= 100.0);
            assert!(m.a3 > 150.0 && m.a3 <= 200.0);
            assert!(m.a4 > 0.0 && m.a4 <= 50.0);
            assert!(m.b1 > 0.0 && m.b1 <= 0.5);
            assert!(m.b2 > 0.0 && m.b2 <= 10.0);
            m.validate().unwrap();
        }
        assert!(s.penalty_delay > 0.0);
    }

    #[test]
    fn catalog_is_seeded() {
        let a = Scenario::new(SystemConfig::default(), 3).unwrap();
        let b = Scenario::new(SystemConfig::default(), 3).unwrap();
        let c = Scenario::new(SystemConfig::default(), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.models, c.models);
        // user count does not change the catalog
        assert_eq!(a.with_users(18).unwrap().models, a.models);
    }

    #[test]
    fn rejects_bad_configs() {
        for tweak in [
            |c: &mut SystemConfig| c.users = 0,
            |c: &mut SystemConfig| c.models = 0,
            |c: &mut SystemConfig| c.capacity_gb = 0.0,
            |c: &mut SystemConfig| c.alpha = 1.5,
            |c: &mut SystemConfig| c.catalog.a1 = (50.0, 160.0),
        ] {
            let mut c = SystemConfig::default();
            tweak(&mut c);
            assert!(Scenario::new(c, 0).is_err());
        }
    }

    #[test]
    fn dimensions() {
        let c = SystemConfig::default();
        assert_eq!(c.state_dim(), 1 + 10 + 100 + 20);
        assert_eq!(c.action_dim(), 30);
    }
}
