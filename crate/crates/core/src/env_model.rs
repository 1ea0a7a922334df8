//! Physical and statistical models of the edge system: request popularity,
//! the radio channel, transmission delays, and the fitted image-generation
//! computing model.
//!
//! Everything here is a pure function of its arguments. Randomness enters
//! only through an explicitly passed generator.
//!
//! Indices are zero-based throughout the crate: model `0` is the most
//! popular model under a Zipf law, popularity state `0` is the first state
//! of the chain.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Bits per megabyte (decimal convention).
pub const MEGABYTE_BITS: f64 = 8.0e6;

/// Fitted constants of one generative model variant.
///
/// The quality curve is measured in total variation (lower is better): `a2`
/// below `a1` denoising steps, falling linearly to `a4` at `a3` steps.
/// Generation time is `b1` seconds per step plus a fixed `b2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenAiModelSpec {
    pub storage_gb: f64,
    pub output_bits: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub b1: f64,
    pub b2: f64,
}

impl GenAiModelSpec {
    /// The measured reference model (face-inpainting diffusion model) with
    /// the given storage and output size.
    pub fn reference(storage_gb: f64, output_bits: f64) -> Self {
        Self {
            storage_gb,
            output_bits,
            a1: 60.0,
            a2: 110.0,
            a3: 170.0,
            a4: 28.0,
            b1: 0.18,
            b2: 5.74,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("storage_gb", self.storage_gb),
            ("output_bits", self.output_bits),
            ("b1", self.b1),
            ("b2", self.b2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(format!(
                    "model {name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.a1 < self.a3) {
            return Err(ConfigError::invalid(format!(
                "model needs a1 < a3, got a1={} a3={}",
                self.a1, self.a3
            )));
        }
        if !(self.a4 < self.a2) {
            return Err(ConfigError::invalid(format!(
                "model needs a4 < a2, got a4={} a2={}",
                self.a4, self.a2
            )));
        }
        Ok(())
    }

    /// Generation delay on the cloud path, which runs the minimum number of
    /// steps that reaches the best quality.
    pub fn cloud_generation_delay(&self) -> f64 {
        self.b1 * self.a3 + self.b2
    }
}

/// Finite Markov chain over Zipf skewness values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopularityChain {
    pub gammas: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

impl Default for PopularityChain {
    fn default() -> Self {
        Self {
            gammas: vec![0.2, 0.5, 0.7],
            transition: vec![
                vec![0.6, 0.2, 0.2],
                vec![0.1, 0.7, 0.2],
                vec![0.2, 0.3, 0.5],
            ],
        }
    }
}

impl PopularityChain {
    pub fn states(&self) -> usize {
        self.gammas.len()
    }

    pub fn gamma(&self, state: usize) -> f64 {
        self.gammas[state]
    }

    pub fn gamma_min(&self) -> f64 {
        self.gammas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn gamma_max(&self) -> f64 {
        self.gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let k = self.gammas.len();
        if k == 0 {
            return Err(ConfigError::invalid("popularity chain has no states"));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(ConfigError::invalid(format!(
                "popularity skewness must be non-negative, got {g}"
            )));
        }
        if self.transition.len() != k {
            return Err(ConfigError::invalid(format!(
                "transition matrix has {} rows for {k} states",
                self.transition.len()
            )));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != k {
                return Err(ConfigError::invalid(format!(
                    "transition row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(ConfigError::invalid(format!(
                    "transition row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ConfigError::invalid(format!(
                    "transition row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    /// Samples the next popularity state from row `current`.
    pub fn advance<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> usize {
        sample_index(&self.transition[current], rng)
    }
}

/// Radio and backhaul constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub uplink_hz: f64,
    pub downlink_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub bs_power_dbm: f64,
    /// BS to cloud backhaul rate.
    pub backhaul_up_bps: f64,
    /// Cloud to BS backhaul rate.
    pub backhaul_down_bps: f64,
    pub bs_position: (f64, f64),
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            uplink_hz: 20e6,
            downlink_hz: 40e6,
            noise_dbm_per_hz: -176.0,
            bs_power_dbm: 43.0,
            backhaul_up_bps: 100e6,
            backhaul_down_bps: 100e6,
            bs_position: (125.0, 125.0),
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("radio.uplink_hz", self.uplink_hz),
            ("radio.downlink_hz", self.downlink_hz),
            ("radio.backhaul_up_bps", self.backhaul_up_bps),
            ("radio.backhaul_down_bps", self.backhaul_down_bps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One user's situation during a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSnapshot {
    pub position: (f64, f64),
    pub transmit_power_dbm: f64,
    /// Requested model (zero-based).
    pub request: usize,
    pub input_bits: f64,
    /// Linear channel gain (path loss times fading power).
    pub channel_gain: f64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Zipf request probabilities over `m_count` models with skewness `gamma`.
pub fn zipf_distribution(gamma: f64, m_count: usize) -> Result<Vec<f64>, ConfigError> {
    if m_count == 0 {
        return Err(ConfigError::invalid("zipf distribution needs at least one model"));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(ConfigError::invalid(format!(
            "zipf skewness must be non-negative, got {gamma}"
        )));
    }
    let weights: Vec<f64> = (1..=m_count).map(|i| (i as f64).powf(-gamma)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Inverse-CDF draw from a discrete distribution. Falls back to the last
/// index with positive mass when rounding leaves the draw above the total.
pub fn sample_index<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.iter().rposition(|p| *p > 0.0).unwrap_or(dist.len() - 1)
}

/// Alias of [`sample_index`] for request sampling.
pub fn sample_request<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
    sample_index(dist, rng)
}

/// Macro-cell path loss in dB. Distance is given in meters and evaluated in
/// kilometers; distances below `min_distance_m` are clamped.
pub fn path_loss_db(distance_m: f64, min_distance_m: f64) -> f64 {
    let d = if distance_m.is_nan() { min_distance_m } else { distance_m.max(min_distance_m) };
    -128.1 - 37.6 * (d / 1000.0).log10()
}

pub fn channel_gain(path_loss_db: f64, rayleigh_power: f64) -> f64 {
    db_to_linear(path_loss_db) * rayleigh_power
}

/// Squared magnitude of a unit-variance circular complex Gaussian, which is
/// exponential with mean 1.
pub fn sample_rayleigh_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Uplink Shannon rate with bandwidth share `b`.
pub fn uplink_rate(b: f64, radio: &RadioConfig, p_n_dbm: f64, h: f64) -> f64 {
    if b <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let bandwidth = b * radio.uplink_hz;
    let noise = dbm_to_watts(radio.noise_dbm_per_hz) * bandwidth;
    bandwidth * (1.0 + dbm_to_watts(p_n_dbm) * h / noise).log2()
}

/// Downlink Shannon rate; every user gets the full downlink band.
pub fn downlink_rate(radio: &RadioConfig, h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    let noise = dbm_to_watts(radio.noise_dbm_per_hz) * radio.downlink_hz;
    radio.downlink_hz * (1.0 + dbm_to_watts(radio.bs_power_dbm) * h / noise).log2()
}

fn transfer_delay(bits: f64, rate: f64, cached: bool, backhaul_bps: f64, penalty: f64) -> f64 {
    if bits <= 0.0 {
        return 0.0;
    }
    if !(rate > 0.0) {
        return penalty;
    }
    let air = bits / rate;
    if cached {
        air
    } else {
        air + bits / backhaul_bps
    }
}

/// Request upload delay; misses also cross the BS-to-cloud backhaul.
/// A zero rate with data to send yields `penalty`.
pub fn uplink_delay(d_in: f64, rate_up: f64, cached: bool, r_bc: f64, penalty: f64) -> f64 {
    transfer_delay(d_in, rate_up, cached, r_bc, penalty)
}

/// Result download delay; misses also cross the cloud-to-BS backhaul.
pub fn downlink_delay(d_op: f64, rate_dw: f64, cached: bool, r_cb: f64, penalty: f64) -> f64 {
    transfer_delay(d_op, rate_dw, cached, r_cb, penalty)
}

/// Total-variation quality of the generated image.
pub fn generation_quality(x: f64, l_total: f64, spec: &GenAiModelSpec, cached: bool) -> f64 {
    if !cached {
        return spec.a4;
    }
    let steps = x * l_total;
    if steps <= spec.a1 {
        spec.a2
    } else if steps >= spec.a3 {
        spec.a4
    } else {
        spec.a2 + (spec.a4 - spec.a2) / (spec.a3 - spec.a1) * (steps - spec.a1)
    }
}

/// Image generation time.
pub fn generation_delay(x: f64, l_total: f64, spec: &GenAiModelSpec, cached: bool) -> f64 {
    if cached {
        spec.b1 * x * l_total + spec.b2
    } else {
        spec.cloud_generation_delay()
    }
}

/// Weighted sum of total delay and quality; lower is better.
pub fn utility(alpha: f64, total_delay: f64, quality: f64) -> f64 {
    alpha * total_delay + (1.0 - alpha) * quality
}
