//! The slot-level decision process: state assembly, observation encoding,
//! projection of raw actions onto the feasible set, stepping, and the
//! episode metrics.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env_model::{
    self, channel_gain, downlink_delay, downlink_rate, generation_delay, generation_quality,
    path_loss_db, sample_rayleigh_power, uplink_delay, uplink_rate, zipf_distribution,
    UserSnapshot, MEGABYTE_BITS,
};
use crate::error::{Result, SimError};
use crate::scenario::Scenario;

/// Everything observable at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    /// One-based slot index; `slots + 1` marks the state after the last slot.
    pub slot: usize,
    pub popularity: usize,
    pub users: Vec<UserSnapshot>,
    /// Caching decision executed in the previous slot (all false at reset).
    pub cached_previous: Vec<bool>,
}

/// Caching vector plus bandwidth and denoising-step shares.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleAction {
    pub cache: Vec<bool>,
    pub bandwidth: Vec<f64>,
    pub compute: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("action has {found} {what} entries, expected {expected}")]
    Length { what: &'static str, expected: usize, found: usize },
    #[error("{what} share {value} of user {user} lies outside [0, 1]")]
    ShareRange { what: &'static str, user: usize, value: f64 },
    #[error("{what} shares sum to {sum} > 1")]
    ShareSum { what: &'static str, sum: f64 },
    #[error("cached models need {used} GB of {capacity} GB")]
    Storage { used: f64, capacity: f64 },
}

impl FeasibleAction {
    /// Storage used by the cached models, summed in model order.
    pub fn storage_used(&self, scenario: &Scenario) -> f64 {
        cached_storage(&self.cache, scenario)
    }

    /// Checks the binary, range, and capacity constraints.
    pub fn check(&self, scenario: &Scenario) -> std::result::Result<(), Violation> {
        let n = scenario.users();
        let m = scenario.model_count();
        if self.cache.len() != m {
            return Err(Violation::Length { what: "cache", expected: m, found: self.cache.len() });
        }
        for (what, shares) in [("bandwidth", &self.bandwidth), ("compute", &self.compute)] {
            if shares.len() != n {
                return Err(Violation::Length { what, expected: n, found: shares.len() });
            }
            for (user, &value) in shares.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Violation::ShareRange { what, user, value });
                }
            }
            let sum: f64 = shares.iter().sum();
            if sum > 1.0 {
                return Err(Violation::ShareSum { what, sum });
            }
        }
        let used = self.storage_used(scenario);
        if used > scenario.config.capacity_gb {
            return Err(Violation::Storage { used, capacity: scenario.config.capacity_gb });
        }
        Ok(())
    }
}

pub(crate) fn cached_storage(cache: &[bool], scenario: &Scenario) -> f64 {
    cache
        .iter()
        .zip(&scenario.models)
        .filter(|(c, _)| **c)
        .map(|(_, m)| m.storage_gb)
        .sum()
}

/// Per-user accounting of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserRecord {
    pub hit: bool,
    pub uplink_delay: f64,
    pub downlink_delay: f64,
    pub generation_delay: f64,
    /// Sum of the three delays, capped at the scenario penalty delay.
    pub total_delay: f64,
    pub quality: f64,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub records: Vec<UserRecord>,
    pub next_state: EnvState,
    /// True when the stepped slot was the last of the episode.
    pub done: bool,
}

/// What happened in one slot, as kept for metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTrace {
    pub slot: usize,
    pub popularity: usize,
    pub cache: Vec<bool>,
    pub records: Vec<UserRecord>,
    pub reward: f64,
}

fn draw_users<R: Rng + ?Sized>(scenario: &Scenario, popularity: usize, rng: &mut R) -> Vec<UserSnapshot> {
    let cfg = &scenario.config;
    let dist = zipf_distribution(cfg.popularity.gamma(popularity), scenario.model_count())
        .expect("validated scenario");
    let (in_lo, in_hi) = cfg.input_mb;
    (0..cfg.users)
        .map(|_| {
            let position = (
                rng.random::<f64>() * cfg.area_m.0,
                rng.random::<f64>() * cfg.area_m.1,
            );
            let fading = sample_rayleigh_power(rng);
            let request = env_model::sample_request(&dist, rng);
            let input_bits = (in_lo + rng.random::<f64>() * (in_hi - in_lo)) * MEGABYTE_BITS;
            let pl = path_loss_db(
                env_model::distance(position, cfg.radio.bs_position),
                cfg.min_distance_m,
            );
            UserSnapshot {
                position,
                transmit_power_dbm: cfg.user_power_dbm,
                request,
                input_bits,
                channel_gain: channel_gain(pl, fading),
            }
        })
        .collect()
}

/// Initial state of an episode: slot 1, uniform popularity state.
pub fn reset<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> EnvState {
    let popularity = rng.random_range(0..scenario.config.popularity.states());
    let users = draw_users(scenario, popularity, rng);
    EnvState {
        slot: 1,
        popularity,
        users,
        cached_previous: vec![false; scenario.model_count()],
    }
}

/// Encodes a state as a flat vector with entries in `[0, 1]`.
///
/// Layout: normalized skewness, per-user gain, per-user one-hot request,
/// per-user input size, per-user output size.
pub fn observe(state: &EnvState, scenario: &Scenario) -> Vec<f64> {
    let cfg = &scenario.config;
    let m = scenario.model_count();
    let mut out = Vec::with_capacity(scenario.state_dim());

    let (g_lo, g_hi) = (cfg.popularity.gamma_min(), cfg.popularity.gamma_max());
    let gamma = cfg.popularity.gamma(state.popularity);
    out.push(if g_hi > g_lo { (gamma - g_lo) / (g_hi - g_lo) } else { 0.0 });

    let (db_lo, db_hi) = cfg.gain_db_bounds;
    for u in &state.users {
        let db = env_model::linear_to_db(u.channel_gain);
        let v = (db - db_lo) / (db_hi - db_lo);
        out.push(if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
    }
    for u in &state.users {
        out.extend((0..m).map(|k| if k == u.request { 1.0 } else { 0.0 }));
    }
    let in_max = cfg.input_mb.1 * MEGABYTE_BITS;
    for u in &state.users {
        out.push((u.input_bits / in_max).clamp(0.0, 1.0));
    }
    let out_max = scenario.models.iter().map(|s| s.output_bits).fold(0.0, f64::max);
    for u in &state.users {
        out.push((scenario.models[u.request].output_bits / out_max).clamp(0.0, 1.0));
    }
    out
}

fn unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Scales shares down to sum at most one; sums already below one are kept.
pub(crate) fn normalize_shares(raw: &[f64]) -> Vec<f64> {
    let mut shares: Vec<f64> = raw.iter().copied().map(unit).collect();
    let sum: f64 = shares.iter().sum();
    if sum > 1.0 {
        for s in &mut shares {
            *s /= sum;
        }
        // rounding can leave the quotient sum a few ulps above one
        while shares.iter().sum::<f64>() > 1.0 {
            for s in &mut shares {
                *s *= 1.0 - f64::EPSILON;
            }
        }
    }
    shares
}

/// Greedy knapsack fill: models in descending score order (ties by lower
/// index) are cached whenever they still fit.
pub fn greedy_cache(scores: &[f64], scenario: &Scenario) -> Vec<bool> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| unit(scores[b]).total_cmp(&unit(scores[a])).then(a.cmp(&b)));
    let capacity = scenario.config.capacity_gb;
    let mut cache = vec![false; scores.len()];
    for m in order {
        cache[m] = true;
        if cached_storage(&cache, scenario) > capacity {
            cache[m] = false;
        }
    }
    cache
}

/// Maps a raw action (`M` caching scores, `N` bandwidth scores, `N`
/// denoising scores) onto the feasible set. Out-of-range or NaN entries
/// are clamped into `[0, 1]` first.
pub fn project_action(raw: &[f64], scenario: &Scenario) -> FeasibleAction {
    let m = scenario.model_count();
    let n = scenario.users();
    assert_eq!(raw.len(), m + 2 * n, "raw action length");
    FeasibleAction {
        cache: greedy_cache(&raw[..m], scenario),
        bandwidth: normalize_shares(&raw[m..m + n]),
        compute: normalize_shares(&raw[m + n..]),
    }
}

/// Evaluates the delays, quality and utility of every user for one slot.
///
/// This is the single cost path shared by the environment and by every
/// policy that scores candidate actions.
pub fn evaluate_slot(scenario: &Scenario, state: &EnvState, action: &FeasibleAction) -> Vec<UserRecord> {
    let cfg = &scenario.config;
    let radio = &cfg.radio;
    let penalty = scenario.penalty_delay;
    state
        .users
        .iter()
        .enumerate()
        .map(|(n, u)| {
            let spec = &scenario.models[u.request];
            let hit = action.cache[u.request];
            let rate_up = uplink_rate(action.bandwidth[n], radio, u.transmit_power_dbm, u.channel_gain);
            let rate_dw = downlink_rate(radio, u.channel_gain);
            let up = uplink_delay(u.input_bits, rate_up, hit, radio.backhaul_up_bps, penalty);
            let dw = downlink_delay(spec.output_bits, rate_dw, hit, radio.backhaul_down_bps, penalty);
            let gen = generation_delay(action.compute[n], cfg.denoising_steps, spec, hit);
            let quality = generation_quality(action.compute[n], cfg.denoising_steps, spec, hit);
            let total_delay = (up + dw + gen).min(penalty);
            UserRecord {
                hit,
                uplink_delay: up,
                downlink_delay: dw,
                generation_delay: gen,
                total_delay,
                quality,
                utility: env_model::utility(cfg.alpha, total_delay, quality),
            }
        })
        .collect()
}

/// Negated mean utility.
pub fn reward_of(records: &[UserRecord]) -> f64 {
    -records.iter().map(|r| r.utility).sum::<f64>() / records.len() as f64
}

/// Mean utility of a candidate action; lower is better.
pub fn slot_cost(scenario: &Scenario, state: &EnvState, action: &FeasibleAction) -> f64 {
    -reward_of(&evaluate_slot(scenario, state, action))
}

/// Executes `action` in `state` and draws the next slot.
pub fn step<R: Rng + ?Sized>(
    scenario: &Scenario,
    state: &EnvState,
    action: &FeasibleAction,
    rng: &mut R,
) -> Result<StepOutcome> {
    let horizon = scenario.config.slots;
    if state.slot > horizon {
        return Err(SimError::EpisodeFinished { slot: state.slot, horizon });
    }
    let records = evaluate_slot(scenario, state, action);
    let reward = reward_of(&records);
    let popularity = scenario.config.popularity.advance(state.popularity, rng);
    let users = draw_users(scenario, popularity, rng);
    Ok(StepOutcome {
        reward,
        records,
        next_state: EnvState {
            slot: state.slot + 1,
            popularity,
            users,
            cached_previous: action.cache.clone(),
        },
        done: state.slot == horizon,
    })
}

/// Average utility over all users and slots of the traces.
pub fn objective_average(traces: &[SlotTrace]) -> Result<f64> {
    let (sum, count) = traces
        .iter()
        .flat_map(|t| &t.records)
        .fold((0.0, 0usize), |(s, c), r| (s + r.utility, c + 1));
    if count == 0 {
        return Err(SimError::EmptyTrace);
    }
    Ok(sum / count as f64)
}

/// Fraction of user requests served by a cached model. Empty traces give 0.
pub fn hit_ratio(traces: &[SlotTrace]) -> f64 {
    let (hits, count) = traces
        .iter()
        .flat_map(|t| &t.records)
        .fold((0usize, 0usize), |(h, c), r| (h + r.hit as usize, c + 1));
    if count == 0 {
        0.0
    } else {
        hits as f64 / count as f64
    }
}

/// A scenario bound to its own environment generator.
#[derive(Debug, Clone)]
pub struct Environment {
    scenario: Scenario,
    rng: ChaCha8Rng,
    state: EnvState,
}

impl Environment {
    pub fn new(scenario: Scenario, mut rng: ChaCha8Rng) -> Self {
        let state = reset(&scenario, &mut rng);
        Self { scenario, rng, state }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn observe(&self) -> Vec<f64> {
        observe(&self.state, &self.scenario)
    }

    /// Starts a new episode.
    pub fn reset(&mut self) -> &EnvState {
        self.state = reset(&self.scenario, &mut self.rng);
        &self.state
    }

    pub fn step(&mut self, action: &FeasibleAction) -> Result<StepOutcome> {
        let outcome = step(&self.scenario, &self.state, action, &mut self.rng)?;
        self.state = outcome.next_state.clone();
        Ok(outcome)
    }

    /// Steps and returns the slot trace alongside the outcome.
    pub fn step_traced(&mut self, action: &FeasibleAction) -> Result<(StepOutcome, SlotTrace)> {
        let slot = self.state.slot;
        let popularity = self.state.popularity;
        let outcome = self.step(action)?;
        let trace = SlotTrace {
            slot,
            popularity,
            cache: action.cache.clone(),
            records: outcome.records.clone(),
            reward: outcome.reward,
        };
        Ok((outcome, trace))
    }
}
