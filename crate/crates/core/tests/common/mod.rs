//! Independent scalar oracles. Each is written from the model definitions
//! with plain arithmetic and shares no code with the library.

#![allow(dead_code)]

use genai_edge::env_model::GenAiModelSpec;
use genai_edge::mdp::{EnvState, FeasibleAction};
use genai_edge::Scenario;

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

pub fn dbm_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn zipf(gamma: f64, m: usize) -> Vec<f64> {
    let mut z = 0.0;
    for j in 1..=m {
        z += 1.0 / (j as f64).powf(gamma);
    }
    (1..=m).map(|i| 1.0 / ((i as f64).powf(gamma) * z)).collect()
}

pub fn path_loss(d_m: f64) -> f64 {
    let d_km = if d_m < 1.0 { 0.001 } else { d_m / 1000.0 };
    -(128.1 + 37.6 * d_km.log10())
}

pub fn gain(pl_db: f64, fading: f64) -> f64 {
    fading * 10f64.powf(pl_db / 10.0)
}

pub fn shannon(bw_hz: f64, p_w: f64, h: f64, n0_w_per_hz: f64) -> f64 {
    if bw_hz <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    bw_hz * (1.0 + p_w * h / (n0_w_per_hz * bw_hz)).ln() / std::f64::consts::LN_2
}

pub fn uplink_rate(b: f64, w_up: f64, p_dbm: f64, h: f64, n0_dbm: f64) -> f64 {
    shannon(b * w_up, dbm_watts(p_dbm), h, dbm_watts(n0_dbm))
}

pub fn downlink_rate(w_dw: f64, p_dbm: f64, h: f64, n0_dbm: f64) -> f64 {
    shannon(w_dw, dbm_watts(p_dbm), h, dbm_watts(n0_dbm))
}

pub fn link_delay(bits: f64, rate: f64, hit: bool, backhaul: f64, penalty: f64) -> f64 {
    if bits == 0.0 {
        0.0
    } else if rate == 0.0 {
        penalty
    } else {
        bits / rate + if hit { 0.0 } else { bits / backhaul }
    }
}

pub fn quality(x: f64, l: f64, s: &GenAiModelSpec, hit: bool) -> f64 {
    if !hit {
        return s.a4;
    }
    let t = ((x * l - s.a1) / (s.a3 - s.a1)).clamp(0.0, 1.0);
    s.a2 - t * (s.a2 - s.a4)
}

pub fn gen_delay(x: f64, l: f64, s: &GenAiModelSpec, hit: bool) -> f64 {
    if hit {
        s.b2 + s.b1 * (x * l)
    } else {
        s.b2 + s.b1 * s.a3
    }
}

pub fn utility(alpha: f64, d: f64, q: f64) -> f64 {
    alpha * d + q - alpha * q
}

/// Per-user utilities of a slot, recomputed from the state and action.
pub fn slot_utilities(sc: &Scenario, st: &EnvState, a: &FeasibleAction) -> Vec<f64> {
    let cfg = &sc.config;
    let r = &cfg.radio;
    st.users
        .iter()
        .enumerate()
        .map(|(n, u)| {
            let s = &sc.models[u.request];
            let hit = a.cache[u.request];
            let up = link_delay(
                u.input_bits,
                uplink_rate(a.bandwidth[n], r.uplink_hz, u.transmit_power_dbm, u.channel_gain, r.noise_dbm_per_hz),
                hit,
                r.backhaul_up_bps,
                sc.penalty_delay,
            );
            let dw = link_delay(
                s.output_bits,
                downlink_rate(r.downlink_hz, r.bs_power_dbm, u.channel_gain, r.noise_dbm_per_hz),
                hit,
                r.backhaul_down_bps,
                sc.penalty_delay,
            );
            let total = (up + dw + gen_delay(a.compute[n], cfg.denoising_steps, s, hit)).min(sc.penalty_delay);
            utility(cfg.alpha, total, quality(a.compute[n], cfg.denoising_steps, s, hit))
        })
        .collect()
}

pub fn slot_reward(sc: &Scenario, st: &EnvState, a: &FeasibleAction) -> f64 {
    let u = slot_utilities(sc, st, a);
    -u.iter().sum::<f64>() / u.len() as f64
}

/// Stationary distribution of a row-stochastic matrix by power iteration.
pub fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let k = p.len();
    let mut pi = vec![1.0 / k as f64; k];
    for _ in 0..10_000 {
        let next: Vec<f64> = (0..k).map(|j| (0..k).map(|i| pi[i] * p[i][j]).sum()).collect();
        pi = next;
    }
    pi
}

/// Pearson chi-square statistic and the upper-tail p-value.
pub fn chi_square(observed: &[u64], expected_prob: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_prob)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let df = (observed.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    (stat, p)
}

/// Random catalog entry satisfying the ordering constraints.
pub fn random_spec<R: rand::Rng>(rng: &mut R) -> GenAiModelSpec {
    GenAiModelSpec {
        storage_gb: rng.random_range(2.0..10.0),
        output_bits: rng.random_range(5.0..10.0) * 8e6,
        a1: rng.random_range(50.0..100.0),
        a2: rng.random_range(100.0..150.0),
        a3: rng.random_range(150.0..200.0),
        a4: rng.random_range(0.01..50.0),
        b1: rng.random_range(0.01..0.5),
        b2: rng.random_range(0.01..10.0),
    }
}
