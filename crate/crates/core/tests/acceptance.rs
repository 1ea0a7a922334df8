//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! `ACCEPTANCE_CRITERIA=1,2,9` restricts the run to the listed criteria.

mod common;

use std::time::{Duration, Instant};

use common::{rel_err, slot_reward};
use genai_edge::config::{ExperimentConfig, PolicyKind};
use genai_edge::ddpg::{self, DdpgAgent, DdpgHyperparams};
use genai_edge::env_model::{self, GenAiModelSpec, PopularityChain, RadioConfig};
use genai_edge::harness::{self, PolicySummary};
use genai_edge::mdp::{self, Environment, FeasibleAction};
use genai_edge::nn::{Activation, Mlp};
use genai_edge::policy::{run_episode, Greedy, Rcars};
use genai_edge::scenario::CatalogConfig;
use genai_edge::seeding::{self, Stream};
use genai_edge::{Scenario, SystemConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- 1

const CLOSED_FORM_TOL: f64 = 1e-9;
const CLOSED_FORM_DRAWS: usize = 10_000;

fn closed_form() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let radio = RadioConfig::default();
    let mut worst: Vec<(&str, f64)> = Vec::new();
    let mut track = |name: &'static str, a: f64, b: f64| match worst.iter_mut().find(|w| w.0 == name) {
        Some(w) => w.1 = w.1.max(rel_err(a, b)),
        None => worst.push((name, rel_err(a, b))),
    };

    for _ in 0..CLOSED_FORM_DRAWS {
        let gamma = rng.random_range(0.0..3.0);
        let m = rng.random_range(1..30);
        let lib = env_model::zipf_distribution(gamma, m).unwrap();
        for (a, b) in lib.iter().zip(common::zipf(gamma, m)) {
            track("zipf", *a, b);
        }

        let d = rng.random_range(0.0..400.0);
        let pl = env_model::path_loss_db(d, 1.0);
        track("path loss", pl, common::path_loss(d));
        let fading: f64 = rng.random_range(0.001..5.0);
        let h = env_model::channel_gain(pl, fading);
        track("channel gain", h, common::gain(pl, fading));

        let b = rng.random_range(0.0..1.0);
        let p = rng.random_range(0.0..30.0);
        let up = env_model::uplink_rate(b, &radio, p, h);
        track("uplink rate", up, common::uplink_rate(b, radio.uplink_hz, p, h, radio.noise_dbm_per_hz));
        let dw = env_model::downlink_rate(&radio, h);
        track("downlink rate", dw, common::downlink_rate(radio.downlink_hz, radio.bs_power_dbm, h, radio.noise_dbm_per_hz));

        let hit = rng.random_bool(0.5);
        let bits = rng.random_range(5.0..10.0) * 8e6;
        track(
            "uplink delay",
            env_model::uplink_delay(bits, up, hit, radio.backhaul_up_bps, 1e4),
            common::link_delay(bits, up, hit, radio.backhaul_up_bps, 1e4),
        );
        track(
            "downlink delay",
            env_model::downlink_delay(bits, dw, hit, radio.backhaul_down_bps, 1e4),
            common::link_delay(bits, dw, hit, radio.backhaul_down_bps, 1e4),
        );

        let spec = common::random_spec(&mut rng);
        let x = rng.random_range(0.0..1.0);
        track("quality", env_model::generation_quality(x, 1000.0, &spec, hit), common::quality(x, 1000.0, &spec, hit));
        track(
            "generation delay",
            env_model::generation_delay(x, 1000.0, &spec, hit),
            common::gen_delay(x, 1000.0, &spec, hit),
        );
        let alpha = rng.random_range(0.0..1.0);
        let (dd, q) = (rng.random_range(0.0..500.0), rng.random_range(0.0..150.0));
        track("utility", env_model::utility(alpha, dd, q), common::utility(alpha, dd, q));
    }

    let mut slot_rng = ChaCha8Rng::seed_from_u64(102);
    for i in 0..CLOSED_FORM_DRAWS {
        let users = 1 + i % 12;
        let cfg = SystemConfig { users, models: 1 + (i / 12) % 10, ..SystemConfig::default() };
        let s = Scenario::new(cfg, i as u64).unwrap();
        let st = mdp::reset(&s, &mut slot_rng);
        let raw: Vec<f64> = (0..s.action_dim()).map(|_| slot_rng.random()).collect();
        let a = mdp::project_action(&raw, &s);
        let out = mdp::step(&s, &st, &a, &mut slot_rng).unwrap();
        track("slot reward", out.reward, slot_reward(&s, &st, &a));
    }

    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let detail = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ");
    verdict(max <= CLOSED_FORM_TOL, format!("max rel err {max:.2e} (tol {CLOSED_FORM_TOL:e}); {detail}"))
}

// ---------------------------------------------------------------- 2

const RAW_ACTIONS: usize = 100_000;
const MAX_ENUM_MODELS: usize = 12;

fn raw_entry(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..20) {
        0 => f64::NAN,
        1 => f64::INFINITY,
        2 => f64::NEG_INFINITY,
        3 => 0.0,
        4 => 1.0,
        _ => rng.random_range(-0.5..1.5),
    }
}

fn satisfies_constraints(s: &Scenario, a: &FeasibleAction) -> bool {
    let in_box = |v: &[f64]| v.iter().all(|x| (0.0..=1.0).contains(x));
    let storage: f64 = a.cache.iter().zip(&s.models).filter(|(c, _)| **c).map(|(_, m)| m.storage_gb).sum();
    a.cache.len() == s.model_count()
        && a.bandwidth.len() == s.users()
        && a.compute.len() == s.users()
        && in_box(&a.bandwidth)
        && in_box(&a.compute)
        && a.bandwidth.iter().sum::<f64>() <= 1.0
        && a.compute.iter().sum::<f64>() <= 1.0
        && storage <= s.config.capacity_gb
}

fn constraint_soundness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    let mut bad = 0usize;
    let scenarios: Vec<Scenario> = (0..50)
        .map(|i| {
            let cfg = SystemConfig { users: 1 + i % 18, models: 1 + i % 12, ..SystemConfig::default() };
            Scenario::new(cfg, i as u64).unwrap()
        })
        .collect();
    for i in 0..RAW_ACTIONS {
        let s = &scenarios[i % scenarios.len()];
        let raw: Vec<f64> = (0..s.action_dim()).map(|_| raw_entry(&mut rng)).collect();
        let a = mdp::project_action(&raw, s);
        if !satisfies_constraints(s, &a) || a.check(s).is_err() {
            bad += 1;
        }
    }

    let mut enum_bad = 0usize;
    let mut instances = 0usize;
    for m in 1..=MAX_ENUM_MODELS {
        for trial in 0..20 {
            let cfg = SystemConfig {
                users: 1,
                models: m,
                capacity_gb: rng.random_range(1.0..40.0),
                ..SystemConfig::default()
            };
            let s = Scenario::new(cfg, (m * 100 + trial) as u64).unwrap();
            let scores: Vec<f64> = (0..m).map(|_| raw_entry(&mut rng)).collect();
            let greedy = mdp::greedy_cache(&scores, &s);
            let mask_of = |c: &[bool]| c.iter().enumerate().filter(|(_, b)| **b).fold(0u32, |acc, (k, _)| acc | 1 << k);
            let g = mask_of(&greedy);
            let fits = |mask: u32| {
                let used: f64 = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| s.models[k].storage_gb).sum();
                used <= s.config.capacity_gb
            };
            let feasible: Vec<u32> = (0..1u32 << m).filter(|&mask| fits(mask)).collect();
            let is_feasible = feasible.contains(&g);
            // no feasible subset strictly contains the greedy set
            let maximal = feasible.iter().all(|&f| f & g != g || f == g);
            // the single best-scored model is cached whenever it fits alone
            let unit = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            let top = (0..m).max_by(|&a, &b| unit(scores[a]).total_cmp(&unit(scores[b])).then(b.cmp(&a))).unwrap();
            let top_ok = !fits(1 << top) || greedy[top];
            if !(is_feasible && maximal && top_ok) {
                enum_bad += 1;
            }
            instances += 1;
        }
    }
    verdict(
        bad == 0 && enum_bad == 0,
        format!("{bad}/{RAW_ACTIONS} infeasible projections; {enum_bad}/{instances} greedy sets fail enumeration (M <= {MAX_ENUM_MODELS})"),
    )
}

// ---------------------------------------------------------------- 3

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const FD_NETWORKS: usize = 20;

fn grad_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Worst relative error between backward-pass and central-difference
/// gradients of `sum(out * w)` over every parameter and input.
fn check_network(net: &Mlp, x: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let loss = |n: &Mlp, x: &Array2<f64>| (n.predict(x.view()).unwrap() * w).sum();
    let (_, cache) = net.forward(x.view()).unwrap();
    let (grads, input_grad) = net.backward(&cache, w).unwrap();
    let mut worst = 0.0f64;
    for li in 0..net.layers.len() {
        let (rows, cols) = net.layers[li].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let mut p = net.clone();
                p.layers[li].weights[[r, c]] += FD_STEP;
                let mut q = net.clone();
                q.layers[li].weights[[r, c]] -= FD_STEP;
                let num = (loss(&p, x) - loss(&q, x)) / (2.0 * FD_STEP);
                worst = worst.max(grad_err(grads.layers[li].weights[[r, c]], num));
            }
            let mut p = net.clone();
            p.layers[li].bias[r] += FD_STEP;
            let mut q = net.clone();
            q.layers[li].bias[r] -= FD_STEP;
            let num = (loss(&p, x) - loss(&q, x)) / (2.0 * FD_STEP);
            worst = worst.max(grad_err(grads.layers[li].bias[r], num));
        }
    }
    for idx in ndarray::indices(x.dim()) {
        let (mut xp, mut xq) = (x.clone(), x.clone());
        xp[idx] += FD_STEP;
        xq[idx] -= FD_STEP;
        let num = (loss(net, &xp) - loss(net, &xq)) / (2.0 * FD_STEP);
        worst = worst.max(grad_err(input_grad[idx], num));
    }
    worst
}

fn random_net(rng: &mut ChaCha8Rng, input: usize, output: usize, last: Activation) -> Mlp {
    let depth = rng.random_range(1..=2);
    let mut sizes = vec![input];
    sizes.extend((0..depth).map(|_| rng.random_range(3..=8)));
    sizes.push(output);
    let mut acts = vec![Activation::Relu; depth];
    acts.push(last);
    let mut net = Mlp::init(&sizes, &acts, rng).unwrap();
    for l in &mut net.layers {
        l.bias.mapv_inplace(|_| rng.random_range(-0.1..0.1));
    }
    net
}

fn gradient_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let mut worst = 0.0f64;
    for _ in 0..FD_NETWORKS {
        let (ds, da) = (rng.random_range(2..=5), rng.random_range(1..=4));
        let batch = rng.random_range(1..=4);
        let actor = random_net(&mut rng, ds, da, Activation::Sigmoid);
        let critic = random_net(&mut rng, ds + da, 1, Activation::Identity);
        let xs = Array2::from_shape_fn((batch, ds), |_| rng.random_range(-1.0..1.0));
        let xsa = Array2::from_shape_fn((batch, ds + da), |_| rng.random_range(-1.0..1.0));
        worst = worst.max(check_network(&actor, &xs, &Array2::from_shape_fn((batch, da), |_| rng.random_range(-1.0..1.0))));
        worst = worst.max(check_network(&critic, &xsa, &Array2::from_shape_fn((batch, 1), |_| rng.random_range(-1.0..1.0))));

        // policy gradient chained through the critic's action input
        let (grads, _) = ddpg::actor_gradient(&actor, &critic, &xs).unwrap();
        let objective = |a: &Mlp| -ddpg::actor_gradient(a, &critic, &xs).unwrap().1;
        for li in 0..actor.layers.len() {
            for (idx, g) in grads.layers[li].weights.indexed_iter() {
                let mut p = actor.clone();
                p.layers[li].weights[idx] += FD_STEP;
                let mut q = actor.clone();
                q.layers[li].weights[idx] -= FD_STEP;
                let num = (objective(&p) - objective(&q)) / (2.0 * FD_STEP);
                worst = worst.max(grad_err(*g, num));
            }
        }
    }
    verdict(worst <= FD_TOL, format!("max rel err {worst:.2e} over {FD_NETWORKS} actor/critic pairs (h {FD_STEP:e}, tol {FD_TOL:e})"))
}

// ---------------------------------------------------------------- 4

const TOY_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const TOY_EPISODES: usize = 150;
const TOY_EVAL_EPISODES: usize = 20;
const TOY_CACHE_SHARE: f64 = 0.9;
const TOY_MARGIN: f64 = 0.10;

/// Two users, two models of which only one fits. Model 0 is far more
/// popular and has the larger output, and a slow backhaul makes misses
/// expensive.
fn toy_scenario() -> SystemConfig {
    SystemConfig {
        radio: RadioConfig { backhaul_up_bps: 10e6, backhaul_down_bps: 10e6, ..RadioConfig::default() },
        users: 2,
        models: 2,
        slots: 20,
        capacity_gb: 10.0,
        catalog: CatalogConfig {
            fixed: Some(vec![
                GenAiModelSpec::reference(8.0, 10.0 * 8e6),
                GenAiModelSpec::reference(8.0, 2.0 * 8e6),
            ]),
            ..CatalogConfig::default()
        },
        popularity: PopularityChain { gammas: vec![2.0, 2.5, 3.0], ..PopularityChain::default() },
        ..SystemConfig::default()
    }
}

/// Best slot cost per state with only `model` cached, searching an equal
/// bandwidth split and a compute grid.
fn best_costs_caching(s: &Scenario, model: usize, states: &[mdp::EnvState]) -> Vec<f64> {
    let mut cache = vec![false; s.model_count()];
    cache[model] = true;
    states
        .iter()
        .map(|st| {
            (0..=100)
                .flat_map(|i| (0..=100 - i).map(move |j| (i as f64 / 100.0, j as f64 / 100.0)))
                .map(|(x0, x1)| {
                    let a = FeasibleAction { cache: cache.clone(), bandwidth: vec![0.5, 0.5], compute: vec![x0, x1] };
                    mdp::slot_cost(s, st, &a)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn learning_sanity() -> Verdict {
    let s = Scenario::new(toy_scenario(), 0).unwrap();
    let mut srng = ChaCha8Rng::seed_from_u64(401);
    let states: Vec<_> = (0..200).map(|_| mdp::reset(&s, &mut srng)).collect();
    let (b0, b1) = (best_costs_caching(&s, 0, &states), best_costs_caching(&s, 1, &states));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (c0, c1) = (mean(&b0), mean(&b1));
    let best_share = b0.iter().zip(&b1).filter(|(a, b)| a <= b).count() as f64 / states.len() as f64;

    let hp = DdpgHyperparams { episodes: TOY_EPISODES, ..DdpgHyperparams::default() };
    let (mut cached0, mut slots) = (0usize, 0usize);
    let (mut ddpg_obj, mut rcars_obj) = (0.0, 0.0);
    for &seed in &TOY_SEEDS {
        let mut arng = seeding::rng(seed, Stream::Agent);
        let mut agent = DdpgAgent::new(s.state_dim(), s.action_dim(), hp.clone(), &mut arng).unwrap();
        let mut env = Environment::new(s.clone(), seeding::rng(seed, Stream::TrainEnv));
        ddpg::train(&mut agent, &mut env, &mut arng, |_| {}).unwrap();

        let mut greedy = Greedy { actor: agent.actor };
        let mut eval = Environment::new(s.clone(), seeding::rng(seed, Stream::EvalEnv));
        let mut traces = Vec::new();
        for _ in 0..TOY_EVAL_EPISODES {
            traces.extend(run_episode(&mut eval, &mut greedy).unwrap());
        }
        cached0 += traces.iter().filter(|t| t.cache[0]).count();
        slots += traces.len();
        ddpg_obj += mdp::objective_average(&traces).unwrap();

        let mut rcars = Rcars { rng: seeding::rng(seed, Stream::Policy) };
        let mut eval = Environment::new(s.clone(), seeding::rng(seed, Stream::EvalEnv));
        let mut traces = Vec::new();
        for _ in 0..TOY_EVAL_EPISODES {
            traces.extend(run_episode(&mut eval, &mut rcars).unwrap());
        }
        rcars_obj += mdp::objective_average(&traces).unwrap();
    }
    let n = TOY_SEEDS.len() as f64;
    let (ddpg_obj, rcars_obj) = (ddpg_obj / n, rcars_obj / n);
    let share = cached0 as f64 / slots as f64;
    let gain = 1.0 - ddpg_obj / rcars_obj;
    verdict(
        c0 < c1 && share >= TOY_CACHE_SHARE && gain >= TOY_MARGIN,
        format!(
            "dominant model cached in {:.1}% of slots (need >= {:.0}%); objective ddpg {ddpg_obj:.3} vs rcars {rcars_obj:.3}, {:.1}% lower (need >= {:.0}%); enumeration: caching dominant {c0:.3} vs other {c1:.3}, dominant optimal in {:.1}% of states",
            100.0 * share,
            100.0 * TOY_CACHE_SHARE,
            100.0 * gain,
            100.0 * TOY_MARGIN,
            100.0 * best_share
        ),
    )
}

// ---------------------------------------------------------------- 5, 6

const SWEEP_USERS: [usize; 3] = [10, 14, 18];
const SWEEP_SEEDS: [u64; 3] = [1, 2, 3];
const SWEEP_EPISODES: usize = 300;
const SWEEP_EVAL_EPISODES: usize = 20;
const HIT_MARGIN: f64 = 0.15;

fn sweep_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.agent.episodes = SWEEP_EPISODES;
    cfg.sweep.eval_episodes = SWEEP_EVAL_EPISODES;
    cfg
}

fn mean_of(summary: &[PolicySummary], policy: &str, users: usize) -> f64 {
    summary.iter().find(|s| s.policy == policy && s.users == users).map(|s| s.mean).unwrap_or(f64::NAN)
}

fn figure_sweep() -> (Verdict, Verdict) {
    let cfg = sweep_config();
    let report = harness::sweep_users(&cfg, &SWEEP_USERS, &SWEEP_SEEDS);
    if !report.is_ok() {
        let msg = format!("{} runs aborted: {:?}", report.failures.len(), report.failures);
        return (verdict(false, msg.clone()), verdict(false, msg));
    }
    let hits = harness::hit_ratio_summary(&report.rows);
    let objs = harness::objective_summary(&report.rows);

    let ddpg_hits: Vec<f64> = SWEEP_USERS.iter().map(|&n| mean_of(&hits, "ddpg", n)).collect();
    let rcars_hits: Vec<f64> = SWEEP_USERS.iter().map(|&n| mean_of(&hits, "rcars", n)).collect();
    let monotone = ddpg_hits.windows(2).all(|w| w[1] >= w[0]);
    let margins: Vec<f64> = ddpg_hits.iter().zip(&rcars_hits).map(|(d, r)| d / r - 1.0).collect();
    let above = margins.iter().all(|m| *m >= HIT_MARGIN);
    let fig4 = verdict(
        monotone && above,
        format!(
            "ddpg hit ratio {} (non-decreasing: {monotone}); rcars {}; relative margin {} (need >= {:.0}% at every N)",
            fmt_list(&ddpg_hits),
            fmt_list(&rcars_hits),
            fmt_pct(&margins),
            100.0 * HIT_MARGIN
        ),
    );

    let mut parts = Vec::new();
    let mut increasing = true;
    for p in PolicyKind::ALL {
        let v: Vec<f64> = SWEEP_USERS.iter().map(|&n| mean_of(&objs, p.name(), n)).collect();
        let inc = v.windows(2).all(|w| w[1] > w[0]);
        increasing &= inc;
        parts.push(format!("{} {} (increasing: {inc})", p.name(), fmt_list(&v)));
    }
    let mut beats = true;
    for n in [10, 18] {
        let d = mean_of(&objs, "ddpg", n);
        let ok = d < mean_of(&objs, "hcras", n) && d < mean_of(&objs, "rcars", n);
        beats &= ok;
        parts.push(format!("ddpg lowest at N={n}: {ok}"));
    }
    let fig5 = verdict(increasing && beats, format!("objective over N={SWEEP_USERS:?}: {}", parts.join("; ")));
    (fig4, fig5)
}

fn fmt_list(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", "))
}

fn fmt_pct(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{:+.1}%", 100.0 * x)).collect::<Vec<_>>().join(", "))
}

// ---------------------------------------------------------------- 7

const BASELINE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const BASELINE_EVAL_EPISODES: usize = 10;

fn baseline_ordering() -> Verdict {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.policies = vec![PolicyKind::Hcras, PolicyKind::Rcars];
    cfg.sweep.eval_episodes = BASELINE_EVAL_EPISODES;
    let report = harness::sweep_users(&cfg, &SWEEP_USERS, &BASELINE_SEEDS);
    if !report.is_ok() {
        return verdict(false, format!("{} runs aborted", report.failures.len()));
    }
    let objs = harness::objective_summary(&report.rows);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in SWEEP_USERS {
        let (h, r) = (mean_of(&objs, "hcras", n), mean_of(&objs, "rcars", n));
        ok &= h <= r;
        parts.push(format!("N={n}: hcras {h:.3} vs rcars {r:.3}"));
    }
    verdict(ok, format!("{} ({} seeds)", parts.join("; "), BASELINE_SEEDS.len()))
}

// ---------------------------------------------------------------- 8

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.scenario.users = 3;
    cfg.scenario.slots = 10;
    cfg.agent.episodes = 5;
    cfg.agent.hidden = vec![32, 32];
    cfg.agent.batch_size = 16;
    cfg.ga.generations = 5;
    cfg.sweep.eval_episodes = 2;
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, cfg.to_toml()).unwrap();

    let commands: [&[&str]; 4] = [
        &["simulate", "--policy", "ddpg", "--seed", "7"],
        &["simulate", "--policy", "hcras", "--seed", "7"],
        &["sweep-users", "--counts", "2,3", "--seeds", "1,2"],
        &["sweep-lr", "--lrs", "0.001,0.01", "--seeds", "1"],
    ];
    let mut identical = 0;
    for (i, args) in commands.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|run| {
                let out = dir.path().join(format!("c{i}r{run}"));
                let status = std::process::Command::new(env!("CARGO_BIN_EXE_genai-edge"))
                    .args(*args)
                    .arg("--config")
                    .arg(&cfg_path)
                    .arg("--out")
                    .arg(&out)
                    .stdout(std::process::Stdio::null())
                    .stderr(std::process::Stdio::null())
                    .status()
                    .unwrap();
                assert!(status.success(), "{args:?}");
                std::fs::read(out.join("metrics.csv")).unwrap()
            })
            .collect();
        if outputs[0] == outputs[1] && !outputs[0].is_empty() {
            identical += 1;
        }
    }
    verdict(identical == commands.len(), format!("{identical}/{} commands gave byte-identical metrics.csv on rerun", commands.len()))
}

// ---------------------------------------------------------------- 9

const DRAWS: usize = 1_000_000;
const FADING_MEAN_TOL: f64 = 0.01;
const ROW_FREQ_TOL: f64 = 0.0015;
const CHI_SQUARE_P_FLOOR: f64 = 1e-4;

fn statistical_models() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let mut pvals = Vec::new();
    for gamma in [0.2, 0.5, 0.7] {
        let dist = env_model::zipf_distribution(gamma, 10).unwrap();
        let mut counts = vec![0u64; 10];
        for _ in 0..DRAWS {
            counts[env_model::sample_request(&dist, &mut rng)] += 1;
        }
        pvals.push(common::chi_square(&counts, &common::zipf(gamma, 10)).1);
    }
    let zipf_ok = pvals.iter().all(|p| *p > CHI_SQUARE_P_FLOOR);

    let fading_mean = (0..DRAWS).map(|_| env_model::sample_rayleigh_power(&mut rng)).sum::<f64>() / DRAWS as f64;
    let fading_ok = (fading_mean - 1.0).abs() <= FADING_MEAN_TOL;

    let chain = PopularityChain::default();
    let expected = [[0.6, 0.2, 0.2], [0.1, 0.7, 0.2], [0.2, 0.3, 0.5]];
    let mut worst_row = 0.0f64;
    for (from, row) in expected.iter().enumerate() {
        let mut counts = [0u64; 3];
        for _ in 0..DRAWS {
            counts[chain.advance(from, &mut rng)] += 1;
        }
        for k in 0..3 {
            worst_row = worst_row.max((counts[k] as f64 / DRAWS as f64 - row[k]).abs());
        }
    }
    let rows_ok = worst_row <= ROW_FREQ_TOL;
    verdict(
        zipf_ok && fading_ok && rows_ok,
        format!(
            "zipf chi-square p {} (floor {CHI_SQUARE_P_FLOOR:e}); fading mean {fading_mean:.5} (1 +/- {FADING_MEAN_TOL}); worst transition-row deviation {worst_row:.5} (tol {ROW_FREQ_TOL})",
            pvals.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join("/")
        ),
    )
}

// ----------------------------------------------------------------

fn main() {
    let selected: Option<Vec<u32>> = std::env::var("ACCEPTANCE_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |c: u32| selected.as_ref().is_none_or(|s| s.contains(&c));

    let mut failed = 0;
    let mut report = |id: u32, name: &str, budget: Duration, elapsed: Duration, v: Verdict| {
        let in_time = elapsed <= budget;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {} [{:.1}s, budget {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    };
    let timed = |f: &dyn Fn() -> Verdict| {
        let t = Instant::now();
        let v = f();
        (t.elapsed(), v)
    };
    let mins = |m: u64| Duration::from_secs(60 * m);

    if wanted(1) {
        let (t, v) = timed(&closed_form);
        report(1, "closed-form fidelity", Duration::from_secs(10), t, v);
    }
    if wanted(2) {
        let (t, v) = timed(&constraint_soundness);
        report(2, "constraint soundness", Duration::from_secs(30), t, v);
    }
    if wanted(3) {
        let (t, v) = timed(&gradient_correctness);
        report(3, "gradient correctness", Duration::from_secs(10), t, v);
    }
    if wanted(4) {
        let (t, v) = timed(&learning_sanity);
        report(4, "learning sanity", mins(5), t, v);
    }
    if wanted(5) || wanted(6) {
        let start = Instant::now();
        let (fig4, fig5) = figure_sweep();
        let t = start.elapsed();
        if wanted(5) {
            report(5, "hit ratio vs users", mins(45), t, fig4);
        }
        if wanted(6) {
            report(6, "objective vs users", mins(45), t, fig5);
        }
    }
    if wanted(7) {
        let (t, v) = timed(&baseline_ordering);
        report(7, "baseline ordering", mins(10), t, v);
    }
    if wanted(8) {
        let (t, v) = timed(&determinism);
        report(8, "determinism", mins(5), t, v);
    }
    if wanted(9) {
        let (t, v) = timed(&statistical_models);
        report(9, "statistical models", Duration::from_secs(30), t, v);
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
