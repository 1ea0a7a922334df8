//! Mapping an unconstrained actor output onto a feasible caching and
//! allocation decision.
//!
//! cargo run --release --example projection

use genai_edge::mdp;
use genai_edge::{Scenario, SystemConfig};

fn main() -> genai_edge::Result<()> {
    let scenario = Scenario::new(SystemConfig { users: 4, models: 6, ..SystemConfig::default() }, 7)?;
    for (k, m) in scenario.models.iter().enumerate() {
        println!("model {k}: {:.2} GB", m.storage_gb);
    }

    // six caching scores, four bandwidth scores, four compute scores
    let raw = [0.9, 0.1, 0.8, f64::NAN, 0.7, 1.4, 0.6, 0.6, 0.6, 0.6, 2.0, -1.0, 0.5, 0.25];
    let action = mdp::project_action(&raw, &scenario);
    action.check(&scenario).expect("projection is feasible");

    println!("cache     {:?}", action.cache);
    println!("storage   {:.2} of {} GB", action.storage_used(&scenario), scenario.config.capacity_gb);
    println!("bandwidth {:?}", action.bandwidth);
    println!("compute   {:?}", action.compute);

    let mut env_rng = genai_edge::seeding::rng(7, genai_edge::seeding::Stream::EvalEnv);
    let state = mdp::reset(&scenario, &mut env_rng);
    for (n, r) in mdp::evaluate_slot(&scenario, &state, &action).iter().enumerate() {
        println!(
            "user {n}: model {} hit={} delay {:.2}s quality {:.1} utility {:.2}",
            state.users[n].request, r.hit, r.total_delay, r.quality, r.utility
        );
    }
    Ok(())
}
