//! The genetic-algorithm baseline on a single slot: convergence of the
//! best fitness, and the decision it settles on compared with random
//! caching.
//!
//! cargo run --release --example baselines

use genai_edge::baselines::{hcras_search, rcars_action, GaConfig};
use genai_edge::mdp;
use genai_edge::seeding::{self, Stream};
use genai_edge::{Scenario, SystemConfig};

fn main() -> genai_edge::Result<()> {
    let scenario = Scenario::new(SystemConfig::default(), 5)?;
    let state = mdp::reset(&scenario, &mut seeding::rng(5, Stream::EvalEnv));
    let mut rng = seeding::rng(5, Stream::Policy);

    let outcome = hcras_search(&state, &scenario, &GaConfig::default(), &mut rng);
    for (g, f) in outcome.history.iter().enumerate().step_by(20) {
        println!("generation {g:>3}: best mean utility {f:.3}");
    }
    let ga = mdp::project_action(&outcome.best.genes, &scenario);
    let random = rcars_action(&state, &scenario, &mut rng);

    let requests: Vec<usize> = state.users.iter().map(|u| u.request).collect();
    println!("requests {requests:?}");
    for (name, action) in [("hcras", &ga), ("rcars", &random)] {
        let cached: Vec<usize> = (0..scenario.model_count()).filter(|&k| action.cache[k]).collect();
        println!(
            "{name}: cached {cached:?}, mean utility {:.3}, compute {:?}",
            mdp::slot_cost(&scenario, &state, action),
            action.compute.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }
    Ok(())
}
