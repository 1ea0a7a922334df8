//! Trains the learner on a small scenario and compares the noise-free
//! policy with random caching on the same evaluation episodes.
//!
//! cargo run --release --example train_ddpg

use genai_edge::ddpg::{self, DdpgAgent, DdpgHyperparams};
use genai_edge::mdp::{self, Environment};
use genai_edge::policy::{run_episode, Greedy, Policy, Rcars};
use genai_edge::seeding::{self, Stream};
use genai_edge::{Scenario, SystemConfig};

fn evaluate(scenario: &Scenario, seed: u64, policy: &mut dyn Policy) -> genai_edge::Result<(f64, f64)> {
    let mut env = Environment::new(scenario.clone(), seeding::rng(seed, Stream::EvalEnv));
    let mut traces = Vec::new();
    for _ in 0..10 {
        traces.extend(run_episode(&mut env, policy)?);
    }
    Ok((mdp::objective_average(&traces)?, mdp::hit_ratio(&traces)))
}

fn main() -> genai_edge::Result<()> {
    let seed = 1;
    let scenario = Scenario::new(SystemConfig { users: 3, models: 4, slots: 20, ..SystemConfig::default() }, seed)?;
    let hp = DdpgHyperparams { episodes: 80, hidden: vec![64, 64], ..DdpgHyperparams::default() };

    let mut rng = seeding::rng(seed, Stream::Agent);
    let mut agent = DdpgAgent::new(scenario.state_dim(), scenario.action_dim(), hp, &mut rng)?;
    let mut env = Environment::new(scenario.clone(), seeding::rng(seed, Stream::TrainEnv));
    let log = ddpg::train(&mut agent, &mut env, &mut rng, |ep| {
        if ep.episode % 10 == 0 {
            println!(
                "episode {:>3}  sigma {:.3}  reward {:>8.3}  hit {:.2}  critic loss {:.4}",
                ep.episode,
                ep.sigma,
                ep.mean_reward,
                ep.hit_ratio,
                ep.critic_loss.unwrap_or(f64::NAN)
            );
        }
    })?;
    println!("converged reward {:.3}", log.converged_reward());

    let (obj, hit) = evaluate(&scenario, seed, &mut Greedy { actor: agent.actor })?;
    println!("ddpg : objective {obj:.3}  hit ratio {hit:.3}");
    let (obj, hit) = evaluate(&scenario, seed, &mut Rcars { rng: seeding::rng(seed, Stream::Policy) })?;
    println!("rcars: objective {obj:.3}  hit ratio {hit:.3}");
    Ok(())
}
