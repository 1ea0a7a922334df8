//! The common state-to-action interface and episode runners.

use rand_chacha::ChaCha8Rng;

use crate::baselines::{hcras_solve, rcars_action, GaConfig};
use crate::error::Result;
use crate::mdp::{self, EnvState, Environment, FeasibleAction, SlotTrace};
use crate::nn::Mlp;
use crate::scenario::Scenario;

pub trait Policy {
    fn name(&self) -> &'static str;

    fn decide(&mut self, scenario: &Scenario, state: &EnvState) -> Result<FeasibleAction>;
}

/// Random caching, equal split.
pub struct Rcars {
    pub rng: ChaCha8Rng,
}

impl Policy for Rcars {
    fn name(&self) -> &'static str {
        "rcars"
    }

    fn decide(&mut self, scenario: &Scenario, state: &EnvState) -> Result<FeasibleAction> {
        Ok(rcars_action(state, scenario, &mut self.rng))
    }
}

/// Per-slot genetic algorithm with full knowledge of the slot.
pub struct Hcras {
    pub ga: GaConfig,
    pub rng: ChaCha8Rng,
}

impl Policy for Hcras {
    fn name(&self) -> &'static str {
        "hcras"
    }

    fn decide(&mut self, scenario: &Scenario, state: &EnvState) -> Result<FeasibleAction> {
        Ok(hcras_solve(state, scenario, &self.ga, &mut self.rng))
    }
}

/// Trained actor without exploration noise.
pub struct Greedy {
    pub actor: Mlp,
}

impl Policy for Greedy {
    fn name(&self) -> &'static str {
        "ddpg"
    }

    fn decide(&mut self, scenario: &Scenario, state: &EnvState) -> Result<FeasibleAction> {
        let obs = mdp::observe(state, scenario);
        let raw = self.actor.predict_one(&obs)?;
        Ok(mdp::project_action(&raw, scenario))
    }
}

/// Runs one full episode from a fresh reset.
pub fn run_episode(env: &mut Environment, policy: &mut dyn Policy) -> Result<Vec<SlotTrace>> {
    env.reset();
    let mut traces = Vec::with_capacity(env.scenario().config.slots);
    loop {
        let action = policy.decide(env.scenario(), env.state())?;
        let (outcome, trace) = env.step_traced(&action)?;
        traces.push(trace);
        if outcome.done {
            return Ok(traces);
        }
    }
}
