//! Deep deterministic policy gradient: actor and critic with target copies,
//! a uniform replay buffer, Gaussian exploration, and the training loop
//! over the edge environment.

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::mdp::{self, Environment, SlotTrace};
use crate::nn::{adam_step, soft_update, Activation, AdamState, Mlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgHyperparams {
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Reward discount.
    pub discount: f64,
    /// Soft target update rate.
    pub target_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub sigma_start: f64,
    pub sigma_end: f64,
    /// Episodes over which the noise scale decays; defaults to 60% of the
    /// training episodes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_decay_episodes: Option<usize>,
    pub episodes: usize,
    /// Hidden layer widths shared by actor and critic.
    pub hidden: Vec<usize>,
    /// Multiplier applied to rewards before they enter the critic targets.
    pub reward_scale: f64,
}

impl Default for DdpgHyperparams {
    fn default() -> Self {
        Self {
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            discount: 0.99,
            target_rate: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            sigma_start: 0.3,
            sigma_end: 0.05,
            sigma_decay_episodes: None,
            episodes: 500,
            hidden: vec![256, 256],
            reward_scale: 0.1,
        }
    }
}

impl DdpgHyperparams {
    pub fn validate(&self) -> std::result::Result<(), crate::error::ConfigError> {
        use crate::error::ConfigError;
        if !(0.0..1.0).contains(&self.discount) {
            return Err(ConfigError::invalid("agent.discount must lie in [0, 1)"));
        }
        if !(self.target_rate > 0.0 && self.target_rate <= 1.0) {
            return Err(ConfigError::invalid("agent.target_rate must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::invalid("agent.batch_size must be at least 1"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(ConfigError::invalid("agent.buffer_capacity must be at least the batch size"));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(ConfigError::invalid("agent learning rates must be positive"));
        }
        if !(self.sigma_start >= 0.0 && self.sigma_end >= 0.0) {
            return Err(ConfigError::invalid("agent noise scales must be non-negative"));
        }
        if self.episodes == 0 {
            return Err(ConfigError::invalid("agent.episodes must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(ConfigError::invalid("agent.hidden widths must be positive"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(ConfigError::invalid("agent.reward_scale must be positive"));
        }
        Ok(())
    }

    pub fn decay_episodes(&self) -> usize {
        self.sigma_decay_episodes
            .unwrap_or_else(|| (0.6 * self.episodes as f64).round() as usize)
    }

    /// Exploration scale for a zero-based episode index.
    pub fn sigma_at(&self, episode: usize) -> f64 {
        let decay = self.decay_episodes();
        if decay == 0 {
            return self.sigma_end;
        }
        let frac = (episode as f64 / decay as f64).min(1.0);
        self.sigma_start + (self.sigma_end - self.sigma_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    /// Raw (pre-projection) action.
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    storage: Vec<Transition>,
    capacity: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { storage: Vec::with_capacity(capacity.min(1 << 16)), capacity, inserted: 0 }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            let slot = (self.inserted % self.capacity as u64) as usize;
            self.storage[slot] = t;
        }
        self.inserted += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }

    /// Uniform draw with replacement; `None` until `size` tuples are stored.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if size == 0 || self.storage.len() < size {
            return None;
        }
        Some(
            (0..size)
                .map(|_| &self.storage[rng.random_range(0..self.storage.len())])
                .collect(),
        )
    }
}

/// A mini-batch laid out as matrices.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub terminal: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(items: &[&Transition]) -> Self {
        let e = items.len();
        let ds = items[0].state.len();
        let da = items[0].action.len();
        let mut states = Array2::zeros((e, ds));
        let mut actions = Array2::zeros((e, da));
        let mut next_states = Array2::zeros((e, ds));
        for (i, t) in items.iter().enumerate() {
            states.row_mut(i).assign(&ndarray::aview1(&t.state));
            actions.row_mut(i).assign(&ndarray::aview1(&t.action));
            next_states.row_mut(i).assign(&ndarray::aview1(&t.next_state));
        }
        Self {
            states,
            actions,
            rewards: items.iter().map(|t| t.reward).collect(),
            next_states,
            terminal: items.iter().map(|t| t.terminal).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

fn join(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[states.view(), actions.view()]).expect("batch rows agree")
}

/// Actor output plus clipped Gaussian noise of scale `sigma`.
pub fn act<R: Rng + ?Sized>(actor: &Mlp, state: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>, NnError> {
    let mut a = actor.predict_one(state)?;
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("finite sigma");
        for v in &mut a {
            *v = (*v + noise.sample(rng)).clamp(0.0, 1.0);
        }
    }
    Ok(a)
}

/// Critic regression targets: scaled reward plus the discounted target
/// value of the next state, with no bootstrap on terminal tuples.
pub fn critic_targets(
    target_critic: &Mlp,
    target_actor: &Mlp,
    batch: &Batch,
    discount: f64,
    reward_scale: f64,
) -> Result<Array1<f64>, NnError> {
    let next_actions = target_actor.predict(batch.next_states.view())?;
    let q_next = target_critic.predict(join(&batch.next_states, &next_actions).view())?;
    Ok(Array1::from_iter((0..batch.len()).map(|e| {
        let boot = if batch.terminal[e] { 0.0 } else { discount * q_next[[e, 0]] };
        reward_scale * batch.rewards[e] + boot
    })))
}

/// One Adam step on the mean squared temporal-difference error. Returns the
/// loss measured before the step.
pub fn critic_update(
    critic: &mut Mlp,
    target_critic: &Mlp,
    target_actor: &Mlp,
    batch: &Batch,
    discount: f64,
    reward_scale: f64,
    lr: f64,
    opt: &mut AdamState,
) -> Result<f64, NnError> {
    let targets = critic_targets(target_critic, target_actor, batch, discount, reward_scale)?;
    let (q, cache) = critic.forward(join(&batch.states, &batch.actions).view())?;
    let e = batch.len() as f64;
    let diff = &q.column(0) - &targets;
    let loss = diff.iter().map(|d| 0.5 * d * d).sum::<f64>() / e;
    if !loss.is_finite() {
        opt.skipped += 1;
        return Err(NnError::NonFinite("critic loss"));
    }
    let upstream = (diff / e).insert_axis(Axis(1));
    let (grads, _) = critic.backward(&cache, &upstream)?;
    adam_step(critic, &grads, opt, lr)?;
    Ok(loss)
}

/// One Adam step ascending the critic's value of the actor's actions, with
/// the critic held fixed. Returns the mean value before the step.
pub fn actor_update(
    actor: &mut Mlp,
    critic: &Mlp,
    states: &Array2<f64>,
    lr: f64,
    opt: &mut AdamState,
) -> Result<f64, NnError> {
    let (grads, objective) = actor_gradient(actor, critic, states)?;
    if !objective.is_finite() {
        opt.skipped += 1;
        return Err(NnError::NonFinite("actor objective"));
    }
    adam_step(actor, &grads, opt, lr)?;
    Ok(objective)
}

/// Gradient of the negated mean critic value with respect to the actor
/// parameters, and the mean value itself.
pub fn actor_gradient(
    actor: &Mlp,
    critic: &Mlp,
    states: &Array2<f64>,
) -> Result<(crate::nn::Gradients, f64), NnError> {
    let e = states.nrows() as f64;
    let ds = states.ncols();
    let (actions, actor_cache) = actor.forward(states.view())?;
    let (q, critic_cache) = critic.forward(join(states, &actions).view())?;
    let objective = q.sum() / e;
    let upstream = Array2::from_elem(q.raw_dim(), -1.0 / e);
    let input_grad = critic.input_gradient(&critic_cache, &upstream)?;
    let action_grad = input_grad.slice(s![.., ds..]).to_owned();
    let (grads, _) = actor.backward(&actor_cache, &action_grad)?;
    Ok((grads, objective))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

/// Networks, optimizers and replay memory of one learner.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub buffer: ReplayBuffer,
    pub hp: DdpgHyperparams,
    /// Updates skipped because of non-finite values.
    pub skipped_updates: u64,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        hp: DdpgHyperparams,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let depth = hp.hidden.len();
        let mut actor_sizes = vec![state_dim];
        actor_sizes.extend(&hp.hidden);
        actor_sizes.push(action_dim);
        let mut actor_act = vec![Activation::Relu; depth];
        actor_act.push(Activation::Sigmoid);

        let mut critic_sizes = vec![state_dim + action_dim];
        critic_sizes.extend(&hp.hidden);
        critic_sizes.push(1);
        let mut critic_act = vec![Activation::Relu; depth];
        critic_act.push(Activation::Identity);

        let actor = Mlp::init(&actor_sizes, &actor_act, rng)?;
        let critic = Mlp::init(&critic_sizes, &critic_act, rng)?;
        Ok(Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor_opt: AdamState::new(&actor),
            critic_opt: AdamState::new(&critic),
            actor,
            critic,
            buffer: ReplayBuffer::new(hp.buffer_capacity),
            hp,
            skipped_updates: 0,
        })
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>, NnError> {
        act(&self.actor, state, sigma, rng)
    }

    /// Critic step, actor step and soft target updates on one sampled
    /// batch. `None` while the buffer holds fewer than a batch of tuples or
    /// when an update had to be skipped.
    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<UpdateStats> {
        let batch = Batch::from_transitions(&self.buffer.sample(self.hp.batch_size, rng)?);
        let critic_loss = critic_update(
            &mut self.critic,
            &self.target_critic,
            &self.target_actor,
            &batch,
            self.hp.discount,
            self.hp.reward_scale,
            self.hp.critic_lr,
            &mut self.critic_opt,
        );
        let actor_objective =
            actor_update(&mut self.actor, &self.critic, &batch.states, self.hp.actor_lr, &mut self.actor_opt);
        soft_update(&mut self.target_critic, &self.critic, self.hp.target_rate).expect("congruent targets");
        soft_update(&mut self.target_actor, &self.actor, self.hp.target_rate).expect("congruent targets");
        match (critic_loss, actor_objective) {
            (Ok(critic_loss), Ok(actor_objective)) => Some(UpdateStats { critic_loss, actor_objective }),
            _ => {
                self.skipped_updates += 1;
                None
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    /// One-based.
    pub episode: usize,
    pub sigma: f64,
    pub mean_reward: f64,
    pub objective: f64,
    pub hit_ratio: f64,
    pub critic_loss: Option<f64>,
    pub actor_objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    /// Mean reward over the final tenth of the episodes (at least one).
    pub fn converged_reward(&self) -> f64 {
        let n = self.episodes.len();
        let tail = (n / 10).max(1).min(n);
        self.episodes[n - tail..].iter().map(|e| e.mean_reward).sum::<f64>() / tail as f64
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Runs one episode with exploration scale `sigma`, learning after every
/// slot once the buffer is ready.
pub fn train_episode<R: Rng + ?Sized>(
    agent: &mut DdpgAgent,
    env: &mut Environment,
    sigma: f64,
    rng: &mut R,
) -> Result<(Vec<SlotTrace>, Vec<UpdateStats>)> {
    env.reset();
    let mut obs = env.observe();
    let mut traces = Vec::with_capacity(env.scenario().config.slots);
    let mut stats = Vec::new();
    loop {
        let raw = agent.act(&obs, sigma, rng)?;
        let action = mdp::project_action(&raw, env.scenario());
        let (outcome, trace) = env.step_traced(&action)?;
        let next_obs = mdp::observe(&outcome.next_state, env.scenario());
        agent.buffer.push(Transition {
            state: obs,
            action: raw,
            reward: outcome.reward,
            next_state: next_obs.clone(),
            // the horizon is a time limit, not a terminal state
            terminal: false,
        });
        traces.push(trace);
        if let Some(s) = agent.update(rng) {
            stats.push(s);
        }
        obs = next_obs;
        if outcome.done {
            break;
        }
    }
    Ok((traces, stats))
}

/// Full training run. `on_episode` sees each episode's log as it completes.
pub fn train<R: Rng + ?Sized>(
    agent: &mut DdpgAgent,
    env: &mut Environment,
    rng: &mut R,
    mut on_episode: impl FnMut(&EpisodeLog),
) -> Result<TrainingLog> {
    let mut log = TrainingLog::default();
    for ep in 0..agent.hp.episodes {
        let sigma = agent.hp.sigma_at(ep);
        let (traces, stats) = train_episode(agent, env, sigma, rng)?;
        let losses: Vec<f64> = stats.iter().map(|s| s.critic_loss).collect();
        let objectives: Vec<f64> = stats.iter().map(|s| s.actor_objective).collect();
        let entry = EpisodeLog {
            episode: ep + 1,
            sigma,
            mean_reward: traces.iter().map(|t| t.reward).sum::<f64>() / traces.len() as f64,
            objective: mdp::objective_average(&traces)?,
            hit_ratio: mdp::hit_ratio(&traces),
            critic_loss: mean(&losses),
            actor_objective: mean(&objectives),
        };
        on_episode(&entry);
        log.episodes.push(entry);
    }
    Ok(log)
}
