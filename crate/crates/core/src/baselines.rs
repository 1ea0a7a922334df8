//! Comparison policies: a per-slot real-coded genetic algorithm (HCRAS) and
//! random caching with an equal resource split (RCARS).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::mdp::{self, EnvState, FeasibleAction};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// SBX distribution index.
    pub eta_c: f64,
    /// Polynomial mutation distribution index.
    pub eta_m: f64,
    /// Per-gene mutation probability; defaults to one over the gene count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_prob: Option<f64>,
    pub tournament: usize,
    pub elites: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 100,
            eta_c: 15.0,
            eta_m: 20.0,
            mutation_prob: None,
            tournament: 2,
            elites: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population < 2 || self.population % 2 != 0 {
            return Err(ConfigError::invalid("ga.population must be even and at least 2"));
        }
        if self.generations == 0 {
            return Err(ConfigError::invalid("ga.generations must be at least 1"));
        }
        if !(self.eta_c >= 0.0 && self.eta_m >= 0.0) {
            return Err(ConfigError::invalid("ga distribution indices must be non-negative"));
        }
        if let Some(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::invalid("ga.mutation_prob must lie in [0, 1]"));
            }
        }
        if self.tournament == 0 {
            return Err(ConfigError::invalid("ga.tournament must be at least 1"));
        }
        if self.elites >= self.population {
            return Err(ConfigError::invalid("ga.elites must be below the population size"));
        }
        Ok(())
    }

    pub fn mutation_prob_for(&self, genes: usize) -> f64 {
        self.mutation_prob.unwrap_or(1.0 / genes as f64)
    }
}

/// Genes in the raw-action layout with their cached fitness (lower is
/// better).
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<f64>,
    pub fitness: f64,
}

/// SBX spread factor for a uniform draw `u` in `[0, 1)`.
pub fn sbx_spread(u: f64, eta: f64) -> f64 {
    if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    }
}

/// Children of one gene pair for spread `beta`, before clipping.
pub fn sbx_pair(p1: f64, p2: f64, beta: f64) -> (f64, f64) {
    (
        0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2),
        0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2),
    )
}

/// Simulated binary crossover applied gene by gene, children clipped to
/// `[0, 1]`. Equal gene pairs are copied unchanged.
pub fn sbx_crossover<R: Rng + ?Sized>(a: &[f64], b: &[f64], eta_c: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), b.len(), "parents differ in length");
    a.iter()
        .zip(b)
        .map(|(&p1, &p2)| {
            let beta_u: f64 = rng.random();
            if (p1 - p2).abs() < 1e-14 {
                return (p1, p2);
            }
            let beta = sbx_spread(beta_u, eta_c);
            let (c1, c2) = sbx_pair(p1, p2, beta);
            (c1.clamp(0.0, 1.0), c2.clamp(0.0, 1.0))
        })
        .unzip()
}

/// Bounded polynomial mutation of a gene in `[0, 1]` for a uniform draw `u`.
pub fn poly_mutate_gene(y: f64, u: f64, eta: f64) -> f64 {
    let power = 1.0 / (eta + 1.0);
    let delta = if u < 0.5 {
        let xy = 1.0 - y;
        let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
        val.powf(power) - 1.0
    } else {
        let xy = y;
        let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
        1.0 - val.powf(power)
    };
    (y + delta).clamp(0.0, 1.0)
}

/// Mutates each gene independently with probability `prob`.
pub fn poly_mutation<R: Rng + ?Sized>(genes: &mut [f64], eta_m: f64, prob: f64, rng: &mut R) {
    for g in genes.iter_mut() {
        if rng.random::<f64>() < prob {
            *g = poly_mutate_gene(*g, rng.random(), eta_m);
        }
    }
}

fn tournament<'a, R: Rng + ?Sized>(pop: &'a [Chromosome], size: usize, rng: &mut R) -> &'a Chromosome {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.fitness < best.fitness {
            best = c;
        }
    }
    best
}

/// Result of a GA run.
#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Chromosome,
    /// Best-so-far fitness after initialization and after every generation.
    pub history: Vec<f64>,
}

/// Generic elitist GA over `[0, 1]` genes, minimizing `fitness`.
pub fn run_ga<R, F>(initial: Vec<Vec<f64>>, ga: &GaConfig, mut fitness: F, rng: &mut R) -> GaOutcome
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    assert!(!initial.is_empty(), "empty initial population");
    let dim = initial[0].len();
    let mutation = ga.mutation_prob_for(dim);
    let size = initial.len();
    let by_fitness = |a: &Chromosome, b: &Chromosome| a.fitness.total_cmp(&b.fitness);

    let mut pop: Vec<Chromosome> = initial
        .into_iter()
        .map(|genes| {
            let fitness = fitness(&genes);
            Chromosome { genes, fitness }
        })
        .collect();
    pop.sort_by(by_fitness);
    let mut best = pop[0].clone();
    let mut history = vec![best.fitness];

    for _ in 0..ga.generations {
        let mut next: Vec<Chromosome> = pop.iter().take(ga.elites.min(size)).cloned().collect();
        while next.len() < size {
            let a = tournament(&pop, ga.tournament, rng);
            let b = tournament(&pop, ga.tournament, rng);
            let (mut c1, mut c2) = sbx_crossover(&a.genes, &b.genes, ga.eta_c, rng);
            poly_mutation(&mut c1, ga.eta_m, mutation, rng);
            poly_mutation(&mut c2, ga.eta_m, mutation, rng);
            for genes in [c1, c2] {
                if next.len() < size {
                    let fitness = fitness(&genes);
                    next.push(Chromosome { genes, fitness });
                }
            }
        }
        next.sort_by(by_fitness);
        pop = next;
        if pop[0].fitness < best.fitness {
            best = pop[0].clone();
        }
        history.push(best.fitness);
    }
    GaOutcome { best, history }
}

/// GA fitness: mean per-user utility of the projected chromosome.
pub fn hcras_fitness(scenario: &Scenario, state: &EnvState, genes: &[f64]) -> f64 {
    mdp::slot_cost(scenario, state, &mdp::project_action(genes, scenario))
}

/// Full GA search for one slot.
pub fn hcras_search<R: Rng + ?Sized>(state: &EnvState, scenario: &Scenario, ga: &GaConfig, rng: &mut R) -> GaOutcome {
    let dim = scenario.action_dim();
    let initial = (0..ga.population)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    run_ga(initial, ga, |g| hcras_fitness(scenario, state, g), rng)
}

/// Best feasible action the GA finds for this slot.
pub fn hcras_solve<R: Rng + ?Sized>(state: &EnvState, scenario: &Scenario, ga: &GaConfig, rng: &mut R) -> FeasibleAction {
    let outcome = hcras_search(state, scenario, ga, rng);
    mdp::project_action(&outcome.best.genes, scenario)
}

/// Random caching until nothing else fits; bandwidth and compute split
/// evenly.
pub fn rcars_action<R: Rng + ?Sized>(_state: &EnvState, scenario: &Scenario, rng: &mut R) -> FeasibleAction {
    let m = scenario.model_count();
    let n = scenario.users();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut cache = vec![false; m];
    for k in order {
        cache[k] = true;
        if mdp::cached_storage(&cache, scenario) > scenario.config.capacity_gb {
            cache[k] = false;
        }
    }
    let equal = mdp::normalize_shares(&vec![1.0 / n as f64; n]);
    FeasibleAction { cache, bandwidth: equal.clone(), compute: equal }
}
