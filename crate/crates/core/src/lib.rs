//! Simulation of generative-model caching and resource allocation at a
//! wireless edge base station.
//!
//! Each slot, every user asks for an image from one of `M` generative
//! models. The base station decides which models to keep in its limited
//! storage and how to split uplink bandwidth and denoising steps among the
//! users. Requests for uncached models go to the cloud over a backhaul link.
//! The cost of a slot is a weighted sum of total delay and image quality.
//!
//! Policies:
//! * [`ddpg`]: a deep deterministic policy gradient learner built on the
//!   small MLP toolkit in [`nn`].
//! * [`baselines`]: a per-slot genetic algorithm (HCRAS) and random caching
//!   with an equal split (RCARS).
//!
//! [`harness`] runs paired experiments and writes CSV metrics.

pub mod baselines;
pub mod config;
pub mod ddpg;
pub mod env_model;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod nn;
pub mod plot;
pub mod policy;
pub mod scenario;
pub mod seeding;

pub use error::{ConfigError, NnError, Result, SimError};
pub use scenario::{Scenario, SystemConfig};
