//! Reward-driven stochastic policy search in networks of stochastic neurons.
//!
//! Synaptic parameters `theta` follow coupled stochastic differential equations
//! whose stationary distribution is the tempered parameter posterior
//! `p*(theta)^(1/T)`. Two dynamics are provided as configurations of one
//! generalized integrator:
//!
//! - Langevin sampling: `dθ = β ∂log p*(θ) dt + sqrt(2Tβ) dW`
//! - Hamiltonian sampling with friction, where a hidden momentum variable `Γ`
//!   low-pass filters the plasticity drive:
//!   `dθ = a Γ dt`, `dΓ = (a ∂log p*(θ) − bΓ) dt + sqrt(2Tb) dW`
//!
//! ## Structure
//!
//! - [`sampler`] — parameter state, integrators and temperature schedules
//! - [`network`] — stochastic spike-response network engine
//! - [`plasticity`] — eligibility traces, priors, clipping and the learner that
//!   couples gradient estimates to a sampler
//! - [`perceptron`] — stochastic perceptron network for digit classification
//! - [`tasks`] — sigmoid emulation, blind reaching, XOR and MNIST experiments
//! - [`oracles`] — independent verification: stationary moments, KS statistics,
//!   tempered expected reward, finite-difference gradients
//! - [`mnist`] — IDX file reader
//! - [`harness`] — experiment configuration, seeded trials, CSV/JSON output and
//!   checkpoints

pub mod error;
pub mod harness;
pub mod mnist;
pub mod network;
pub mod oracles;
pub mod perceptron;
pub mod plasticity;
pub mod rng;
pub mod sampler;
pub mod tasks;

pub use error::{Error, Result};
pub use sampler::{
    generalized_step, hamiltonian_step, langevin_step, temperature_at, Mode, ParameterState, SamplerConfig,
    ScheduleKind, TemperatureSchedule,
};
