//! Reward-modulated gradient estimation and its coupling to the samplers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::SpikingNetwork;
use crate::sampler::{Mode, ParameterState, Sampler, SamplerConfig, TemperatureSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EligibilityConfig {
    /// Trace time constant, the reward discount constant (s).
    pub tau_e: f64,
    /// Scale the trace increment by the current efficacy `w`.
    pub multiplicative: bool,
}

impl EligibilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_e > 0.0 && self.tau_e.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("tau_e must be > 0, got {}", self.tau_e)))
        }
    }
}

/// `e' = e (1 − dt/τ_e) + s y (z − f)` with `s = w` for the multiplicative trace.
pub fn eligibility_step(
    e: f64,
    w: f64,
    y_pre: f64,
    z_post: bool,
    f_post: f64,
    cfg: &EligibilityConfig,
    dt: f64,
) -> f64 {
    let z = if z_post { 1.0 } else { 0.0 };
    let scale = if cfg.multiplicative { w } else { 1.0 };
    e * (1.0 - dt / cfg.tau_e) + scale * y_pre * (z - f_post)
}

#[inline]
pub fn reward_gradient(e: f64, r: f64) -> f64 {
    r * e
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PriorConfig {
    Gaussian { mu: f64, sigma: f64 },
    Uninformative,
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorConfig::Gaussian { mu, sigma } if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) => Err(
                Error::InvalidParams(format!("gaussian prior needs sigma > 0, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }
}

/// `∂/∂θ log p_S(θ)`: `−(θ − μ)/σ²`, or 0 for the uninformative prior.
#[inline]
pub fn prior_gradient(theta: f64, cfg: &PriorConfig) -> f64 {
    match *cfg {
        PriorConfig::Gaussian { mu, sigma } => -(theta - mu) / (sigma * sigma),
        PriorConfig::Uninformative => 0.0,
    }
}

/// Drift fed to the sampler: reward part plus prior part.
#[inline]
pub fn posterior_gradient(reward_part: f64, theta: f64, prior: &PriorConfig) -> f64 {
    reward_part + prior_gradient(theta, prior)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipConfig {
    pub max_step: f64,
    pub theta_bounds: (f64, f64),
}

impl ClipConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.theta_bounds;
        if !(lo <= hi) || !(self.max_step >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "clip needs lo <= hi and max_step >= 0, got [{lo}, {hi}] and {}",
                self.max_step
            )));
        }
        Ok(())
    }
}

/// `θ' = clamp(θ + clamp(Δ, ±max_step), bounds)`.
#[inline]
pub fn clip_and_apply(theta: f64, delta: f64, cfg: &ClipConfig) -> f64 {
    let (lo, hi) = cfg.theta_bounds;
    (theta + delta.clamp(-cfg.max_step, cfg.max_step)).clamp(lo, hi)
}

/// Couples the plastic synapses of a [`SpikingNetwork`] to a sampler.
///
/// After each network tick, [`SynapticLearner::after_tick`] advances the
/// eligibility traces and accumulates `r e`. Every `update_every` ticks the
/// averaged reward gradient plus the prior gradient drives one sampler step
/// of length `update_every * tick`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynapticLearner {
    pub state: ParameterState,
    pub sampler: Sampler,
    pub eligibility: EligibilityConfig,
    pub prior: PriorConfig,
    pub clip: Option<ClipConfig>,
    pub schedule: TemperatureSchedule,
    pub update_every: u32,
    /// Simulated learning time (s).
    pub time: f64,
    ticks: u64,
    acc: Vec<f64>,
    #[serde(skip)]
    grad: Vec<f64>,
    #[serde(skip)]
    before: Vec<f64>,
}

/// Parameters of a [`SynapticLearner`] besides its noise stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub sampler: SamplerConfig,
    pub eligibility: EligibilityConfig,
    pub prior: PriorConfig,
    pub clip: Option<ClipConfig>,
    pub schedule: TemperatureSchedule,
    pub update_every: u32,
}

impl SynapticLearner {
    pub fn new(net: &SpikingNetwork, cfg: LearnerConfig, rng: crate::rng::Rng) -> Result<Self> {
        cfg.eligibility.validate()?;
        cfg.prior.validate()?;
        cfg.schedule.validate()?;
        if let Some(c) = &cfg.clip {
            c.validate()?;
        }
        if cfg.update_every == 0 {
            return Err(Error::InvalidParams("update_every must be >= 1".into()));
        }
        let expected = net.dt() * cfg.update_every as f64;
        if (cfg.sampler.dt - expected).abs() > 1e-9 * expected {
            return Err(Error::InvalidSampler(format!(
                "sampler dt {} must equal update_every * tick = {expected}",
                cfg.sampler.dt
            )));
        }
        let n = net.n_plastic();
        Ok(Self {
            state: ParameterState::new(net.plastic_thetas()),
            sampler: Sampler::new(cfg.sampler, rng)?,
            eligibility: cfg.eligibility,
            prior: cfg.prior,
            clip: cfg.clip,
            schedule: cfg.schedule,
            update_every: cfg.update_every,
            time: 0.0,
            ticks: 0,
            acc: vec![0.0; n],
            grad: Vec::new(),
            before: Vec::new(),
        })
    }

    pub fn temperature(&self) -> f64 {
        self.schedule.at(self.time)
    }

    /// Switches the dynamics; `Γ` restarts from zero.
    pub fn set_mode(&mut self, mode: Mode) -> Result<()> {
        self.sampler.set_mode(mode)?;
        self.state.reset_momentum();
        Ok(())
    }

    /// Processes the tick the network has just completed under reward `r`.
    pub fn after_tick(&mut self, net: &mut SpikingNetwork, reward: f64) -> Result<()> {
        net.update_eligibility(self.eligibility.tau_e, self.eligibility.multiplicative);
        if reward != 0.0 {
            net.accumulate_reward_gradient(reward, &mut self.acc);
        }
        self.ticks += 1;
        if self.ticks.is_multiple_of(self.update_every as u64) {
            self.update(net)?;
        }
        Ok(())
    }

    fn update(&mut self, net: &mut SpikingNetwork) -> Result<()> {
        let n = self.state.len();
        let inv = 1.0 / self.update_every as f64;
        self.grad.resize(n, 0.0);
        for ((g, a), th) in self.grad.iter_mut().zip(&mut self.acc).zip(self.state.theta()) {
            *g = posterior_gradient(*a * inv, *th, &self.prior);
            *a = 0.0;
        }
        let temperature = self.schedule.at(self.time);
        if self.clip.is_some() {
            self.before.clear();
            self.before.extend_from_slice(self.state.theta());
        }
        self.sampler.step(&mut self.state, &self.grad, temperature)?;
        if let Some(clip) = &self.clip {
            for (th, old) in self.state.theta_mut().iter_mut().zip(&self.before) {
                *th = clip_and_apply(*old, *th - *old, clip);
            }
        }
        self.time += self.sampler.config().dt;
        if let Some((what, i)) = self.state.first_non_finite() {
            return Err(Error::NonFinite {
                what: format!("{what}[{i}]"),
                step: self.ticks,
            });
        }
        net.set_plastic_thetas(self.state.theta())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tau_e: f64, multiplicative: bool) -> EligibilityConfig {
        EligibilityConfig { tau_e, multiplicative }
    }

    #[test]
    fn eligibility_examples() {
        assert_eq!(
            eligibility_step(0.0, 1.0, 0.0, false, 0.3, &cfg(0.2, false), 0.001),
            0.0
        );
        let e = eligibility_step(1.0, 1.0, 0.0, false, 0.0, &cfg(0.2, false), 0.001);
        assert!((e - 0.995).abs() < 1e-15);
        let inc = eligibility_step(0.0, 2.0, 1.0, true, 0.5, &cfg(0.2, true), 0.001);
        assert_eq!(inc, 1.0);
    }

    #[test]
    fn eligibility_decay_tracks_exponential() {
        let c = cfg(0.2, false);
        let mut e = 1.0;
        for step in 1..=600 {
            e = eligibility_step(e, 1.0, 0.0, false, 0.0, &c, 0.001);
            let exact = (-(step as f64) * 0.001 / 0.2).exp();
            assert!((e - exact).abs() <= 0.01 * exact);
        }
    }

    #[test]
    fn prior_and_reward_examples() {
        assert_eq!(reward_gradient(0.7, 0.0), 0.0);
        assert_eq!(reward_gradient(0.3, 1.0), 0.3);
        let g = PriorConfig::Gaussian { mu: 0.0, sigma: 2.0 };
        assert_eq!(prior_gradient(0.0, &g), 0.0);
        assert_eq!(prior_gradient(4.0, &g), -1.0);
        assert_eq!(prior_gradient(12.0, &PriorConfig::Uninformative), 0.0);
        assert_eq!(posterior_gradient(0.5, 4.0, &g), -0.5);
        assert!(PriorConfig::Gaussian { mu: 0.0, sigma: 0.0 }.validate().is_err());
    }

    #[test]
    fn clip_examples() {
        let c = ClipConfig {
            max_step: 40.0,
            theta_bounds: (-2.0, 5.0),
        };
        assert_eq!(clip_and_apply(0.0, 100.0, &c), 5.0);
        assert_eq!(clip_and_apply(0.0, 0.0, &c), 0.0);
        assert_eq!(clip_and_apply(-2.0, -1.0, &c), -2.0);
        let tight = ClipConfig {
            max_step: 0.5,
            theta_bounds: (-10.0, 10.0),
        };
        assert_eq!(clip_and_apply(1.0, -3.0, &tight), 0.5);
    }
}
