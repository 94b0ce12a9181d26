//! A single spiking neuron learns to reproduce a sigmoidal rate neuron.
//!
//! Four pools of Poisson inputs fire at `max_rate * x_p`. After a 300 ms
//! presentation the spike count is compared with the target
//! `σ(w·x + b)` and the reward `1 − |f1 − f2|` is delivered for 10 ms,
//! followed by a silent delay.

use serde::{Deserialize, Serialize};

use super::{poisson_inputs, Experiment, MetricsRow, RewardTrace, RunParams, WindowMean};
use crate::error::{Error, Result};
use crate::network::{sigmoid, NetworkBuilder, NeuronSpec, SpikingNetwork, Synapse, WeightMapping};
use crate::plasticity::{EligibilityConfig, LearnerConfig, PriorConfig, SynapticLearner};
use crate::rng::{standard_normal, stream_rng, uniform, Rng, Stream};
use crate::sampler::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SigmoidTaskConfig {
    pub target_weights: [f64; 4],
    pub target_bias: f64,
    pub n_patterns: usize,
    pub n_candidates: usize,
    pub pool_size: usize,
    pub max_rate: f64,
    pub present: f64,
    pub reward_window: f64,
    pub delay: f64,
    pub tau_e: f64,
    /// Constant bias potential of the output neuron.
    pub bias: f64,
    pub refractory: f64,
    pub theta_init_std: f64,
    pub prior: PriorConfig,
    pub presentations: u64,
    pub update_every: u32,
    pub dt: f64,
}

impl Default for SigmoidTaskConfig {
    fn default() -> Self {
        Self {
            target_weights: [4.0, 3.0, -3.0, -6.0],
            target_bias: 1.0,
            n_patterns: 20,
            n_candidates: 2000,
            pool_size: 20,
            max_rate: 60.0,
            present: 0.3,
            reward_window: 0.01,
            delay: 0.4,
            tau_e: 0.2,
            bias: 0.0,
            refractory: 0.005,
            theta_init_std: 0.5,
            prior: PriorConfig::Uninformative,
            presentations: 5000,
            update_every: 1,
            dt: 0.001,
        }
    }
}

impl SigmoidTaskConfig {
    fn ticks(&self, seconds: f64) -> u64 {
        (seconds / self.dt).round() as u64
    }

    pub fn trial_ticks(&self) -> u64 {
        self.ticks(self.present) + self.ticks(self.reward_window) + self.ticks(self.delay)
    }

    /// Largest possible spike count in one presentation.
    pub fn max_count(&self) -> f64 {
        (self.present / self.refractory).round()
    }

    pub fn target_rate(&self, x: &[f64; 4]) -> f64 {
        let s: f64 = self.target_weights.iter().zip(x).map(|(w, x)| w * x).sum();
        sigmoid(s + self.target_bias)
    }
}

/// `r = 1 − |f1 − f2|` clamped to `[0, 1]`.
pub fn sigmoid_reward(target: f64, count: u32, max_count: f64) -> f64 {
    let f2 = (count as f64 / max_count).min(1.0);
    (1.0 - (target - f2).abs()).clamp(0.0, 1.0)
}

/// Picks `n` of `candidates` uniform patterns so that their weighted sums
/// cover the observed range evenly.
pub fn select_patterns(cfg: &SigmoidTaskConfig, rng: &mut Rng) -> Vec<[f64; 4]> {
    let cands: Vec<[f64; 4]> = (0..cfg.n_candidates)
        .map(|_| [uniform(rng), uniform(rng), uniform(rng), uniform(rng)])
        .collect();
    let sum =
        |x: &[f64; 4]| -> f64 { cfg.target_weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + cfg.target_bias };
    let sums: Vec<f64> = cands.iter().map(sum).collect();
    let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut used = vec![false; cands.len()];
    let n = cfg.n_patterns.min(cands.len());
    (0..n)
        .map(|k| {
            let target = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
            let best = (0..cands.len())
                .filter(|&i| !used[i])
                .min_by(|&a, &b| (sums[a] - target).abs().total_cmp(&(sums[b] - target).abs()))
                .expect("enough candidates");
            used[best] = true;
            cands[best]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmoidExperiment {
    pub cfg: SigmoidTaskConfig,
    pub params: RunParams,
    pub patterns: Vec<[f64; 4]>,
    pub net: SpikingNetwork,
    pub learner: SynapticLearner,
    net_rng: Rng,
    task_rng: Rng,
    tick: u64,
    trial_tick: u64,
    pattern: usize,
    count: u32,
    reward: RewardTrace,
    /// Reward of every completed presentation.
    pub presentation_rewards: Vec<f64>,
    window_reward: WindowMean,
    rows: Vec<MetricsRow>,
    #[serde(skip)]
    inputs: Vec<bool>,
    #[serde(skip)]
    rates: Vec<f64>,
}

impl SigmoidExperiment {
    pub fn new(cfg: SigmoidTaskConfig, params: RunParams) -> Result<Self> {
        if cfg.presentations == 0 || cfg.pool_size == 0 {
            return Err(Error::InvalidConfig(
                "sigmoid task needs presentations and inputs".into(),
            ));
        }
        let mut init = stream_rng(params.seed, Stream::Init);
        let patterns = select_patterns(&cfg, &mut init);
        let n_in = 4 * cfg.pool_size;
        let mut b = NetworkBuilder::new(cfg.dt);
        for _ in 0..n_in {
            b.neuron(NeuronSpec::input());
        }
        let out = b.neuron(NeuronSpec::excitatory(cfg.bias, cfg.refractory));
        for i in 0..n_in {
            let theta = cfg.theta_init_std * standard_normal(&mut init);
            b.synapse(Synapse::plastic(i, out, theta, WeightMapping::Identity));
        }
        let net = b.build()?;
        let learner = SynapticLearner::new(
            &net,
            LearnerConfig {
                sampler: params.sampler,
                eligibility: EligibilityConfig {
                    tau_e: cfg.tau_e,
                    multiplicative: false,
                },
                prior: cfg.prior,
                clip: None,
                schedule: params.schedule,
                update_every: cfg.update_every,
            },
            stream_rng(params.seed, Stream::Sampler),
        )?;
        Ok(Self {
            cfg,
            params,
            patterns,
            net,
            learner,
            net_rng: stream_rng(params.seed, Stream::Network),
            task_rng: stream_rng(params.seed, Stream::Task),
            tick: 0,
            trial_tick: 0,
            pattern: 0,
            count: 0,
            reward: RewardTrace::default(),
            presentation_rewards: Vec::new(),
            window_reward: WindowMean::default(),
            rows: Vec::new(),
            inputs: Vec::new(),
            rates: Vec::new(),
        })
    }

    fn output(&self) -> usize {
        4 * self.cfg.pool_size
    }

    fn start_trial(&mut self) {
        self.pattern = (uniform(&mut self.task_rng) * self.patterns.len() as f64) as usize;
        self.pattern = self.pattern.min(self.patterns.len() - 1);
        self.count = 0;
        self.net.reset_eligibility();
        let x = self.patterns[self.pattern];
        let pool = self.cfg.pool_size;
        self.rates.clear();
        self.rates
            .extend((0..4 * pool).map(|i| self.cfg.max_rate * x[i / pool]));
    }

    fn step(&mut self) -> Result<()> {
        let present = self.cfg.ticks(self.cfg.present);
        let n_in = 4 * self.cfg.pool_size;
        self.inputs.resize(n_in, false);
        if self.trial_tick == 0 {
            self.start_trial();
        }
        if self.trial_tick < present {
            poisson_inputs(&self.rates, self.cfg.dt, &mut self.task_rng, &mut self.inputs);
        } else {
            self.inputs.iter_mut().for_each(|z| *z = false);
        }
        let out = self.output();
        let spiked = self.net.step(&self.inputs, &mut self.net_rng)?[out];
        if spiked && self.trial_tick < present {
            self.count += 1;
        }
        if self.trial_tick + 1 == present {
            let target = self.cfg.target_rate(&self.patterns[self.pattern]);
            let r = sigmoid_reward(target, self.count, self.cfg.max_count());
            self.reward.deliver(r, self.cfg.ticks(self.cfg.reward_window) as u32);
            self.presentation_rewards.push(r);
            self.window_reward.push(r);
        }
        let r = if self.trial_tick >= present {
            self.reward.tick()
        } else {
            0.0
        };
        self.learner.after_tick(&mut self.net, r)?;
        self.tick += 1;
        self.trial_tick = (self.trial_tick + 1) % self.cfg.trial_ticks();
        Ok(())
    }

    fn log_row(&mut self) {
        let row = MetricsRow {
            reward: self.window_reward.take(),
            ..MetricsRow::new(
                self.tick,
                self.tick as f64 * self.cfg.dt,
                self.learner.sampler.config().mode,
                self.learner.temperature(),
            )
        }
        .with_params(&self.learner.state);
        self.rows.push(row);
    }

    /// Mean reward of the last `n` presentations.
    pub fn final_reward(&self, n: usize) -> f64 {
        let r = &self.presentation_rewards;
        let tail = &r[r.len().saturating_sub(n)..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }
}

impl Experiment for SigmoidExperiment {
    fn progress(&self) -> u64 {
        self.tick
    }

    fn total(&self) -> u64 {
        self.cfg.presentations * self.cfg.trial_ticks()
    }

    fn advance(&mut self, until: u64) -> Result<()> {
        let until = until.min(self.total());
        while self.tick < until {
            self.step()?;
            if self.tick.is_multiple_of(self.params.log_stride) || self.tick == self.total() {
                self.log_row();
            }
        }
        Ok(())
    }

    fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    fn set_mode(&mut self, mode: Mode) -> Result<()> {
        self.learner.set_mode(mode)
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "presentations": self.presentation_rewards.len(),
            "mean_reward": self.final_reward(usize::MAX),
            "final_reward_last_500": self.final_reward(500),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn reward_examples() {
        assert_eq!(sigmoid_reward(0.5, 30, 60.0), 1.0);
        assert_eq!(sigmoid_reward(1.0, 0, 60.0), 0.0);
        assert!((sigmoid_reward(0.2, 6, 60.0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn patterns_cover_the_weighted_sum_axis() {
        let cfg = SigmoidTaskConfig::default();
        let p = select_patterns(&cfg, &mut seeded(1));
        assert_eq!(p.len(), 20);
        let mut t: Vec<f64> = p.iter().map(|x| cfg.target_rate(x)).collect();
        t.sort_by(f64::total_cmp);
        assert!(t[0] < 0.05 && t[19] > 0.95, "{t:?}");
        assert!(p.iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }
}
