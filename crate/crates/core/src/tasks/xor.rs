//! XOR with a 2–10–1 spiking network and a sparse binary reward.
//!
//! Each bit drives one Poisson input (80 Hz for 1, 3 Hz for 0) during a
//! 400 ms presentation. Every 5 ms the reward is recomputed: 1 if the output
//! spiked in the past 5 ms and the target is 1, or stayed silent and the
//! target is 0. A 100 ms silent delay separates presentations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{poisson_inputs, Experiment, MetricsRow, RewardTrace, RunParams, WindowMean};
use crate::error::{Error, Result};
use crate::network::{NetworkBuilder, NeuronSpec, SpikingNetwork, Synapse, WeightMapping};
use crate::plasticity::{ClipConfig, EligibilityConfig, LearnerConfig, PriorConfig, SynapticLearner};
use crate::rng::{standard_normal, stream_rng, uniform, Rng, Stream};
use crate::sampler::{Mode, TemperatureSchedule};

pub const PATTERNS: [[bool; 2]; 4] = [[false, false], [false, true], [true, false], [true, true]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XorTaskConfig {
    pub n_hidden: usize,
    pub rate_on: f64,
    pub rate_off: f64,
    pub present: f64,
    pub delay: f64,
    pub reward_interval: f64,
    pub refractory: f64,
    pub hidden_bias: f64,
    pub output_bias: f64,
    pub theta_init_std: f64,
    pub prior: PriorConfig,
    /// Hard bounds on the parameters.
    pub clip: Option<ClipConfig>,
    pub tau_e: f64,
    pub presentations: u64,
    pub update_every: u32,
    /// Probe presentations per pattern when scoring a network.
    pub probes: u32,
    /// Output rate (Hz) above which a true pattern counts as solved.
    pub high_rate: f64,
    /// Output rate (Hz) below which a false pattern counts as solved.
    pub low_rate: f64,
    pub dt: f64,
}

impl Default for XorTaskConfig {
    fn default() -> Self {
        Self {
            n_hidden: 10,
            rate_on: 80.0,
            rate_off: 3.0,
            present: 0.4,
            delay: 0.1,
            reward_interval: 0.005,
            refractory: 0.005,
            hidden_bias: -2.0,
            output_bias: -2.0,
            theta_init_std: 5.0,
            prior: PriorConfig::Uninformative,
            clip: Some(ClipConfig {
                max_step: 1.0,
                theta_bounds: (-40.0, 40.0),
            }),
            tau_e: 0.05,
            presentations: 20_000,
            update_every: 1,
            probes: 50,
            high_rate: 100.0,
            low_rate: 20.0,
            dt: 0.001,
        }
    }
}

impl XorTaskConfig {
    fn ticks(&self, seconds: f64) -> u64 {
        (seconds / self.dt).round() as u64
    }

    pub fn trial_ticks(&self) -> u64 {
        self.ticks(self.present) + self.ticks(self.delay)
    }

    /// Simulated duration of the full run (s).
    pub fn duration(&self) -> f64 {
        self.presentations as f64 * self.trial_ticks() as f64 * self.dt
    }
}

#[inline]
pub fn xor_target(pattern: [bool; 2]) -> bool {
    pattern[0] != pattern[1]
}

/// 1 iff the output's activity in the window matches the target.
#[inline]
pub fn xor_reward(output_spiked_in_window: bool, target: bool) -> f64 {
    if output_spiked_in_window == target {
        1.0
    } else {
        0.0
    }
}

pub fn build_xor_network(cfg: &XorTaskConfig, rng: &mut Rng) -> Result<SpikingNetwork> {
    let mut b = NetworkBuilder::new(cfg.dt);
    b.neuron(NeuronSpec::input());
    b.neuron(NeuronSpec::input());
    let hidden: Vec<usize> = (0..cfg.n_hidden)
        .map(|_| b.neuron(NeuronSpec::excitatory(cfg.hidden_bias, cfg.refractory)))
        .collect();
    let out = b.neuron(NeuronSpec::excitatory(cfg.output_bias, cfg.refractory));
    let mut theta = || cfg.theta_init_std * standard_normal(rng);
    for &h in &hidden {
        for i in 0..2 {
            b.synapse(Synapse::plastic(i, h, theta(), WeightMapping::Identity));
        }
    }
    for &h in &hidden {
        b.synapse(Synapse::plastic(h, out, theta(), WeightMapping::Identity));
    }
    b.build()
}

/// Output rates (Hz) for the four patterns, averaged over `cfg.probes`
/// presentations on a copy of the network.
pub fn probe_rates(net: &SpikingNetwork, cfg: &XorTaskConfig, rng: &mut Rng) -> Result<[f64; 4]> {
    let mut net = net.clone();
    let out = net.n_neurons() - 1;
    let ticks = cfg.ticks(cfg.present);
    let mut inputs = [false; 2];
    let mut rates = [0.0; 4];
    for (p, pattern) in PATTERNS.iter().enumerate() {
        let r = pattern.map(|b| if b { cfg.rate_on } else { cfg.rate_off });
        let mut count = 0u64;
        for _ in 0..cfg.probes {
            net.reset_dynamics();
            for _ in 0..ticks {
                poisson_inputs(&r, cfg.dt, rng, &mut inputs);
                if net.step(&inputs, rng)?[out] {
                    count += 1;
                }
            }
        }
        rates[p] = count as f64 / (cfg.probes as f64 * cfg.present);
    }
    Ok(rates)
}

/// High output rate for (0,1) and (1,0), low for (0,0) and (1,1).
pub fn is_optimal(rates: &[f64; 4], cfg: &XorTaskConfig) -> bool {
    PATTERNS.iter().zip(rates).all(|(p, &r)| {
        if xor_target(*p) {
            r > cfg.high_rate
        } else {
            r < cfg.low_rate
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XorExperiment {
    pub cfg: XorTaskConfig,
    pub params: RunParams,
    pub net: SpikingNetwork,
    pub learner: SynapticLearner,
    pub initial_rates: [f64; 4],
    net_rng: Rng,
    task_rng: Rng,
    probe_rng: Rng,
    tick: u64,
    trial_tick: u64,
    pattern: usize,
    spiked_in_window: bool,
    rewarded_windows: u32,
    windows: u32,
    reward: RewardTrace,
    /// Fraction of rewarded windows in every completed presentation.
    pub presentation_rewards: Vec<f64>,
    window_reward: WindowMean,
    final_rates: Option<[f64; 4]>,
    rows: Vec<MetricsRow>,
}

impl XorExperiment {
    pub fn new(cfg: XorTaskConfig, params: RunParams) -> Result<Self> {
        if cfg.presentations == 0 || cfg.n_hidden == 0 {
            return Err(Error::InvalidConfig(
                "xor task needs presentations and hidden units".into(),
            ));
        }
        let net = build_xor_network(&cfg, &mut stream_rng(params.seed, Stream::Init))?;
        let learner = SynapticLearner::new(
            &net,
            LearnerConfig {
                sampler: params.sampler,
                eligibility: EligibilityConfig {
                    tau_e: cfg.tau_e,
                    multiplicative: false,
                },
                prior: cfg.prior,
                clip: cfg.clip,
                schedule: params.schedule,
                update_every: cfg.update_every,
            },
            stream_rng(params.seed, Stream::Sampler),
        )?;
        let mut probe_rng = stream_rng(params.seed, Stream::Probe);
        let initial_rates = probe_rates(&net, &cfg, &mut probe_rng)?;
        Ok(Self {
            cfg,
            params,
            net,
            learner,
            initial_rates,
            net_rng: stream_rng(params.seed, Stream::Network),
            task_rng: stream_rng(params.seed, Stream::Task),
            probe_rng,
            tick: 0,
            trial_tick: 0,
            pattern: 0,
            spiked_in_window: false,
            rewarded_windows: 0,
            windows: 0,
            reward: RewardTrace::default(),
            presentation_rewards: Vec::new(),
            window_reward: WindowMean::default(),
            final_rates: None,
            rows: Vec::new(),
        })
    }

    fn step(&mut self) -> Result<()> {
        let present = self.cfg.ticks(self.cfg.present);
        let interval = self.cfg.ticks(self.cfg.reward_interval).max(1);
        if self.trial_tick == 0 {
            self.pattern = ((uniform(&mut self.task_rng) * 4.0) as usize).min(3);
            self.spiked_in_window = false;
            self.rewarded_windows = 0;
            self.windows = 0;
        }
        let mut inputs = [false; 2];
        if self.trial_tick < present {
            let p = PATTERNS[self.pattern];
            let rates = p.map(|b| if b { self.cfg.rate_on } else { self.cfg.rate_off });
            poisson_inputs(&rates, self.cfg.dt, &mut self.task_rng, &mut inputs);
        }
        let out = self.net.n_neurons() - 1;
        let spiked = self.net.step(&inputs, &mut self.net_rng)?[out];
        let r = self.reward.tick();
        self.learner.after_tick(&mut self.net, r)?;
        if self.trial_tick < present {
            self.spiked_in_window |= spiked;
            if (self.trial_tick + 1).is_multiple_of(interval) {
                let value = xor_reward(self.spiked_in_window, xor_target(PATTERNS[self.pattern]));
                self.reward.deliver(value, interval as u32);
                self.rewarded_windows += value as u32;
                self.windows += 1;
                self.spiked_in_window = false;
            }
            if self.trial_tick + 1 == present {
                let frac = self.rewarded_windows as f64 / self.windows.max(1) as f64;
                self.presentation_rewards.push(frac);
                self.window_reward.push(frac);
            }
        }
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

    /// Probe rates of the final network (computed once the run completes).
    pub fn final_rates(&self) -> Option<[f64; 4]> {
        self.final_rates
    }

    pub fn optimal(&self) -> Option<bool> {
        self.final_rates.map(|r| is_optimal(&r, &self.cfg))
    }
}

impl Experiment for XorExperiment {
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
        if self.tick == self.total() && self.final_rates.is_none() {
            self.final_rates = Some(probe_rates(&self.net, &self.cfg, &mut self.probe_rng)?);
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
            "initial_rates_hz": self.initial_rates,
            "final_rates_hz": self.final_rates,
            "optimal": self.optimal(),
        })
    }
}

/// Outcome of [`run_xor_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorSummary {
    pub fraction_optimal: f64,
    pub optimal: Vec<bool>,
    pub final_rates: Vec<[f64; 4]>,
    /// Per-seed reward curves, averaged over blocks of `curve_block` presentations.
    pub reward_curves: Vec<Vec<f64>>,
}

/// Runs one XOR learner per seed (in parallel) under `schedule`.
pub fn run_xor_experiment(
    cfg: &XorTaskConfig,
    sampler: crate::sampler::SamplerConfig,
    schedule: TemperatureSchedule,
    seeds: &[u64],
    curve_block: usize,
) -> Result<XorSummary> {
    let runs: Vec<Result<XorExperiment>> = seeds
        .par_iter()
        .map(|&seed| {
            let params = RunParams {
                seed,
                sampler,
                schedule,
                log_stride: u64::MAX,
            };
            let mut e = XorExperiment::new(cfg.clone(), params)?;
            e.advance(e.total())?;
            Ok(e)
        })
        .collect();
    let mut out = XorSummary {
        fraction_optimal: 0.0,
        optimal: Vec::new(),
        final_rates: Vec::new(),
        reward_curves: Vec::new(),
    };
    for run in runs {
        let e = run?;
        out.optimal.push(e.optimal().unwrap_or(false));
        out.final_rates.push(e.final_rates().unwrap_or([f64::NAN; 4]));
        out.reward_curves.push(
            e.presentation_rewards
                .chunks(curve_block.max(1))
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect(),
        );
    }
    out.fraction_optimal = out.optimal.iter().filter(|&&o| o).count() as f64 / out.optimal.len().max(1) as f64;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_table() {
        assert_eq!(xor_reward(true, true), 1.0);
        assert_eq!(xor_reward(true, false), 0.0);
        assert_eq!(xor_reward(false, false), 1.0);
        assert_eq!(xor_reward(false, true), 0.0);
        assert!(xor_target([true, false]) && !xor_target([true, true]));
    }

    #[test]
    fn optimality_thresholds() {
        let cfg = XorTaskConfig::default();
        assert!(is_optimal(&[5.0, 150.0, 120.0, 10.0], &cfg));
        assert!(!is_optimal(&[5.0, 150.0, 99.0, 10.0], &cfg));
        assert!(!is_optimal(&[52.7, 132.0, 97.2, 81.5], &cfg));
    }
}
