//! Experiment environments.
//!
//! Each experiment is a serializable state machine advanced in units of
//! network ticks (updates for the perceptron task). [`Experiment::advance`]
//! emits one [`MetricsRow`] every `log_stride` units, which the harness writes
//! to CSV. Because the whole state (including random streams) serializes, a
//! run can be checkpointed at any unit and resumed bit-exactly.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::{bernoulli, Rng};
use crate::sampler::{Mode, ParameterState, SamplerConfig, TemperatureSchedule};

pub mod mnist;
pub mod reaching;
pub mod sigmoid;
pub mod xor;

pub use mnist::{MnistExperiment, MnistTaskConfig};
pub use reaching::{
    population_vector_update, CueGenerator, Outcome, ReachingExperiment, ReachingSim, ReachingTaskConfig,
    TrialStateMachine,
};
pub use sigmoid::{SigmoidExperiment, SigmoidTaskConfig};
pub use xor::{xor_reward, XorExperiment, XorTaskConfig};

/// Scalar reward signal with delivery windows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTrace {
    value: f64,
    remaining: u32,
}

impl RewardTrace {
    /// Delivers `value` for the next `ticks` ticks, replacing any open window.
    pub fn deliver(&mut self, value: f64, ticks: u32) {
        self.value = value;
        self.remaining = ticks;
    }

    /// Reward of the current tick; closes the window when it runs out.
    pub fn tick(&mut self) -> f64 {
        if self.remaining == 0 {
            return 0.0;
        }
        self.remaining -= 1;
        self.value
    }

    pub fn active(&self) -> bool {
        self.remaining > 0
    }
}

/// Per-tick Bernoulli approximation of Poisson inputs: `p = rate * dt`.
pub fn poisson_inputs(rates: &[f64], dt: f64, rng: &mut Rng, out: &mut [bool]) {
    for (z, &r) in out.iter_mut().zip(rates) {
        *z = bernoulli(rng, r * dt);
    }
}

/// One CSV metrics row. Optional fields are written as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// Ticks (updates for the perceptron task) since the start of the run.
    pub step: u64,
    pub time_s: f64,
    pub mode: Mode,
    pub temperature: f64,
    /// Mean reward over the logging window.
    pub reward: Option<f64>,
    /// Fraction of successful trials completed in the window.
    pub success: Option<f64>,
    /// Test accuracy, when evaluated at this row.
    pub accuracy: Option<f64>,
    pub theta_mean: f64,
    pub theta_sd: f64,
    pub gamma_rms: f64,
    /// First four parameters, as a small weight snapshot.
    pub theta_head: [Option<f64>; 4],
}

impl MetricsRow {
    pub const HEADER: &'static str = "step,time_s,mode,temperature,reward,success,accuracy,theta_mean,theta_sd,gamma_rms,theta_0,theta_1,theta_2,theta_3";

    /// Fills the parameter statistics from `state`.
    pub fn with_params(mut self, state: &ParameterState) -> Self {
        let th = state.theta();
        let n = th.len().max(1) as f64;
        self.theta_mean = th.iter().sum::<f64>() / n;
        self.theta_sd = (th.iter().map(|t| (t - self.theta_mean).powi(2)).sum::<f64>() / n).sqrt();
        self.gamma_rms = (state.gamma().iter().map(|g| g * g).sum::<f64>() / n).sqrt();
        for (h, t) in self.theta_head.iter_mut().zip(th) {
            *h = Some(*t);
        }
        self
    }

    pub fn new(step: u64, time_s: f64, mode: Mode, temperature: f64) -> Self {
        Self {
            step,
            time_s,
            mode,
            temperature,
            reward: None,
            success: None,
            accuracy: None,
            theta_mean: 0.0,
            theta_sd: 0.0,
            gamma_rms: 0.0,
            theta_head: [None; 4],
        }
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut fields = vec![
            self.step.to_string(),
            self.time_s.to_string(),
            self.mode.to_string(),
            self.temperature.to_string(),
            opt(self.reward),
            opt(self.success),
            opt(self.accuracy),
            self.theta_mean.to_string(),
            self.theta_sd.to_string(),
            self.gamma_rms.to_string(),
        ];
        fields.extend(self.theta_head.iter().map(|v| opt(*v)));
        fields.join(",")
    }
}

/// Running mean over a logging window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowMean {
    sum: f64,
    n: u64,
}

impl WindowMean {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }

    /// Mean of the window (None if empty), then resets.
    pub fn take(&mut self) -> Option<f64> {
        let m = (self.n > 0).then(|| self.sum / self.n as f64);
        *self = Self::default();
        m
    }
}

/// Settings shared by every experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    /// Trial seed; all random streams derive from it.
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub schedule: TemperatureSchedule,
    /// Units between metrics rows.
    pub log_stride: u64,
}

/// Common interface of all experiments, used by the harness.
pub trait Experiment {
    /// Units (ticks or updates) completed so far.
    fn progress(&self) -> u64;
    /// Units in the full run.
    fn total(&self) -> u64;
    /// Runs until `progress() == until` (clamped to `total()`).
    fn advance(&mut self, until: u64) -> Result<()>;
    /// Metrics rows emitted so far.
    fn rows(&self) -> &[MetricsRow];
    /// Switches the parameter dynamics; momentum restarts from zero.
    fn set_mode(&mut self, mode: Mode) -> Result<()>;
    /// Headline numbers for the JSON summary.
    fn summary(&self) -> serde_json::Value;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_trace_window() {
        let mut r = RewardTrace::default();
        assert_eq!(r.tick(), 0.0);
        r.deliver(0.7, 3);
        assert_eq!([r.tick(), r.tick(), r.tick(), r.tick()], [0.7, 0.7, 0.7, 0.0]);
        assert!(!r.active());
    }

    #[test]
    fn csv_row_has_header_arity() {
        let row = MetricsRow::new(10, 0.01, Mode::Langevin, 0.5).with_params(&ParameterState::new(vec![1.0, 3.0]));
        let cells = row.to_csv().split(',').count();
        assert_eq!(cells, MetricsRow::HEADER.split(',').count());
        assert!(row.to_csv().starts_with("10,0.01,langevin,0.5,,,,2,1,0,1,3,,"));
    }

    #[test]
    fn window_mean_resets() {
        let mut w = WindowMean::default();
        assert_eq!(w.take(), None);
        w.push(1.0);
        w.push(2.0);
        assert_eq!(w.take(), Some(1.5));
        assert_eq!(w.take(), None);
    }
}
