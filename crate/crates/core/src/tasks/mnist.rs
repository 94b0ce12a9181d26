//! Digit classification with the stochastic perceptron.
//!
//! One training image per update: a stochastic forward pass, reward 1 for a
//! correct winner, and one sampler step along the immediate reward gradient.
//! Test accuracy is measured with deterministic hidden probabilities.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Experiment, MetricsRow, RunParams, WindowMean};
use crate::error::{Error, Result};
use crate::mnist::{MnistDataset, PIXELS};
use crate::perceptron::{immediate_gradient, immediate_reward, soft_winner, softmax, PerceptronNet, PerceptronShape};
use crate::plasticity::{posterior_gradient, PriorConfig};
use crate::rng::{fill_standard_normal, stream_rng, uniform, Rng, Stream};
use crate::sampler::{Mode, Sampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnistTaskConfig {
    pub hidden: usize,
    pub updates: u64,
    /// Initial weights are drawn from `N(0, init_std²)`.
    pub init_std: f64,
    pub prior: PriorConfig,
    /// Updates between test-set evaluations (a multiple of the log stride).
    pub eval_every: u64,
    /// Test images used per evaluation (0 = all).
    pub eval_size: usize,
    /// Switch to this mode once `switch_at` updates are done.
    pub switch_to: Option<Mode>,
    pub switch_at: Option<u64>,
    /// Train with a soft winner-take-all output: the winner is drawn from the
    /// softmax of the output potentials, which also replaces `g` in the
    /// gradient. Test accuracy always uses the argmax.
    pub soft_wta: bool,
}

impl Default for MnistTaskConfig {
    fn default() -> Self {
        Self {
            hidden: 30,
            updates: 100_000,
            init_std: 0.05,
            prior: PriorConfig::Uninformative,
            eval_every: 2_000,
            eval_size: 0,
            switch_to: None,
            switch_at: None,
            soft_wta: true,
        }
    }
}

/// Fraction of `data` classified correctly (first `limit` items, 0 = all).
pub fn test_accuracy(net: &PerceptronNet, data: &MnistDataset, limit: usize) -> f64 {
    let n = if limit == 0 { data.len() } else { limit.min(data.len()) };
    let mut x = [0.0; PIXELS];
    let mut correct = 0usize;
    for i in 0..n {
        data.image(i, &mut x);
        if net.predict_deterministic(&x) == data.label(i) as usize {
            correct += 1;
        }
    }
    correct as f64 / n.max(1) as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MnistExperiment {
    pub cfg: MnistTaskConfig,
    pub params: RunParams,
    pub net: PerceptronNet,
    sampler: Sampler,
    net_rng: Rng,
    task_rng: Rng,
    update: u64,
    window_reward: WindowMean,
    /// `(update, accuracy)` at every evaluation.
    pub accuracy: Vec<(u64, f64)>,
    rows: Vec<MetricsRow>,
    #[serde(skip)]
    train: Option<Arc<MnistDataset>>,
    #[serde(skip)]
    test: Option<Arc<MnistDataset>>,
    #[serde(skip)]
    grad: Vec<f64>,
}

impl MnistExperiment {
    pub fn new(
        cfg: MnistTaskConfig,
        params: RunParams,
        train: Arc<MnistDataset>,
        test: Arc<MnistDataset>,
    ) -> Result<Self> {
        if train.is_empty() || test.is_empty() || cfg.updates == 0 || cfg.hidden == 0 {
            return Err(Error::InvalidConfig(
                "mnist task needs data, updates and hidden units".into(),
            ));
        }
        if cfg.eval_every == 0 || !cfg.eval_every.is_multiple_of(params.log_stride) {
            return Err(Error::InvalidConfig(format!(
                "eval_every {} must be a positive multiple of log_stride {}",
                cfg.eval_every, params.log_stride
            )));
        }
        if cfg.switch_at.is_some() != cfg.switch_to.is_some() {
            return Err(Error::InvalidConfig("switch_at and switch_to go together".into()));
        }
        cfg.prior.validate()?;
        params.schedule.validate()?;
        let shape = PerceptronShape {
            hidden: cfg.hidden,
            ..PerceptronShape::MNIST
        };
        let mut theta = vec![0.0; shape.n_params()];
        fill_standard_normal(&mut stream_rng(params.seed, Stream::Init), &mut theta);
        theta.iter_mut().for_each(|t| *t *= cfg.init_std);
        let mut e = Self {
            net: PerceptronNet::new(shape, theta)?,
            sampler: Sampler::new(params.sampler, stream_rng(params.seed, Stream::Sampler))?,
            net_rng: stream_rng(params.seed, Stream::Network),
            task_rng: stream_rng(params.seed, Stream::Task),
            cfg,
            params,
            update: 0,
            window_reward: WindowMean::default(),
            accuracy: Vec::new(),
            rows: Vec::new(),
            train: None,
            test: None,
            grad: Vec::new(),
        };
        e.attach(train, test);
        Ok(e)
    }

    /// Re-attaches the datasets after restoring from a checkpoint.
    pub fn attach(&mut self, train: Arc<MnistDataset>, test: Arc<MnistDataset>) {
        self.train = Some(train);
        self.test = Some(test);
    }

    fn data(&self) -> Result<(Arc<MnistDataset>, Arc<MnistDataset>)> {
        match (&self.train, &self.test) {
            (Some(a), Some(b)) => Ok((a.clone(), b.clone())),
            _ => Err(Error::InvalidConfig("mnist datasets not attached".into())),
        }
    }

    fn step(&mut self, train: &MnistDataset, x: &mut [f64; PIXELS]) -> Result<()> {
        if self.cfg.switch_at == Some(self.update) {
            if let Some(mode) = self.cfg.switch_to {
                self.set_mode(mode)?;
            }
        }
        let i = ((uniform(&mut self.task_rng) * train.len() as f64) as usize).min(train.len() - 1);
        train.image(i, x);
        let mut fwd = self.net.forward(x, &mut self.net_rng);
        if self.cfg.soft_wta {
            let z: Vec<f64> = fwd.hidden_z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            fwd.output_p = softmax(&self.net.output_drives(&z));
            fwd.winner = soft_winner(&fwd.output_p, &mut self.net_rng);
        }
        let r = immediate_reward(fwd.winner, train.label(i) as usize);
        self.window_reward.push(r);
        self.grad.resize(self.net.shape.n_params(), 0.0);
        immediate_gradient(&self.net.shape, x, &fwd, r, &mut self.grad);
        if !matches!(self.cfg.prior, PriorConfig::Uninformative) {
            for (g, th) in self.grad.iter_mut().zip(self.net.params.theta()) {
                *g = posterior_gradient(*g, *th, &self.cfg.prior);
            }
        }
        let temperature = self.temperature();
        self.sampler.step(&mut self.net.params, &self.grad, temperature)?;
        self.update += 1;
        if let Some((what, k)) = self.net.params.first_non_finite() {
            return Err(Error::NonFinite {
                what: format!("{what}[{k}]"),
                step: self.update,
            });
        }
        Ok(())
    }

    fn temperature(&self) -> f64 {
        self.params.schedule.at(self.update as f64 * self.params.sampler.dt)
    }

    fn log_row(&mut self, test: &MnistDataset) {
        let accuracy = (self.update.is_multiple_of(self.cfg.eval_every) || self.update == self.total())
            .then(|| test_accuracy(&self.net, test, self.cfg.eval_size));
        if let Some(a) = accuracy {
            self.accuracy.push((self.update, a));
        }
        let row = MetricsRow {
            reward: self.window_reward.take(),
            accuracy,
            ..MetricsRow::new(
                self.update,
                self.update as f64 * self.params.sampler.dt,
                self.sampler.config().mode,
                self.temperature(),
            )
        }
        .with_params(&self.net.params);
        self.rows.push(row);
    }
}

impl Experiment for MnistExperiment {
    fn progress(&self) -> u64 {
        self.update
    }

    fn total(&self) -> u64 {
        self.cfg.updates
    }

    fn advance(&mut self, until: u64) -> Result<()> {
        let (train, test) = self.data()?;
        let until = until.min(self.total());
        if self.update == 0 && self.accuracy.is_empty() {
            self.accuracy
                .push((0, test_accuracy(&self.net, &test, self.cfg.eval_size)));
        }
        let mut x = [0.0; PIXELS];
        while self.update < until {
            self.step(&train, &mut x)?;
            if self.update.is_multiple_of(self.params.log_stride) || self.update == self.total() {
                self.log_row(&test);
            }
        }
        Ok(())
    }

    fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    fn set_mode(&mut self, mode: Mode) -> Result<()> {
        self.sampler.set_mode(mode)?;
        self.net.params.reset_momentum();
        Ok(())
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "updates": self.update,
            "final_accuracy": self.accuracy.last().map(|a| a.1),
            "accuracy": self.accuracy,
        })
    }
}
