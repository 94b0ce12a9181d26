//! Experiment state container and JSON checkpoints.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{ResolvedConfig, TaskConfig};
use crate::error::{Error, Result};
use crate::mnist::MnistDataset;
use crate::tasks::{Experiment, MnistExperiment, ReachingExperiment, RunParams, SigmoidExperiment, XorExperiment};

/// Checkpoint format tag. Files with another tag are refused.
pub const CHECKPOINT_VERSION: &str = concat!("synsample-checkpoint/1 (", env!("CARGO_PKG_VERSION"), ")");

/// Training data shared by all MNIST trials.
#[derive(Debug, Clone)]
pub struct MnistData {
    pub train: Arc<MnistDataset>,
    pub test: Arc<MnistDataset>,
}

impl MnistData {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            train: Arc::new(MnistDataset::train(dir)?),
            test: Arc::new(MnistDataset::test(dir)?),
        })
    }
}

/// Complete state of one running trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "state", rename_all = "kebab-case")]
pub enum ExperimentState {
    Sigmoid(Box<SigmoidExperiment>),
    Reaching(Box<ReachingExperiment>),
    Xor(Box<XorExperiment>),
    Mnist(Box<MnistExperiment>),
}

impl ExperimentState {
    /// Fresh state for trial `trial` of `cfg`. MNIST needs `data`.
    pub fn build(cfg: &ResolvedConfig, trial: u32, data: Option<&MnistData>) -> Result<Self> {
        let params = RunParams {
            seed: cfg.trial_seed(trial),
            sampler: cfg.sampler,
            schedule: cfg.schedule,
            log_stride: cfg.log_stride,
        };
        Ok(match &cfg.task {
            TaskConfig::Sigmoid(c) => Self::Sigmoid(Box::new(SigmoidExperiment::new(c.clone(), params)?)),
            TaskConfig::Reaching(c) => Self::Reaching(Box::new(ReachingExperiment::new(c.clone(), params)?)),
            TaskConfig::Xor(c) => Self::Xor(Box::new(XorExperiment::new(c.clone(), params)?)),
            TaskConfig::Mnist(c) => {
                let d = data.ok_or_else(|| Error::InvalidConfig("mnist run without data".into()))?;
                Self::Mnist(Box::new(MnistExperiment::new(
                    c.clone(),
                    params,
                    d.train.clone(),
                    d.test.clone(),
                )?))
            }
            TaskConfig::OracleSuite(_) => {
                return Err(Error::InvalidConfig("the oracle suite has no trial state".into()))
            }
        })
    }

    pub fn experiment(&self) -> &dyn Experiment {
        match self {
            Self::Sigmoid(e) => e.as_ref(),
            Self::Reaching(e) => e.as_ref(),
            Self::Xor(e) => e.as_ref(),
            Self::Mnist(e) => e.as_ref(),
        }
    }

    pub fn experiment_mut(&mut self) -> &mut dyn Experiment {
        match self {
            Self::Sigmoid(e) => e.as_mut(),
            Self::Reaching(e) => e.as_mut(),
            Self::Xor(e) => e.as_mut(),
            Self::Mnist(e) => e.as_mut(),
        }
    }

    /// Re-attaches external data after deserialization.
    pub fn attach(&mut self, data: Option<&MnistData>) -> Result<()> {
        if let Self::Mnist(e) = self {
            let d = data.ok_or_else(|| Error::Checkpoint("mnist checkpoint needs the dataset".into()))?;
            e.attach(d.train.clone(), d.test.clone());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub config_hash: String,
    pub config: ResolvedConfig,
    pub trial: u32,
    pub state: ExperimentState,
}

impl Checkpoint {
    pub fn new(config: &ResolvedConfig, trial: u32, state: ExperimentState) -> Self {
        Self {
            version: CHECKPOINT_VERSION.to_string(),
            config_hash: config.hash(),
            config: config.clone(),
            trial,
            state,
        }
    }

    /// Writes to a sibling temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string(self)?;
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        let found = value.get("version").and_then(|v| v.as_str()).unwrap_or("<missing>");
        if found != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: found.to_string(),
                expected: CHECKPOINT_VERSION.to_string(),
            });
        }
        let ck: Self =
            serde_json::from_value(value).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if ck.config.hash() != ck.config_hash {
            return Err(Error::Checkpoint("config hash does not match the stored config".into()));
        }
        Ok(ck)
    }
}
