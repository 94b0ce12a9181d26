//! Run configuration: the user-facing JSON document and its resolved form.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sampler::{Mode, SamplerConfig, TemperatureSchedule};
use crate::tasks::{MnistTaskConfig, ReachingTaskConfig, SigmoidTaskConfig, XorTaskConfig};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "SYNSAMPLE_OUT";
/// Output directory when neither the config nor the environment names one.
pub const DEFAULT_OUTPUT_DIR: &str = "runs";
/// Environment variable naming the directory with the four MNIST IDX files.
pub const MNIST_ENV: &str = "MNIST_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sigmoid,
    Reaching,
    Xor,
    Mnist,
    OracleSuite,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Self::Sigmoid),
            "reaching" => Ok(Self::Reaching),
            "xor" => Ok(Self::Xor),
            "mnist" => Ok(Self::Mnist),
            "oracle-suite" | "oracles" => Ok(Self::OracleSuite),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment `{other}` (expected sigmoid, reaching, xor, mnist or oracle-suite)"
            ))),
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sigmoid => "sigmoid",
            Self::Reaching => "reaching",
            Self::Xor => "xor",
            Self::Mnist => "mnist",
            Self::OracleSuite => "oracle-suite",
        })
    }
}

/// Knobs of the oracle suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSuiteConfig {
    pub chains: usize,
    pub samples_per_chain: usize,
    pub reduction_triples: usize,
    pub landscape_points: usize,
    pub fd_episodes: u64,
    pub fd_epsilon: f64,
}

impl Default for OracleSuiteConfig {
    fn default() -> Self {
        Self {
            chains: 100,
            samples_per_chain: 1000,
            reduction_triples: 10_000,
            landscape_points: 1000,
            fd_episodes: 10_000,
            fd_epsilon: 1.0,
        }
    }
}

/// Task configuration, tagged by experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "task", rename_all = "kebab-case")]
pub enum TaskConfig {
    Sigmoid(SigmoidTaskConfig),
    Reaching(ReachingTaskConfig),
    Xor(XorTaskConfig),
    Mnist(MnistTaskConfig),
    OracleSuite(OracleSuiteConfig),
}

impl TaskConfig {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Self::Sigmoid(_) => ExperimentKind::Sigmoid,
            Self::Reaching(_) => ExperimentKind::Reaching,
            Self::Xor(_) => ExperimentKind::Xor,
            Self::Mnist(_) => ExperimentKind::Mnist,
            Self::OracleSuite(_) => ExperimentKind::OracleSuite,
        }
    }
}

/// The JSON configuration document. Everything except `experiment` is optional;
/// [`ExperimentConfig::resolve`] fills experiment-specific defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub n_trials: u32,
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    /// Overrides only the sampler mode.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub schedule: Option<TemperatureSchedule>,
    /// Task knobs; unknown keys are rejected.
    #[serde(default)]
    pub task: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Units (ticks, or updates for MNIST) between metrics rows.
    #[serde(default)]
    pub log_stride: Option<u64>,
    /// Stop after this many units even if the run is longer.
    #[serde(default)]
    pub max_ticks: Option<u64>,
    /// Write a checkpoint every this many units.
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
    #[serde(default)]
    pub mnist_dir: Option<PathBuf>,
}

fn one() -> u32 {
    1
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: 0,
            n_trials: 1,
            sampler: None,
            mode: None,
            schedule: None,
            task: serde_json::Map::new(),
            output_dir: None,
            log_stride: None,
            max_ticks: None,
            checkpoint_every: None,
            mnist_dir: None,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Fills defaults and validates.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be >= 1".into()));
        }
        let knobs = serde_json::Value::Object(self.task.clone());
        let task = match self.experiment {
            ExperimentKind::Sigmoid => TaskConfig::Sigmoid(parse_knobs(self.experiment, knobs)?),
            ExperimentKind::Reaching => TaskConfig::Reaching(parse_knobs(self.experiment, knobs)?),
            ExperimentKind::Xor => TaskConfig::Xor(parse_knobs(self.experiment, knobs)?),
            ExperimentKind::Mnist => TaskConfig::Mnist(parse_knobs(self.experiment, knobs)?),
            ExperimentKind::OracleSuite => TaskConfig::OracleSuite(parse_knobs(self.experiment, knobs)?),
        };
        let mut sampler = self.sampler.unwrap_or_else(|| default_sampler(&task));
        if let Some(mode) = self.mode {
            sampler.mode = mode;
        }
        sampler.validate()?;
        let schedule = self.schedule.unwrap_or_else(|| default_schedule(&task));
        schedule.validate()?;
        let log_stride = self.log_stride.unwrap_or_else(|| default_log_stride(&task));
        if log_stride == 0 {
            return Err(Error::InvalidConfig("log_stride must be >= 1".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::InvalidConfig("checkpoint_every must be >= 1".into()));
        }
        let output_dir = self
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        let mnist_dir = self
            .mnist_dir
            .clone()
            .or_else(|| std::env::var_os(MNIST_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data/mnist"));
        Ok(ResolvedConfig {
            seed: self.seed,
            n_trials: self.n_trials,
            sampler,
            schedule,
            task,
            output_dir,
            log_stride,
            max_ticks: self.max_ticks,
            checkpoint_every: self.checkpoint_every,
            mnist_dir,
        })
    }
}

fn parse_knobs<T: serde::de::DeserializeOwned>(kind: ExperimentKind, knobs: serde_json::Value) -> Result<T> {
    serde_json::from_value(knobs).map_err(|e| Error::InvalidConfig(format!("{kind} task knobs: {e}")))
}

/// Sampler used when the config names none. All coefficients are set so that
/// a mode override or a mid-run switch has what it needs.
pub fn default_sampler(task: &TaskConfig) -> SamplerConfig {
    match task {
        TaskConfig::Sigmoid(c) => SamplerConfig {
            mode: Mode::Hamiltonian,
            a: 1.0,
            b: 0.1,
            c: 0.0,
            beta: 1.0,
            dt: c.dt * c.update_every as f64,
        },
        TaskConfig::Reaching(c) => SamplerConfig {
            mode: Mode::Hamiltonian,
            a: 1.0,
            b: 0.02,
            c: 0.0,
            beta: 5.0,
            dt: c.network.dt * c.update_every as f64,
        },
        TaskConfig::Xor(c) => SamplerConfig {
            mode: Mode::Hamiltonian,
            a: 0.3,
            b: 0.02,
            c: 0.0,
            beta: 0.45,
            dt: c.dt * c.update_every as f64,
        },
        TaskConfig::Mnist(_) => SamplerConfig {
            mode: Mode::Hamiltonian,
            a: 2.0,
            b: 2.0,
            c: 0.0,
            beta: 0.2,
            dt: 0.005,
        },
        TaskConfig::OracleSuite(_) => SamplerConfig {
            mode: Mode::Langevin,
            a: 1.0,
            b: 2.0,
            c: 0.0,
            beta: 1.0,
            dt: 0.01,
        },
    }
}

/// Temperature schedule used when the config names none.
pub fn default_schedule(task: &TaskConfig) -> TemperatureSchedule {
    match task {
        TaskConfig::Sigmoid(_) => TemperatureSchedule::constant(1e-4),
        TaskConfig::Reaching(_) => TemperatureSchedule::constant(0.1),
        TaskConfig::Xor(c) => TemperatureSchedule::linear(0.03, 1e-4, c.duration()),
        TaskConfig::Mnist(_) => TemperatureSchedule::constant(1e-4),
        TaskConfig::OracleSuite(_) => TemperatureSchedule::constant(1.0),
    }
}

pub fn default_log_stride(task: &TaskConfig) -> u64 {
    match task {
        TaskConfig::Sigmoid(c) => 50 * c.trial_ticks(),
        TaskConfig::Reaching(_) => 60_000,
        TaskConfig::Xor(c) => 200 * c.trial_ticks(),
        TaskConfig::Mnist(_) => 1_000,
        TaskConfig::OracleSuite(_) => 1,
    }
}

/// Fully specified run configuration, stored in summaries and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub n_trials: u32,
    pub sampler: SamplerConfig,
    pub schedule: TemperatureSchedule,
    #[serde(flatten)]
    pub task: TaskConfig,
    pub output_dir: PathBuf,
    pub log_stride: u64,
    pub max_ticks: Option<u64>,
    pub checkpoint_every: Option<u64>,
    pub mnist_dir: PathBuf,
}

impl ResolvedConfig {
    pub fn kind(&self) -> ExperimentKind {
        self.task.kind()
    }

    /// SHA-256 over the settings that determine results (paths and
    /// budget caps excluded), as lowercase hex.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            for k in ["output_dir", "mnist_dir", "max_ticks", "checkpoint_every"] {
                m.remove(k);
            }
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Simulated seconds of one full trial, the default schedule duration.
    pub fn run_duration(&self) -> f64 {
        match &self.task {
            TaskConfig::Sigmoid(c) => (c.presentations * c.trial_ticks()) as f64 * c.dt,
            TaskConfig::Reaching(c) => c.total_ticks() as f64 * c.network.dt,
            TaskConfig::Xor(c) => c.duration(),
            TaskConfig::Mnist(c) => c.updates as f64 * self.sampler.dt,
            TaskConfig::OracleSuite(_) => 1.0,
        }
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, i: u32) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "xor", "seed": 3, "output_dir": "x"}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(c.kind(), ExperimentKind::Xor);
        assert_eq!(c.n_trials, 1);
        assert_eq!(c.sampler.mode, Mode::Hamiltonian);
        assert_eq!(c.output_dir, PathBuf::from("x"));
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"experiment": "xor", "sed": 3}"#).is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::Sigmoid);
        c.task.insert("presentatons".into(), serde_json::json!(10));
        let err = c.resolve().unwrap_err().to_string();
        assert!(err.contains("presentatons"), "{err}");
    }

    #[test]
    fn task_knobs_and_mode_override() {
        let mut c = ExperimentConfig::new(ExperimentKind::Sigmoid);
        c.task.insert("presentations".into(), serde_json::json!(10));
        c.mode = Some(Mode::Langevin);
        let r = c.resolve().unwrap();
        match &r.task {
            TaskConfig::Sigmoid(s) => assert_eq!(s.presentations, 10),
            other => panic!("{other:?}"),
        }
        assert_eq!(r.sampler.mode, Mode::Langevin);
        let back: ResolvedConfig = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn hash_ignores_paths_but_not_seed() {
        let mut c = ExperimentConfig::new(ExperimentKind::Xor);
        c.output_dir = Some("a".into());
        let h1 = c.resolve().unwrap().hash();
        c.output_dir = Some("b".into());
        assert_eq!(c.resolve().unwrap().hash(), h1);
        c.seed = 1;
        assert_ne!(c.resolve().unwrap().hash(), h1);
    }
}
