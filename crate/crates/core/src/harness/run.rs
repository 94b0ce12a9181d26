//! Running trials: output layout, periodic checkpoints and resume.
//!
//! ```text
//! <out>/config.json
//! <out>/summary.json
//! <out>/trial_000/metrics.csv
//! <out>/trial_000/summary.json
//! <out>/trial_000/checkpoint.json
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, ExperimentState, MnistData};
use super::config::{ResolvedConfig, TaskConfig};
use super::suite::{run_oracle_suite, OracleSuiteReport};
use crate::error::{Error, Result};
use crate::sampler::Mode;
use crate::tasks::MetricsRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u32,
    pub seed: u64,
    pub progress: u64,
    pub total: u64,
    pub completed: bool,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    pub config_hash: String,
    pub config: ResolvedConfig,
    pub trials: Vec<TrialOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_suite: Option<OracleSuiteReport>,
}

pub fn trial_dir(out: &Path, trial: u32) -> PathBuf {
    out.join(format!("trial_{trial:03}"))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes `rows` as CSV with a header line.
pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "{}", MetricsRow::HEADER).map_err(io)?;
    for r in rows {
        writeln!(f, "{}", r.to_csv()).map_err(io)?;
    }
    f.flush().map_err(io)
}

/// Advances `state` to the end of the run (or `cfg.max_ticks`), writing a
/// checkpoint every `cfg.checkpoint_every` units and the trial files at the end.
pub fn run_trial(cfg: &ResolvedConfig, trial: u32, mut state: ExperimentState, dir: &Path) -> Result<TrialOutcome> {
    create_dir(dir)?;
    let total = state.experiment().total();
    let stop = cfg.max_ticks.map_or(total, |m| m.min(total));
    let ckpt = dir.join("checkpoint.json");
    while state.experiment().progress() < stop {
        let next = match cfg.checkpoint_every {
            Some(k) => ((state.experiment().progress() / k + 1) * k).min(stop),
            None => stop,
        };
        state.experiment_mut().advance(next)?;
        if cfg.checkpoint_every.is_some() && next < stop {
            Checkpoint::new(cfg, trial, state.clone()).save(&ckpt)?;
        }
    }
    let e = state.experiment();
    write_metrics_csv(&dir.join("metrics.csv"), e.rows())?;
    let outcome = TrialOutcome {
        trial,
        seed: cfg.trial_seed(trial),
        progress: e.progress(),
        total,
        completed: e.progress() >= total,
        summary: e.summary(),
    };
    write_json(&dir.join("summary.json"), &outcome)?;
    Checkpoint::new(cfg, trial, state).save(&ckpt)?;
    Ok(outcome)
}

fn load_data(cfg: &ResolvedConfig) -> Result<Option<MnistData>> {
    match cfg.task {
        TaskConfig::Mnist(_) => MnistData::load(&cfg.mnist_dir).map(Some),
        _ => Ok(None),
    }
}

fn write_summary(
    cfg: &ResolvedConfig,
    trials: Vec<TrialOutcome>,
    suite: Option<OracleSuiteReport>,
) -> Result<RunSummary> {
    let s = RunSummary {
        experiment: cfg.kind().to_string(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        trials,
        oracle_suite: suite,
    };
    write_json(&cfg.output_dir.join("summary.json"), &s)?;
    Ok(s)
}

/// Runs every trial of `cfg` (in parallel) under `cfg.output_dir`.
pub fn run_experiment(cfg: &ResolvedConfig) -> Result<RunSummary> {
    create_dir(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("config.json"), cfg)?;
    if let TaskConfig::OracleSuite(suite) = &cfg.task {
        let report = run_oracle_suite(suite, cfg.seed)?;
        write_json(&cfg.output_dir.join("report.json"), &report)?;
        return write_summary(cfg, Vec::new(), Some(report));
    }
    let data = load_data(cfg)?;
    let trials = (0..cfg.n_trials)
        .into_par_iter()
        .map(|i| {
            let state = ExperimentState::build(cfg, i, data.as_ref())?;
            run_trial(cfg, i, state, &trial_dir(&cfg.output_dir, i))
        })
        .collect::<Result<Vec<_>>>()?;
    write_summary(cfg, trials, None)
}

/// Overrides applied when resuming.
#[derive(Debug, Clone, Default)]
pub struct ResumeOptions {
    /// Switch the parameter dynamics before continuing; momentum restarts at 0.
    pub mode: Option<Mode>,
    /// New cap on total units (`None` keeps the checkpoint's cap).
    pub max_ticks: Option<u64>,
    /// Clears the stored cap so the run goes to completion.
    pub run_to_end: bool,
    /// Directory for the trial files (default: the checkpoint's directory).
    pub out_dir: Option<PathBuf>,
    /// Overrides the stored MNIST location.
    pub mnist_dir: Option<PathBuf>,
}

/// Continues one trial from a checkpoint file.
pub fn resume(path: &Path, opts: &ResumeOptions) -> Result<TrialOutcome> {
    let ck = Checkpoint::load(path)?;
    let mut cfg = ck.config;
    if opts.run_to_end {
        cfg.max_ticks = None;
    }
    if opts.max_ticks.is_some() {
        cfg.max_ticks = opts.max_ticks;
    }
    if let Some(d) = &opts.mnist_dir {
        cfg.mnist_dir = d.clone();
    }
    let mut state = ck.state;
    state.attach(load_data(&cfg)?.as_ref())?;
    if let Some(mode) = opts.mode {
        if mode != cfg.sampler.mode {
            state.experiment_mut().set_mode(mode)?;
        }
    }
    let dir = match &opts.out_dir {
        Some(d) => d.clone(),
        None => path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    run_trial(&cfg, ck.trial, state, &dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentConfig, ExperimentKind};

    fn small_xor(out: &Path) -> ResolvedConfig {
        let mut c = ExperimentConfig::new(ExperimentKind::Xor);
        c.task.insert("presentations".into(), serde_json::json!(8));
        c.task.insert("probes".into(), serde_json::json!(2));
        c.log_stride = Some(500);
        c.output_dir = Some(out.to_path_buf());
        c.resolve().unwrap()
    }

    #[test]
    fn csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_xor(dir.path());
        let s = run_experiment(&cfg).unwrap();
        assert!(s.trials[0].completed);
        let csv = std::fs::read_to_string(trial_dir(dir.path(), 0).join("metrics.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(MetricsRow::HEADER));
        assert!(lines.count() >= 1);
        assert!(dir.path().join("summary.json").exists());
    }

    #[test]
    fn checkpoint_resume_is_bit_exact() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let full = small_xor(a.path());
        run_experiment(&full).unwrap();

        let mut cut = small_xor(b.path());
        cut.max_ticks = Some(1500);
        cut.checkpoint_every = Some(1000);
        let partial = run_experiment(&cut).unwrap();
        assert!(!partial.trials[0].completed);
        let ck = trial_dir(b.path(), 0).join("checkpoint.json");
        let resumed = resume(
            &ck,
            &ResumeOptions {
                run_to_end: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(resumed.completed);
        let read = |d: &Path| std::fs::read_to_string(trial_dir(d, 0).join("metrics.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
    }

    #[test]
    fn wrong_version_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"version": "other"}"#).unwrap();
        assert!(matches!(Checkpoint::load(&p), Err(Error::CheckpointVersion { .. })));
    }
}
