//! `synsample` command-line runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use synsample::harness::{
    resume, run_experiment, ExperimentConfig, ExperimentKind, ResumeOptions, RunSummary, TrialOutcome,
};
use synsample::{Mode, TemperatureSchedule};

#[derive(Parser, Debug)]
#[command(name = "synsample", version, about = "Reward-based synaptic sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment, or continue one from a checkpoint with --resume.
    Run(RunArgs),
    /// Print the fully resolved configuration as JSON without running.
    Config(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// sigmoid, reaching, xor, mnist or oracle-suite.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent trials (seeds seed, seed+1, ...).
    #[arg(long)]
    trials: Option<u32>,
    /// Temperature schedule `kind:T0[:Tfinal[:duration]]`, kind one of
    /// constant, linear, exponential. Duration defaults to the run length.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    mode: Option<Mode>,
    /// JSON configuration file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $SYNSAMPLE_OUT, else ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from a checkpoint file.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Stop after this many ticks (updates for mnist).
    #[arg(long)]
    max_ticks: Option<u64>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    #[arg(long)]
    log_stride: Option<u64>,
    /// Directory holding the four MNIST IDX files.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<synsample::harness::ResolvedConfig, String> {
    let mut cfg = match (&args.config, args.experiment) {
        (Some(path), _) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
        (None, Some(kind)) => ExperimentConfig::new(kind),
        (None, None) => return Err("either --experiment or --config is required".into()),
    };
    if let Some(kind) = args.experiment {
        if kind != cfg.experiment {
            return Err(format!(
                "--experiment {kind} conflicts with config experiment {}",
                cfg.experiment
            ));
        }
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.trials {
        cfg.n_trials = n;
    }
    if args.mode.is_some() {
        cfg.mode = args.mode;
    }
    if args.out.is_some() {
        cfg.output_dir = args.out.clone();
    }
    if args.max_ticks.is_some() {
        cfg.max_ticks = args.max_ticks;
    }
    if args.checkpoint_every.is_some() {
        cfg.checkpoint_every = args.checkpoint_every;
    }
    if args.log_stride.is_some() {
        cfg.log_stride = args.log_stride;
    }
    if args.mnist_dir.is_some() {
        cfg.mnist_dir = args.mnist_dir.clone();
    }
    let mut resolved = cfg.resolve().map_err(|e| e.to_string())?;
    if let Some(spec) = &args.schedule {
        let schedule = TemperatureSchedule::parse(spec, resolved.run_duration()).map_err(|e| e.to_string())?;
        resolved.schedule = schedule;
    }
    Ok(resolved)
}

fn print_trial(t: &TrialOutcome) {
    println!(
        "trial {:03} seed {} {}/{} {} {}",
        t.trial,
        t.seed,
        t.progress,
        t.total,
        if t.completed { "done" } else { "stopped" },
        t.summary
    );
}

fn print_summary(s: &RunSummary, out: &std::path::Path) {
    println!("experiment {} config {}", s.experiment, &s.config_hash[..12]);
    for t in &s.trials {
        print_trial(t);
    }
    if let Some(r) = &s.oracle_suite {
        for o in &r.results {
            println!("{} {}", if o.passed { "PASS" } else { "FAIL" }, o.name);
        }
    }
    println!("wrote {}", out.join("summary.json").display());
}

fn run(args: &RunArgs) -> Result<(), String> {
    if let Some(ck) = &args.resume {
        let opts = ResumeOptions {
            mode: args.mode,
            max_ticks: args.max_ticks,
            run_to_end: args.max_ticks.is_none(),
            out_dir: args.out.clone(),
            mnist_dir: args.mnist_dir.clone(),
        };
        let t = resume(ck, &opts).map_err(|e| e.to_string())?;
        print_trial(&t);
        return Ok(());
    }
    let cfg = build_config(args)?;
    let summary = run_experiment(&cfg).map_err(|e| e.to_string())?;
    print_summary(&summary, &cfg.output_dir);
    match &summary.oracle_suite {
        Some(r) if !r.all_passed() => Err("oracle suite failed".into()),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Config(args) => build_config(args).and_then(|c| {
            serde_json::to_string_pretty(&c)
                .map(|s| println!("{s}"))
                .map_err(|e| e.to_string())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
