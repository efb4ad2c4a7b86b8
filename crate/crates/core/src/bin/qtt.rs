//! Command line front end: runs JSON-configured experiments and offline
//! analysis, writing artifacts to an output directory.
//!
//! On success the run summary is printed to stdout. On failure a one-line
//! machine-readable error document is printed to stderr and the process
//! exits nonzero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qtt_core::config::{ExperimentConfig, ExperimentKind};
use qtt_core::runner::{analyze_file, init_thread_pool, run_bookkeeping, run_experiment, RunOutput};
use qtt_core::Error;

#[derive(Parser)]
#[command(
    name = "qtt",
    version,
    about = "Monte-Carlo simulator and analysis toolkit for a cavity-enhanced \
             entangled photon pair source"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the pulse count (pulse pairs for interference runs).
    #[arg(long)]
    pulses: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the analysis window (ps): the full peak-integration width
    /// for correlation runs, the coincidence filter half-width for
    /// interference runs.
    #[arg(long)]
    window_ps: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Time-tag file to analyze.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Full width (ps) of the peak-integration window.
    #[arg(long)]
    window_ps: Option<u64>,
    /// Histogram bin width (ps).
    #[arg(long)]
    bin_width_ps: Option<u64>,
    /// Histogram reach (ps).
    #[arg(long)]
    max_delay_ps: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment a config file describes.
    Simulate(RunArgs),
    /// Histogram and estimate from an existing time-tag file.
    Analyze(AnalyzeArgs),
    /// Two-photon interference run (config kind "hom").
    Hom(RunArgs),
    /// Source calibration run (config kind "calibrate").
    Calibrate(RunArgs),
    /// Cavity mode placement and tolerance report (config kind "design").
    Design(RunArgs),
    /// Closed-form photon budget of a configuration.
    Bookkeeping {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_with_overrides(args: &RunArgs, expect: Option<ExperimentKind>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(expected) = expect {
        if cfg.kind != expected {
            return Err(Error::Config(format!(
                "{}: config kind {} does not match the subcommand (expected {})",
                args.config.display(),
                serde_json::to_string(&cfg.kind).expect("kind serializes"),
                serde_json::to_string(&expected).expect("kind serializes"),
            )));
        }
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(pulses) = args.pulses {
        cfg.run.n_pulses = pulses;
    }
    if let Some(w) = args.window_ps {
        match cfg.kind {
            ExperimentKind::Hom => cfg.analysis.filter_window_ps = w,
            _ => cfg.analysis.peak_window_ps = w,
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<RunOutput, Error> {
    match cli.cmd {
        Cmd::Simulate(args) => {
            let cfg = load_with_overrides(&args, None)?;
            run_experiment(&cfg, &args.out)
        }
        Cmd::Hom(args) => {
            let cfg = load_with_overrides(&args, Some(ExperimentKind::Hom))?;
            run_experiment(&cfg, &args.out)
        }
        Cmd::Calibrate(args) => {
            let cfg = load_with_overrides(&args, Some(ExperimentKind::Calibrate))?;
            run_experiment(&cfg, &args.out)
        }
        Cmd::Design(args) => {
            let cfg = load_with_overrides(&args, Some(ExperimentKind::Design))?;
            run_experiment(&cfg, &args.out)
        }
        Cmd::Analyze(args) => {
            let mut analysis = qtt_core::config::AnalysisOptions::default();
            if let Some(w) = args.window_ps {
                analysis.peak_window_ps = w;
            }
            if let Some(b) = args.bin_width_ps {
                analysis.bin_width_ps = b;
            }
            if let Some(m) = args.max_delay_ps {
                analysis.max_delay_ps = m;
            }
            analyze_file(&args.input, &analysis, &args.out)
        }
        Cmd::Bookkeeping { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            run_bookkeeping(&cfg, &out)
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::NoSolution(_) => "no_solution",
        Error::EstimatorInput(_) => "estimator_input",
        Error::Format { .. } => "format",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&output.summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            let mut doc = json!({ "error": { "kind": error_kind(&e), "message": e.to_string() } });
            if let Error::Format { offset, .. } = &e {
                doc["error"]["offset"] = json!(offset);
            }
            eprintln!("{doc}");
            ExitCode::FAILURE
        }
    }
}
