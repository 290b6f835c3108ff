//! `handuse` — batch pipeline for egocentric hand-use measures.
//!
//! Subcommands mirror the pipeline stages: `profile` builds per-hand
//! interaction profiles from detection streams, `measures` turns profiles
//! into the outcome-measure table, `evaluate` compares detection algorithms
//! against frame annotations, `correlate` assembles the clinical-score
//! correlation report, and `synth` generates seeded synthetic cohorts.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O and similar), 2 invalid
//! input or configuration.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use handuse::classify::{Method, PoolingConfig, TiePolicy};
use handuse::report::EmitFormat;

#[derive(Parser)]
#[command(
    name = "handuse",
    version,
    about = "Hand-use outcome measures from egocentric hand-detection records"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build per-hand interaction profiles from detection streams.
    Profile(ProfileArgs),
    /// Compute the Perc/Dur/Num measures table.
    Measures(MeasuresArgs),
    /// Compare detection methods against frame-level annotations.
    Evaluate(EvaluateArgs),
    /// Correlate measures with clinical scores and compare hands.
    Correlate(CorrelateArgs),
    /// Generate a seeded synthetic cohort with known ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliMethod {
    StateFrame,
    StatePool,
    Ann,
    AnnPool,
}

impl From<CliMethod> for Method {
    fn from(m: CliMethod) -> Method {
        match m {
            CliMethod::StateFrame => Method::StateFrame,
            CliMethod::StatePool => Method::StatePool,
            CliMethod::Ann => Method::Neural,
            CliMethod::AnnPool => Method::NeuralPool,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliTiePolicy {
    ZeroOnTie,
    OneOnTie,
}

impl From<CliTiePolicy> for TiePolicy {
    fn from(t: CliTiePolicy) -> TiePolicy {
        match t {
            CliTiePolicy::ZeroOnTie => TiePolicy::ZeroOnTie,
            CliTiePolicy::OneOnTie => TiePolicy::OneOnTie,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliFormat {
    Csv,
    JsonLines,
    HeatmapData,
}

impl From<CliFormat> for EmitFormat {
    fn from(f: CliFormat) -> EmitFormat {
        match f {
            CliFormat::Csv => EmitFormat::Csv,
            CliFormat::JsonLines => EmitFormat::JsonLines,
            CliFormat::HeatmapData => EmitFormat::HeatmapData,
        }
    }
}

/// Classifier options shared by `profile` and `measures`.
#[derive(Args, Debug)]
struct ClassifierArgs {
    /// Detection method.
    #[arg(long, value_enum, default_value = "state-pool")]
    method: CliMethod,
    /// Model checkpoint (required for the ann methods).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Temporal pooling window in frames.
    #[arg(long, default_value_t = 30)]
    window: usize,
    /// What a pooled block becomes on an exact tie.
    #[arg(long, value_enum, default_value = "zero-on-tie")]
    tie_policy: CliTiePolicy,
}

impl ClassifierArgs {
    fn pooling(&self) -> PoolingConfig {
        PoolingConfig {
            window: self.window,
            tie_policy: self.tie_policy.into(),
        }
    }
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Directory of per-session detection files (`<participant>_<session>.det`).
    #[arg(long)]
    detections: PathBuf,
    /// Directory of session manifests (*.manifest).
    #[arg(long)]
    manifests: PathBuf,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Output directory for run-length profile files.
    #[arg(long)]
    out: PathBuf,
    /// Recompute everything and omit cache keys from the output headers.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args, Debug)]
struct MeasuresArgs {
    /// Directory of precomputed run-length profiles (staged mode).
    #[arg(long, conflicts_with_all = ["detections", "manifests"])]
    profiles: Option<PathBuf>,
    /// Detection directory (one-shot mode, with --manifests).
    #[arg(long, requires = "manifests")]
    detections: Option<PathBuf>,
    /// Manifest directory (one-shot mode, with --detections).
    #[arg(long, requires = "detections")]
    manifests: Option<PathBuf>,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Participant dominance CSV.
    #[arg(long)]
    participants: PathBuf,
    /// Output directory (measures.csv is written here).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    manifests: PathBuf,
    /// Frame-level annotation CSV.
    #[arg(long)]
    annotations: PathBuf,
    /// Methods to compare (repeatable).
    #[arg(long = "method", value_enum, default_values_t = [CliMethod::StateFrame, CliMethod::StatePool])]
    methods: Vec<CliMethod>,
    #[arg(long, default_value_t = 30)]
    window: usize,
    #[arg(long, value_enum, default_value = "zero-on-tie")]
    tie_policy: CliTiePolicy,
    /// Seed for neural training.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    /// Significance level for the omnibus test and post-hoc comparisons.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Write per-fold model checkpoints here.
    #[arg(long)]
    save_models: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    /// measures.csv from the measures stage.
    #[arg(long)]
    measures: PathBuf,
    /// Clinical scores CSV.
    #[arg(long)]
    clinical: PathBuf,
    /// Output encoding for the correlation matrices.
    #[arg(long, value_enum, default_value = "heatmap-data")]
    format: CliFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    participants: usize,
    #[arg(long, default_value_t = 1)]
    sessions: usize,
    #[arg(long, default_value_t = 2.0)]
    minutes: f64,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Probability of flipping each annotation label.
    #[arg(long, default_value_t = 0.0)]
    label_noise: f64,
    /// Uniform jitter amplitude on clinical scores.
    #[arg(long, default_value_t = 0.0)]
    clinical_noise: f64,
    /// Probability of blanking selected clinical fields.
    #[arg(long, default_value_t = 0.0)]
    missing_rate: f64,
    #[arg(long, default_value_t = 0.35)]
    perc_min: f64,
    #[arg(long, default_value_t = 0.8)]
    perc_max: f64,
    #[arg(long, default_value_t = 0.12)]
    perc_gap: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Profile(args) => commands::profile::run(args),
        Command::Measures(args) => commands::measures::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Correlate(args) => commands::correlate::run(args),
        Command::Synth(args) => commands::synth::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_input_error() { 2 } else { 1 })
        }
    }
}
