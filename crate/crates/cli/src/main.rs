//! mfpart: partition-function multifractal analysis of intraday
//! volatility, from tick ingestion to significance tests, cascade-model
//! fits, and ensemble averages.
//!
//! Exit codes: 0 success, 1 failure or partial batch failure, 2 usage or
//! parameter error. Outputs never embed timestamps or worker counts, so
//! any rerun with the same inputs and seeds is byte-identical.

mod cmd;
mod util;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfpart_core::MfError;

#[derive(Parser)]
#[command(name = "mfpart", version, about = "Multifractal analysis of intraday volatility")]
struct Cli {
    /// Worker threads (0 = all cores); results do not depend on this.
    #[arg(long, global = true, env = "MFPART_JOBS", default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn tick CSV into a 1-minute volatility series
    Ingest(IngestArgs),
    /// Partition function, tau(q), and singularity spectrum
    Analyze(AnalyzeArgs),
    /// Shuffle-bootstrap significance test of multifractality
    Bootstrap(BootstrapArgs),
    /// Fit the binomial-cascade (p-model) tau to an analysis
    Pmodel(PmodelArgs),
    /// Quenched and annealed averages over per-instrument analyses
    Ensemble(EnsembleArgs),
    /// Generate synthetic series with known scaling
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Flatten a result document into plot-ready CSV
    Export(ExportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Tick CSV (optionally gzipped) with instrument, timestamp, price
    #[arg(long)]
    ticks: PathBuf,
    /// `builtin:cn-a-share` or a JSON calendar file
    #[arg(long, default_value = "builtin:cn-a-share")]
    calendar: String,
    /// Fallback instrument id when the CSV lacks the column (default: file stem)
    #[arg(long)]
    instrument: Option<String>,
    /// `.csv` writes text, anything else the binary format; a `.meta.json`
    /// sidecar records parse statistics
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    qmin: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    qmax: f64,
    #[arg(long, default_value_t = 0.2)]
    qstep: f64,
    /// Minimum scales a q<0 fit may use after jump exclusion
    #[arg(long, default_value_t = 5)]
    min_scales: usize,
    /// Increment-jump multiplier for the q<0 scaling-range cut
    #[arg(long, default_value_t = 5.0)]
    jump_threshold: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Volatility file (binary/CSV), tick CSV, or a directory of them
    #[arg(long)]
    vol: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Session calendar applied to tick inputs
    #[arg(long, default_value = "builtin:cn-a-share")]
    calendar: String,
    /// Directory mode: bootstrap replicates per instrument (0 skips the test)
    #[arg(long, default_value_t = 1000)]
    bootstrap_n: usize,
    /// Directory mode: bootstrap significance level
    #[arg(long, default_value_t = 0.01)]
    level: f64,
    /// Directory mode: bootstrap master seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output JSON file, or output directory in directory mode
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BootstrapArgs {
    /// Volatility file (binary/CSV) or tick CSV
    #[arg(long)]
    vol: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Session calendar applied to tick inputs
    #[arg(long, default_value = "builtin:cn-a-share")]
    calendar: String,
    /// Shuffle replicates
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Significance level
    #[arg(long, default_value_t = 0.01)]
    level: f64,
    /// Master seed; replicate k derives its own stream from (seed, k)
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PmodelArgs {
    /// One analysis JSON, or a directory of them for a batch fit
    #[arg(long)]
    tau: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnsembleArgs {
    /// Directory of per-instrument analysis JSON documents
    #[arg(long)]
    analyses: PathBuf,
    /// Fraction of members a (q, s) cell needs to stay defined
    #[arg(long, default_value_t = 0.8)]
    quorum: f64,
    /// Minimum scales a q<0 fit may use after jump exclusion
    #[arg(long, default_value_t = 5)]
    min_scales: usize,
    /// Increment-jump multiplier for the q<0 scaling-range cut
    #[arg(long, default_value_t = 5.0)]
    jump_threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Binomial multiplicative cascade of length 2^depth
    Cascade(SynthCascadeArgs),
    /// i.i.d. log-normal null series
    Lognormal(SynthLognormalArgs),
}

#[derive(Args)]
struct SynthCascadeArgs {
    /// Split weight in (0, 1)
    #[arg(long)]
    p: f64,
    /// Halvings; output length is 2^depth
    #[arg(long)]
    depth: u32,
    #[arg(long, value_enum, default_value_t = SynthMode::Det)]
    mode: SynthMode,
    /// Consumed only by `rand` mode
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `.csv` writes text, anything else the binary volatility format
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthMode {
    /// p always multiplies the left half
    Det,
    /// weight order drawn per node from the seed
    Rand,
}

#[derive(Args)]
struct SynthLognormalArgs {
    #[arg(long)]
    len: usize,
    /// Mean of ln v
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    /// Standard deviation of ln v
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Analysis, ensemble, or batch p-model document
    #[arg(long)]
    doc: PathBuf,
    #[arg(long, value_enum)]
    kind: ExportKind,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    /// chi_q(s)^(1/(q-1)) against s, one column per q != 1
    ChiVsS,
    /// tau against q (both averages for ensemble documents)
    TauVsQ,
    /// the singularity spectrum f(alpha)
    FVsAlpha,
    /// fitted-p occurrence histogram from a batch p-model document
    GpHist,
}

fn main() {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // ignore failure: the pool may already exist under a test harness
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let outcome = match cli.command {
        Command::Ingest(args) => cmd::ingest::run(&args),
        Command::Analyze(args) => cmd::analyze::run(&args),
        Command::Bootstrap(args) => cmd::bootstrap::run(&args),
        Command::Pmodel(args) => cmd::pmodel::run(&args),
        Command::Ensemble(args) => cmd::ensemble::run(&args),
        Command::Synth(args) => cmd::synth::run(&args),
        Command::Export(args) => cmd::export::run(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code(&err));
        }
    }
}

/// Parameter mistakes are usage errors (2); everything else is a runtime
/// failure (1).
fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<MfError>() {
        Some(MfError::InvalidParameter { .. }) => 2,
        _ => 1,
    }
}
