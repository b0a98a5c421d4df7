//! `qfea`: batch toolkit for quefrency-domain replay/spoofing analysis.
//!
//! Every subcommand records a manifest next to its outputs; `qfea replay`
//! re-runs a manifest and reproduces the outputs byte-for-byte.

mod chain;
mod commands;
mod manifest;

use clap::{Parser, Subcommand};

use qfea::Error;

use commands::{analyze, eval, extract, fuse, replay, score, synth, train};

#[derive(Parser)]
#[command(
    name = "qfea",
    version,
    about = "Quefrency-domain feature extraction and replay-attack analysis",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for per-trial parallel work (0 = all cores).
    /// Defaults to the QFEA_JOBS environment variable if set.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic replay corpus (WAVs + protocol).
    Synth {
        #[command(flatten)]
        params: synth::SynthParams,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Extract one feature file per protocol trial.
    Extract {
        #[command(flatten)]
        params: extract::ExtractParams,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Train the two-class mixture back-end from extracted features.
    Train {
        #[command(flatten)]
        params: train::TrainParams,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Score protocol trials with a trained model pair.
    Score {
        #[command(flatten)]
        params: score::ScoreParams,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Fuse score files by normalized weighted averaging.
    Fuse {
        #[command(flatten)]
        params: fuse::FuseParams,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Evaluate a score file: EER and optionally min t-DCF.
    Eval {
        #[command(flatten)]
        params: eval::EvalParams,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Report rahmonic peaks (and optionally dump grids) for one WAV.
    Analyze {
        #[command(flatten)]
        params: analyze::AnalyzeParams,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Re-run a recorded manifest; outputs are reproduced byte-for-byte.
    Replay {
        #[command(flatten)]
        params: replay::ReplayParams,
    },
}

/// Resolve --jobs / QFEA_JOBS and size the global worker pool. 0 (or an
/// unset value) keeps the default of one worker per core.
fn configure_jobs(jobs: Option<usize>) -> Result<(), Error> {
    let jobs = match jobs {
        Some(n) => n,
        None => match std::env::var("QFEA_JOBS") {
            Ok(text) => text.parse::<usize>().map_err(|_| {
                Error::Config(format!("QFEA_JOBS must be a non-negative integer, got {text:?}"))
            })?,
            Err(_) => 0,
        },
    };
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size worker pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_jobs(cli.jobs)?;
    match cli.command {
        Command::Synth { params, force } => synth::run(&params, force),
        Command::Extract { params, force } => extract::run(&params, force),
        Command::Train { params, force } => train::run(&params, force),
        Command::Score { params, force } => score::run(&params, force),
        Command::Fuse { params, force } => fuse::run(&params, force),
        Command::Eval { params, force } => eval::run(&params, force),
        Command::Analyze { params, force } => analyze::run(&params, force),
        Command::Replay { params } => replay::run(&params),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::Parse { .. } => 2,
                _ => 1,
            };
            std::process::exit(code);
        }
    }
}
