//! `bpcodes` command-line tool.
//!
//! Exit codes: 0 success, 2 input or parse error, 3 dimension or rank error,
//! 4 numerical failure, 5 training-batch starvation.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use bpcodes::channel::ChannelFamily;
use bpcodes::decoder::BpVariant;
use bpcodes::eval::EvalMode;
use bpcodes::Error;
use clap::{Args, Parser, Subcommand};

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Parser, Debug)]
#[command(name = "bpcodes", version, about = "Design and evaluate binary codes for belief propagation decoding")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decode LLRs from a file or from simulated transmissions.
    Decode(DecodeArgs),
    /// Monte Carlo BER/FER over a list of SNRs.
    Eval(EvalArgs),
    /// Optimise a parity-check matrix.
    Optimize(OptimizeArgs),
    /// Print density, girth and degree statistics of a code.
    Stats(StatsArgs),
    /// SNR gain of one BER report over another.
    Gain(GainArgs),
    /// Optimise under a grid of hyperparameters and rank the results.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Whitespace or comma separated LLRs, one frame per line.
    #[arg(long, conflicts_with = "simulate", required_unless_present = "simulate")]
    pub llr: Option<PathBuf>,
    /// Decode the all-zero codeword sent through a simulated channel.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value = "awgn")]
    pub channel: ChannelFamily,
    #[arg(long, default_value_t = 4.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub iters: usize,
    #[arg(long, default_value = "sumproduct")]
    pub variant: BpVariant,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long, default_value = "awgn")]
    pub channel: ChannelFamily,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7")]
    pub snrs: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub iters: Vec<usize>,
    #[arg(long, default_value = "sumproduct")]
    pub variant: BpVariant,
    #[arg(long, default_value_t = 100_000)]
    pub min_frames: u64,
    #[arg(long, default_value_t = 50)]
    pub min_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_frames: u64,
    #[arg(long, default_value_t = 10_000)]
    pub batch_frames: u64,
    #[arg(long, default_value = "zero")]
    pub mode: EvalMode,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Initial code file.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub init: Option<PathBuf>,
    /// Random systematic initial code `n,k,p`.
    #[arg(long, value_delimiter = ',')]
    pub random: Option<Vec<f64>>,
    /// Training configuration as JSON; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GainArgs {
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub ours: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub init: PathBuf,
    /// Sweep grid as JSON; missing fields take their defaults.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Base training configuration as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for the learned code of every configuration.
    #[arg(long)]
    pub codes_dir: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::InvalidParams(_)
        | Error::Unsupported(_)
        | Error::NoOverlap => 2,
        Error::DimensionMismatch { .. } | Error::RankDeficient { .. } => 3,
        Error::NumericalFailure(_) | Error::DivisionByZero(_) => 4,
        Error::FilterStarvation { .. } => 5,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Decode(a) => commands::decode(a),
        Command::Eval(a) => commands::eval(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Stats(a) => commands::stats(a),
        Command::Gain(a) => commands::gain(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
