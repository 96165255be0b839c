//! `fiedler`: dataset generation, training, evaluation, size sweeps, the
//! distributed simulation demo and gradient checking.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fiedler_core::ReadoutMode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "fiedler", version, about = "Learned algebraic connectivity estimation", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a labeled dataset of random connected graphs.
    #[command(args_override_self = true)]
    GenData(GenDataArgs),
    /// Train a model and write checkpoints plus a per-epoch metrics CSV.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Evaluate a checkpoint on fresh graphs of several sizes.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Run a local-readout checkpoint as independent message-passing agents.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Compare analytic gradients with central finite differences.
    #[command(args_override_self = true)]
    Gradcheck(GradcheckArgs),
}

/// Shared by every command; only used to pre-expand config files.
#[derive(Args, Debug, Clone)]
pub struct ConfigArg {
    /// key=value file of flag defaults (command-line flags override it).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GenDataArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 9)]
    pub n_min: usize,
    #[arg(long, default_value_t = 11)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0.2)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.6)]
    pub p_max: f64,
    #[arg(long, env = "FIEDLER_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[arg(long)]
    pub train_data: PathBuf,
    #[arg(long)]
    pub val_data: PathBuf,
    /// Message rounds.
    #[arg(long = "T", default_value_t = 4)]
    pub rounds: usize,
    #[arg(long, default_value_t = ReadoutMode::Local)]
    pub mode: ReadoutMode,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub adam_eps: f64,
    #[arg(long, env = "FIEDLER_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Directory for checkpoints, metrics.csv and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Record wall_time_s as 0 so metrics.csv is reproducible byte for byte.
    #[arg(long)]
    pub no_wall_time: bool,
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Expected readout mode; must match the checkpoint.
    #[arg(long)]
    pub mode: Option<ReadoutMode>,
    /// Expected hidden size; must match the checkpoint.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Message rounds (defaults to the training value).
    #[arg(long = "T")]
    pub rounds: Option<usize>,
    /// Optional CSV output `mean_l1,mean_l2,count`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Sizes as `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "7..13")]
    pub sizes: String,
    #[arg(long, default_value_t = 1000)]
    pub per_size: usize,
    #[arg(long, default_value_t = 0.2)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.6)]
    pub p_max: f64,
    #[arg(long, env = "FIEDLER_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "T")]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Node count of the random demo graph.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, env = "FIEDLER_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Draw index within the seeded graph stream.
    #[arg(long, default_value_t = 0)]
    pub graph_index: u64,
    #[arg(long, default_value_t = 0.2)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.6)]
    pub p_max: f64,
    #[arg(long = "T")]
    pub rounds: Option<usize>,
    /// Edges that stop delivering, e.g. `0-1,2-5`.
    #[arg(long)]
    pub drop_edges: Option<String>,
    /// First round (1-based) in which dropped edges are silent.
    #[arg(long, default_value_t = 1)]
    pub drop_from_round: usize,
    /// Per-message trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Report CSV `node,estimate,abs_error`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct GradcheckArgs {
    #[arg(long, env = "FIEDLER_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Instances per readout mode.
    #[arg(long, default_value_t = 5)]
    pub instances: usize,
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
    /// Add 1 to one analytic gradient entry (checks that the checker fails).
    #[arg(long)]
    pub corrupt: bool,
    #[command(flatten)]
    pub config: ConfigArg,
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let argv = config::expand_config_args(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.render().to_string()));
        }
    };
    match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let prefix = match e {
                CliError::Usage(_) => "usage error",
                CliError::Runtime(_) => "error",
            };
            eprintln!("{prefix}: {}", e.to_string().trim_end());
            ExitCode::from(e.exit_code())
        }
    }
}
