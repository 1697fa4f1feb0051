//! The `mmearly` command line: `generate`, `train`, `sweep` and `report`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags or a
//! config file that does not parse).

mod commands;
mod manifest;
mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

pub use manifest::RunManifest;
pub use svg::{frontier_svg, histogram_svg};

use crate::eval::Method;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mmearly",
    version,
    about = "Early classification of multimodal sequences"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with generator or training settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Sweep worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Paired,
    StructuredArrival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Cis,
    Larm,
}

impl From<Objective> for Method {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Cis => Method::Cis,
            Objective::Larm => Method::Larm,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as JSON Lines.
    Generate {
        #[arg(long, value_enum)]
        task: Task,
        /// Number of sequences (overrides the config file).
        #[arg(long)]
        n: Option<usize>,
        /// Output path; defaults to `<out-dir>/<task>.jsonl`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train one model.
    Train(TrainArgs),
    /// Train one model per (mu, trial) cell.
    Sweep {
        #[command(flatten)]
        train: TrainArgs,
        /// Comma-separated mu values.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1])]
        mu_list: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Frontiers, AUC summary and optional rollout statistics.
    Report {
        /// Points CSVs named `<method>_points.csv` (or any stem starting with `cis` or `larm`).
        #[arg(long, num_args = 1.., required = true)]
        points: Vec<PathBuf>,
        /// Sequence length used to normalize time; inferred from --data when absent.
        #[arg(long)]
        t_end: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        chance: f64,
        /// Dataset for rollout histograms and flow tables.
        #[arg(long)]
        data: Option<PathBuf>,
        /// `method=checkpoint` pairs to roll out on --data.
        #[arg(long = "rollout", value_parser = parse_rollout)]
        rollouts: Vec<(Method, PathBuf)>,
        /// Also write SVG plots.
        #[arg(long)]
        svg: bool,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON Lines dataset.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub objective: Option<Objective>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Fraction of the dataset held out for validation.
    #[arg(long, default_value_t = 0.1)]
    pub holdout: f64,
}

fn parse_rollout(s: &str) -> Result<(Method, PathBuf), String> {
    let (m, p) = s
        .split_once('=')
        .ok_or_else(|| format!("expected method=checkpoint, got `{s}`"))?;
    Ok((
        m.parse().map_err(|e: crate::Error| e.to_string())?,
        PathBuf::from(p),
    ))
}

/// Failure classes, mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            if e.kind() != clap::error::ErrorKind::MissingSubcommand {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return EXIT_USAGE;
        }
    };
    match commands::execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
