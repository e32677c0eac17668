//! `splatprune`: inspect, prune, render and score Gaussian-splat checkpoints.
//!
//! Exit codes: 0 ok, 2 input or format error, 3 configuration or selection
//! error, 4 capacity error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use splatprune::Error;

use config::Settings;

#[derive(Debug, Parser)]
#[command(name = "splatprune", version, about = "Spectral pruning for Gaussian-splat checkpoints")]
struct Cli {
    /// `key = value` file supplying defaults for any long flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    settings: Settings,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print count, SH degree, bounding box and byte size of a checkpoint
    Inspect {
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Prune a checkpoint, or a sequence of snapshots in continuous mode
    Prune {
        /// One checkpoint, or the ordered snapshots for --mode continuous
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render a checkpoint to PNG, plus an optional raw float dump
    Render {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write the unquantized image here as well
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// PSNR and SSIM of a candidate image against a reference
    Eval {
        reference: PathBuf,
        candidate: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic plane-plus-cluster checkpoint
    Synth {
        #[arg(long, default_value_t = 18_000)]
        plane: usize,
        #[arg(long, default_value_t = 2_000)]
        cluster: usize,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write a held-out camera looking at the cluster
        #[arg(long)]
        camera_out: Option<PathBuf>,
        /// Write per-primitive region labels as JSON
        #[arg(long)]
        regions_out: Option<PathBuf>,
    },
    /// Build the primitive graph and dump it as a binary edge list
    Graph {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// A failed run: message for stderr plus the exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. }
            | Error::Truncated { .. }
            | Error::Format(_)
            | Error::MissingProperty(_)
            | Error::UnsupportedEncoding(_)
            | Error::Shape { .. }
            | Error::Degenerate(_) => 2,
            Error::Config(_) | Error::EmptySelection { .. } | Error::OutOfBounds { .. } => 3,
            Error::Capacity { .. } => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    let settings = cli.settings.over(file);
    let threads = match settings.threads {
        Some(0) => return Err(Failure::config("threads must be at least 1")),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    let ctx = commands::Context {
        settings,
        threads,
        config_file: cli.config,
    };

    match cli.command {
        Command::Inspect { input, report } => commands::inspect(&input, report.as_deref()),
        Command::Prune { inputs, output, report } => commands::prune(&ctx, &inputs, &output, report.as_deref()),
        Command::Render { input, output, raw } => commands::render(&ctx, &input, &output, raw.as_deref()),
        Command::Eval { reference, candidate, report } => commands::eval(&reference, &candidate, report.as_deref()),
        Command::Synth {
            plane,
            cluster,
            output,
            camera_out,
            regions_out,
        } => commands::synth(&ctx, plane, cluster, &output, camera_out.as_deref(), regions_out.as_deref()),
        Command::Graph { input, output, report } => commands::graph(&ctx, &input, &output, report.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version are not errors; bad flags are configuration errors.
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("splatprune: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
