//! `trf`: command-line front end for the temporal-receptive-field study.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/configuration error,
//! 3 numerical failure. Diagnostics go to stderr; results go to stdout
//! or to files under `--out`. `TRF_LOG` (e.g. `TRF_LOG=debug`) controls
//! log verbosity; all other behavior is flag-driven.

mod commands;
mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "trf",
    version,
    about = "Temporal receptive-field calculus, Directional Moving MNIST, and order-sensitivity experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct ArchArgs {
    /// Architecture preset: resnet50-3d or video-bagnet-{1,9,17,33}.
    #[arg(long, conflicts_with = "arch_file")]
    pub arch: Option<String>,
    /// JSON architecture description file ({"preset": ...} with optional
    /// overrides, or {"nodes": [...]} for a custom topology). The file is
    /// authoritative: the preset flags below cannot be combined with it.
    #[arg(long)]
    pub arch_file: Option<PathBuf>,
    /// Channel width multiplier applied to the preset's default width
    /// [default: 1.0].
    #[arg(long, conflicts_with = "arch_file")]
    pub width_multiplier: Option<f64>,
    /// Number of output classes [default: 3].
    #[arg(long, conflicts_with = "arch_file")]
    pub classes: Option<usize>,
    /// Where stage downsampling strides sit: bottleneck-entry or mid-conv.
    /// Defaults to the preset's own convention.
    #[arg(long, conflicts_with = "arch_file")]
    pub downsample_at: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the Directional Moving MNIST splits to disk.
    GenData {
        /// Output directory; receives train/, test_noperm/, test_perm/.
        #[arg(long)]
        out: PathBuf,
        /// Canvas height and width in pixels.
        #[arg(long, default_value_t = 64)]
        canvas: usize,
        /// Sub-action duration in frames (videos are 2d frames long).
        #[arg(long, default_value_t = 64)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        videos_per_class: usize,
        /// Probability that a test_perm video swaps its sub-actions.
        #[arg(long, default_value_t = 0.5)]
        perm_prob: f64,
        /// Master seed for all generation randomness.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// MNIST IDX image file for the train glyph pool. Procedural
        /// glyphs are used when omitted.
        #[arg(long, requires = "mnist_test")]
        mnist_train: Option<PathBuf>,
        /// MNIST IDX image file for the test glyph pool.
        #[arg(long, requires = "mnist_train")]
        mnist_test: Option<PathBuf>,
    },
    /// Per-node shapes and temporal receptive fields for a preset.
    RfReport {
        #[command(flatten)]
        arch: ArchArgs,
        /// Temporal input length in frames.
        #[arg(long, default_value_t = 64)]
        input_frames: usize,
        /// Spatial input extent (square).
        #[arg(long, default_value_t = 64)]
        spatial: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Total trainable parameter count for a preset.
    ParamCount {
        #[command(flatten)]
        arch: ArchArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Single-sub-action window ratio for a two-segment video.
    Sensitivity {
        #[command(flatten)]
        arch: ArchArgs,
        /// Total video length in frames.
        #[arg(long)]
        video_len: usize,
        /// Sub-action duration; the video is split at this frame.
        #[arg(long)]
        segment_len: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Train a model on a generated dataset split.
    Train {
        #[command(flatten)]
        arch: ArchArgs,
        /// Dataset container directory (a gen-data split, e.g. .../train).
        #[arg(long)]
        data: PathBuf,
        /// Run directory for config.json, metrics.csv, best.ckpt, results.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Loss: softmax-ce or sigmoid-bce.
        #[arg(long, default_value = "softmax-ce")]
        loss: String,
        /// Fraction of the training split held out for validation.
        #[arg(long, default_value_t = 0.1)]
        val_fraction: f64,
    },
    /// Evaluate a checkpoint on a dataset split.
    Eval {
        /// Checkpoint written by `train` (best.ckpt).
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset container directory.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Multi-model, multi-duration experiment sweeps.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// The order-sensitivity experiment: train each model, evaluate on
    /// same-order and permuted-order test splits.
    Fig3 {
        /// tiny (desk-scale) or paper (full-scale; very slow).
        #[arg(long, default_value = "tiny")]
        scale: String,
        /// Output directory for results.json/results.csv and run dirs.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, requires = "mnist_test")]
        mnist_train: Option<PathBuf>,
        #[arg(long, requires = "mnist_train")]
        mnist_test: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// Error already classified into the exit-code contract.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
    pub fn data(message: impl std::fmt::Display) -> Self {
        CliError { code: 2, message: message.to_string() }
    }
    pub fn numerical(message: impl std::fmt::Display) -> Self {
        CliError { code: 3, message: message.to_string() }
    }
}

impl From<harness::HarnessError> for CliError {
    fn from(e: harness::HarnessError) -> Self {
        match &e {
            harness::HarnessError::Numerical(_) => CliError::numerical(e),
            _ => CliError::data(e),
        }
    }
}

impl From<arch_graph::ArchError> for CliError {
    fn from(e: arch_graph::ArchError) -> Self {
        CliError::data(e)
    }
}

impl From<dmm_data::DmmError> for CliError {
    fn from(e: dmm_data::DmmError) -> Self {
        CliError::data(e)
    }
}

impl From<order_sensitivity::SensitivityError> for CliError {
    fn from(e: order_sensitivity::SensitivityError) -> Self {
        CliError::data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TRF_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successful exits; everything else is
            // a usage error (exit 1)
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
