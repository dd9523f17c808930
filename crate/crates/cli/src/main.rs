//! `mclnn`: mask inspection, synthetic data, training and cross-validation.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal invariant failure. The environment variable `MCLNN_SEED`
//! overrides the config seed; an explicit `--seed` flag beats both.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use mclnn_core::error::Error;

#[derive(Parser)]
#[command(name = "mclnn", version, about = "Masked conditional neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a banded binary mask as a grid of 0/1 characters
    MaskDump {
        /// Feature vector length (mask rows)
        #[arg(long)]
        l: usize,
        /// Hidden layer width (mask columns)
        #[arg(long)]
        e: usize,
        /// Bandwidth: consecutive ones per band
        #[arg(long)]
        bw: usize,
        /// Overlap between successive bands; negative inserts gaps
        #[arg(long, allow_negative_numbers = true)]
        ov: i64,
    },
    /// Generate a synthetic band-limited-noise dataset with a 5-fold manifest
    Synth {
        /// Number of classes
        #[arg(long, default_value_t = 3)]
        classes: usize,
        /// Total clips, split evenly over the classes
        #[arg(long, default_value_t = 30)]
        clips: usize,
        /// Feature bins per frame
        #[arg(long, default_value_t = 16)]
        l: usize,
        /// Frames per clip
        #[arg(long, default_value_t = 40)]
        frames: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for feature files and manifest.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on a single train/val/test fold split
    Train {
        /// Experiment config JSON
        #[arg(long)]
        config: PathBuf,
        /// Output directory for model.mclnn, metrics.csv and config.json
        #[arg(long)]
        out: PathBuf,
        /// Seed override (beats MCLNN_SEED and the config value)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-validate over the manifest folds and write a results JSON
    Evaluate {
        /// Experiment config JSON
        #[arg(long)]
        config: PathBuf,
        /// Expected fold count
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Results JSON path
        #[arg(long, default_value = "results.json")]
        out: PathBuf,
        /// Seed override (beats MCLNN_SEED and the config value)
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("MCLNN_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("MCLNN_SEED must be an unsigned integer, got '{v}'")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("MCLNN_SEED: {e}")),
    }
}

fn error_exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidMask(_) => 1,
        Error::ShapeMismatch { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let env = match env_seed() {
        Ok(env) => env,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };

    let result = match cli.command {
        Command::MaskDump { l, e, bw, ov } => commands::cmd_mask_dump(l, e, bw, ov),
        Command::Synth {
            classes,
            clips,
            l,
            frames,
            seed,
            out,
        } => commands::cmd_synth(classes, clips, l, frames, seed.or(env).unwrap_or(0), &out),
        Command::Train { config, out, seed } => {
            commands::cmd_train(&config, &out, seed.or(env))
        }
        Command::Evaluate {
            config,
            folds,
            out,
            seed,
        } => commands::cmd_evaluate(&config, folds, &out, seed.or(env)),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(error_exit_code(&err))
        }
    }
}
