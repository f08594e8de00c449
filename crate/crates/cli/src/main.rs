//! `holo`: transforms, training, evaluation and generation for holographic
//! autoencoders.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "holo", version, about = "Rotation-equivariant autoencoders for 3D data")]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TransformMode {
    Zft,
    Sft,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Point clouds (zft) or spherical grids (sft) to a tensor dataset.
    Transform {
        #[arg(long, value_enum)]
        mode: TransformMode,
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model; writes best/last checkpoints and the epoch history.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Reconstruction, latent-space and (optionally) equivariance metrics.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// `id,label` CSV; required for classification and clustering.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Fail unless labels are available.
        #[arg(long)]
        classify: bool,
        #[arg(long)]
        audit: bool,
        #[arg(long, default_value_t = 50)]
        audit_trials: usize,
        #[arg(long, default_value_t = 1e-5)]
        audit_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode latents drawn from the prior (variational models only).
    Sample {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(short = 'n', long = "n")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also rasterise samples on a spherical grid of this bandwidth.
        #[arg(long)]
        sft_bw: Option<usize>,
        /// Also rasterise densities on an `N^3` grid (needs --zft-config).
        #[arg(long)]
        zft_grid: Option<usize>,
        #[arg(long)]
        zft_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a linear path between two embedded samples.
    Interpolate {
        #[arg(long)]
        ckpt: PathBuf,
        /// Dataset holding the endpoints.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a model config and print its parameter count.
    Params {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a labelled synthetic point-cloud corpus.
    Synth {
        #[arg(short = 'n', long = "n", default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let q = cli.quiet;
    let res = match cli.command {
        Command::Transform { mode, config, input, out } => commands::transform(mode, &config, &input, &out),
        Command::Train { config, train, val, out, resume } => {
            commands::train(&config, &train, &val, &out, resume.as_deref(), q)
        }
        Command::Evaluate { ckpt, data, labels, classify, audit, audit_trials, audit_tol, seed, out } => {
            let audit = audit.then_some((audit_trials, audit_tol));
            commands::evaluate(&ckpt, &data, labels.as_deref(), classify, audit, seed, &out)
        }
        Command::Sample { ckpt, n, seed, sft_bw, zft_grid, zft_config, out } => {
            commands::sample(&ckpt, n, seed, sft_bw, zft_grid, zft_config.as_deref(), &out)
        }
        Command::Interpolate { ckpt, data, a, b, steps, out } => commands::interpolate(&ckpt, &data, &a, &b, steps, &out),
        Command::Params { config } => commands::params(&config),
        Command::Synth { n, seed, r_max, out } => commands::synth(n, seed, r_max, &out),
    };
    match res {
        Ok(()) => ExitCode::from(error::exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
