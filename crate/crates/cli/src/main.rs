use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conelab_cli::config::ExperimentConfig;
use conelab_cli::run::{cmd_blowup, cmd_diagnose, cmd_minimize, cmd_spectrum, FieldSource, Output};
use conelab_cli::verify::cmd_verify;
use conelab_cli::CliError;

#[derive(Parser)]
#[command(name = "conelab", version, about = "Harmonic maps into the nematic cone: experiments and acceptance suite")]
struct Cli {
    /// TOML configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for randomized checks, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the energy and write the field and energy log.
    Minimize,
    /// Monotonicity diagnostics with audits and plots.
    Diagnose {
        /// Read the field from a CSV written by `minimize`.
        #[arg(long, conflicts_with = "exact_profile")]
        field: Option<PathBuf>,
        /// Use the exact homogeneous profile instead of a minimizer.
        #[arg(long)]
        exact_profile: bool,
    },
    /// Spectrum of the circle operator with the kernel report.
    Spectrum,
    /// Tangent-map fit and decay regression on a minimizer.
    Blowup,
    /// Run the acceptance suite.
    Verify,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("LAB_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| CliError::Config(format!("LAB_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Config("LAB_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    let out = Output::new(&cfg.output_dir, cli.quiet, &cfg)?;
    match cli.command {
        Command::Minimize => cmd_minimize(&cfg, &out).map(|_| ()),
        Command::Diagnose { field, exact_profile } => {
            let source = match (field, exact_profile) {
                (Some(p), _) => FieldSource::File(p),
                (None, true) => FieldSource::ExactProfile,
                (None, false) => FieldSource::Minimize,
            };
            cmd_diagnose(&cfg, &out, &source).map(|_| ())
        }
        Command::Spectrum => cmd_spectrum(&cfg, &out).map(|_| ()),
        Command::Blowup => cmd_blowup(&cfg, &out).map(|_| ()),
        Command::Verify => cmd_verify(&cfg, &out).map(|_| ()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
