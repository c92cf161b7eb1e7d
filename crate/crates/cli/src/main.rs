use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Friction identification and compensation for a BLDC drive.
#[derive(Debug, Parser)]
#[command(name = "frictionid", version)]
struct Cli {
    /// run configuration (TOML); built-in defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    Lugre,
    Sindyc,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompensatorChoice {
    None,
    Lugre,
    Sindyc,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceChoice {
    Config,
    Sine,
    Step,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate excitation signals into `data/<id>.csv`
    Simulate {
        /// a, b, c, d or all
        #[arg(long, default_value = "all")]
        signal: String,
    },
    /// Extract the hidden deformation state from a dataset's velocity
    Extract {
        #[arg(long, default_value = "a", conflicts_with = "dataset")]
        signal: String,
        /// dataset CSV instead of a simulated signal
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Fit one of the three models
    Fit {
        #[arg(long, value_enum)]
        mode: FitMode,
        #[arg(long)]
        min_fit_drop: Option<f64>,
        /// library coefficient of the tanh terms
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        lasso_alpha: Option<f64>,
    },
    /// Free-run evaluation of fitted models on the simulated signals
    Evaluate {
        /// comma-separated subset of lugre, sindyc, linear; default all fitted
        #[arg(long)]
        models: Option<String>,
        /// comma-separated signal ids
        #[arg(long, default_value = "a,b,c,d")]
        signals: String,
    },
    /// Closed-loop tracking with and without friction compensation
    Compensate {
        #[arg(long, value_enum, default_value = "all")]
        compensator: CompensatorChoice,
        #[arg(long)]
        lambda: Option<f64>,
        /// `kp,ki`
        #[arg(long)]
        gains: Option<String>,
        #[arg(long, value_enum, default_value = "config")]
        reference: ReferenceChoice,
    },
    /// Recompute every recorded output in a scratch directory and compare
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.config.as_deref(), cli.seed, cli.out, &cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
