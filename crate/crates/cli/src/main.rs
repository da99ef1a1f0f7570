use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod svg;

#[derive(Parser)]
#[command(name = "gemeit", version, about = "Fractional Fourier transforms in a GEM/EIT atomic memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol and write the field dumps and metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// `section.key=value`, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Run the configured sweep, skipping rows already in the output table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Result table path; defaults to `<output.directory>/sweep.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Align storage and calibrate the controls; prints the calibrated protocol section.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Apply the analytic fractional Fourier transform to a signal dump.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        output: PathBuf,
        /// Time scale of the dimensionless coordinate (μs).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Centre of both coordinates; defaults to the grid midpoint.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, sets } => commands::simulate(&config, &sets),
        Command::Sweep { config, sets, out } => commands::sweep(&config, &sets, out.as_deref()),
        Command::Calibrate { config, sets } => commands::calibrate(&config, &sets),
        Command::Oracle { input, alpha, output, scale, center } => {
            commands::oracle(&input, alpha, &output, scale, center)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
