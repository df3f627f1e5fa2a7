use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use grating_cli::{cmd_diagnose, cmd_solve, cmd_sweep, cmd_validate, init_threads, SweepParam, EXIT_INVALID};
use grating_core::oracle::Level;

/// TM scattering by periodic anisotropic gratings via the volume integral equation.
#[derive(Parser)]
#[command(name = "grating", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write efficiencies, residuals and energy balance.
    Solve {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the solve over a range of k or θ (degrees); writes one long-format CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: Param,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the coercivity conditions and write the report.
    Diagnose {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle gate suite.
    Validate {
        #[arg(long, value_enum, default_value = "quick")]
        level: LevelArg,
        /// Directory for `validate.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    K,
    Theta,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INVALID as u8);
    }
    let code = match cli.command {
        Command::Solve { config, out } => cmd_solve(&config, out.as_deref()),
        Command::Sweep { config, param, from, to, steps, out } => {
            let p = match param {
                Param::K => SweepParam::K,
                Param::Theta => SweepParam::Theta,
            };
            cmd_sweep(&config, p, from, to, steps, out.as_deref())
        }
        Command::Diagnose { config, out } => cmd_diagnose(&config, out.as_deref()),
        Command::Validate { level, out } => {
            let l = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            cmd_validate(l, out.as_deref())
        }
    };
    ExitCode::from(code as u8)
}
