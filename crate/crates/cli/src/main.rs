use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graphevolve_cli::{cmd_check, cmd_nonlocal_check, cmd_simulate, cmd_transform, load, RunContext};

/// Well-posedness checks and time stepping for wave and heat equations on metric graphs.
#[derive(Parser)]
#[command(name = "graphevolve", version)]
struct Cli {
    /// Directory for output files (default: `sim.output`, else the working directory).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide well-posedness and write check_report.json.
    Check { config: PathBuf },
    /// Check, then run the configured wave or heat simulation.
    Simulate { config: PathBuf },
    /// Tabulate travel-time maps and endpoint speeds per edge.
    Transform { config: PathBuf },
    /// Young-type bound for integral conditions on one interval.
    NonlocalCheck {
        config: PathBuf,
        /// Halve t0 until the bound certifies (down to 1/1024).
        #[arg(long)]
        auto_shrink_t0: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = RunContext { output_dir: cli.output_dir, quiet: cli.quiet };
    let result = match &cli.command {
        Command::Check { config } => load(config).and_then(|c| cmd_check(&ctx, &c)),
        Command::Simulate { config } => load(config).and_then(|c| cmd_simulate(&ctx, &c)),
        Command::Transform { config } => load(config).and_then(|c| cmd_transform(&ctx, &c)),
        Command::NonlocalCheck { config, auto_shrink_t0 } => {
            load(config).and_then(|c| cmd_nonlocal_check(&ctx, &c, *auto_shrink_t0))
        }
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
