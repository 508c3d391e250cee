use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracsep_cli::run::{run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "fracsep", version, about = "Phase separation energies in fractured elastic materials")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the solver's initial jitter (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Check admissibility of the potentials and print α_surf, α_frac.
    Check,
    /// Run a Γ-convergence sweep of recovery states and write sweep.csv.
    Sweep,
    /// Minimize the diffuse energy by alternating descent.
    Minimize,
    /// Build and dump the recovery state of the configured geometry.
    Recover,
    /// Print the sharp energy of the configured geometry.
    Sharp,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Check => Command::Check,
        Cmd::Sweep => Command::Sweep,
        Cmd::Minimize => Command::Minimize,
        Cmd::Recover => Command::Recover,
        Cmd::Sharp => Command::Sharp,
    };
    let opts = RunOptions {
        command,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match run(&opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracsep {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
