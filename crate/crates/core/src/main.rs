use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfgdsc::cli::{self, Command, Overrides};

/// Altitude control of dense drone small cells by a mean-field game.
#[derive(Parser)]
#[command(name = "mfgdsc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the coupled HJB/FPK system and write the fields.
    Solve(Common),
    /// Simulate seeded agents under the configured policies.
    Simulate(Common),
    /// Summarise simulation output into summary.csv.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Run manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (overrides run.output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulation seed (overrides sim.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Compare(a) => (Command::Compare, a),
    };
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
    };
    let code = cli::run(command, &args.manifest, &overrides, args.quiet);
    ExitCode::from(code as u8)
}
