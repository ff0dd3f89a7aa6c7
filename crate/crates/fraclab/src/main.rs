use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fraclab::cli::{self, Command};

#[derive(Parser)]
#[command(
    name = "fraclab",
    version,
    about = "Radial fractional-Laplacian laboratory: geometry checks, scaling \
             lemmas, weight-bound certification, and blow-up simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and CSVs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the geometric assumptions of the configured model.
    CheckManifold(RunArgs),
    /// Run the comparison and integral-scaling battery.
    VerifyLemmas(RunArgs),
    /// Certify the t-uniform fractional bound on the weight field.
    VerifyWeight(RunArgs),
    /// Evolve the equation and analyze blow-up.
    Simulate(RunArgs),
    /// Closed-form lifespan bound vs the comparison-ODE oracle.
    Lifespan(RunArgs),
    /// Cartesian parameter sweep of simulations.
    Sweep(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        Cmd::CheckManifold(a) => (Command::CheckManifold, a),
        Cmd::VerifyLemmas(a) => (Command::VerifyLemmas, a),
        Cmd::VerifyWeight(a) => (Command::VerifyWeight, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Lifespan(a) => (Command::Lifespan, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };
    ExitCode::from(cli::run_command(cmd, &args.config, &args.out) as u8)
}
