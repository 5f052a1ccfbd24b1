use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qhjspin::action::Branch;
use qhjspin::run::{run_scenario, Command, Overrides};

/// Scenario-driven laboratory for spin-1/2 relativistic quantum trajectories.
#[derive(Parser)]
#[command(name = "qhjspin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Export the dense Dirac solution pair over the evaluation grid.
    Solve(RunArgs),
    /// Evaluate the stationary Hamilton-Jacobi residual on the grid.
    Verify(RunArgs),
    /// Tabulate both conjugate-momentum laws and the velocity product.
    Momentum(RunArgs),
    /// Integrate a deterministic trajectory with event detection.
    Trajectory(RunArgs),
    /// Measure the classical and constant-potential reductions.
    Limits(RunArgs),
    /// Run the scenario once per swept parameter value.
    Sweep(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    S0,
    Z0,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for CSV tables and summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Reduced-action branch override.
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    /// Solver relative-tolerance override.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Momentum(a) => (Command::Momentum, a),
        Cmd::Trajectory(a) => (Command::Trajectory, a),
        Cmd::Limits(a) => (Command::Limits, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };

    let text = match std::fs::read_to_string(&args.scenario) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.scenario.display());
            return ExitCode::from(1);
        }
    };
    let overrides = Overrides {
        branch: args.branch.map(|b| match b {
            BranchArg::S0 => Branch::S0,
            BranchArg::Z0 => Branch::Z0,
        }),
        tol: args.tol,
    };

    match run_scenario(&text, command, &args.out, &overrides) {
        Ok(summary) => {
            for name in &summary.outputs {
                println!("wrote {}", args.out.join(name).display());
            }
            if let Some(r) = summary.max_residual_norm_s0 {
                println!("max normalized residual (s0): {r:e}");
            }
            if let Some(r) = summary.max_residual_norm_z0 {
                println!("max normalized residual (z0): {r:e}");
            }
            for e in &summary.events {
                println!("event {} at t = {:.6}, x = {:.9}", e.kind, e.t, e.x);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
