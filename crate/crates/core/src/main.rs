use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use chgalerkin::analysis::ConvergenceKind;
use chgalerkin::io::{execute, Command, RunOptions, VerifyTarget};

#[derive(Parser)]
#[command(name = "chgalerkin", version, about = "Spectral Galerkin simulator for a nonisothermal Cahn-Hilliard system")]
struct Cli {
    /// Overrides the output directory from the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
    /// Seed for randomized property sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write trajectory.csv and summary.json.
    Simulate { config: PathBuf },
    /// Run a property suite, or check a recorded trajectory.
    Verify {
        target: Target,
        config: PathBuf,
        /// Trajectory CSV to check (target `trajectory` only).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Refinement study in modes, eps or dt.
    Converge { kind: Kind, config: PathBuf },
    /// Continuous-dependence experiment on two configs.
    Depend { config1: PathBuf, config2: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Potentials,
    Spectral,
    Elliptic,
    Trajectory,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Modes,
    Eps,
    Dt,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet { "error" } else { "warn" }))
        .init();
    let command = match cli.command {
        Cmd::Simulate { config } => Command::Simulate { config },
        Cmd::Verify { target, config, trajectory } => Command::Verify {
            target: match target {
                Target::Potentials => VerifyTarget::Potentials,
                Target::Spectral => VerifyTarget::Spectral,
                Target::Elliptic => VerifyTarget::Elliptic,
                Target::Trajectory => VerifyTarget::Trajectory,
            },
            config,
            trajectory,
        },
        Cmd::Converge { kind, config } => Command::Converge {
            kind: match kind {
                Kind::Modes => ConvergenceKind::ModeCount,
                Kind::Eps => ConvergenceKind::Epsilon,
                Kind::Dt => ConvergenceKind::TimeStep,
            },
            config,
        },
        Cmd::Depend { config1, config2 } => Command::Depend { config1, config2 },
    };
    let opts = RunOptions {
        output_dir: cli.output_dir,
        quiet: cli.quiet,
        seed: cli.seed,
    };
    let outcome = execute(&command, &opts);
    for line in &outcome.lines {
        if outcome.exit_code != 0 && line.starts_with("error") {
            eprintln!("{line}");
        } else if !cli.quiet {
            println!("{line}");
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
