use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tic_cli::{parse_override, run, Assignment, Command, ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "tic", version, about = "Nonlocal HJB solvers for time-inconsistent games, with verification checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Nonlocal linear system on the manufactured problem.
    SolveLinear(Flags),
    /// Nonlocal nonlinear system (nonlinear-manufactured) or equilibrium HJB of the scalar game (lq-scalar).
    SolveHjb(Flags),
    /// Exponential-utility equilibrium against its closed form.
    ExampleExp(Flags),
    /// Power-utility diagonal fixed point.
    ExamplePower(Flags),
    /// Monte Carlo Feynman-Kac residuals of the heat equation.
    FkVerify(Flags),
    /// Weighted Hölder norms of growth test functions.
    Norms(Flags),
    /// Ellipticity, appropriateness, commutation or positivity conditions of a preset.
    Check(Flags),
}

#[derive(Args)]
struct Flags {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable, beats the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (same as `--set output.dir=DIR`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (same as `--set mc.seed=SEED`).
    #[arg(long)]
    seed: Option<u64>,
}

fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, ConfigError> {
    let file = match &flags.config {
        Some(path) => RunConfig::read_file(path)?,
        None => Vec::new(),
    };
    let mut sets: Vec<Assignment> = flags.set.iter().map(|s| parse_override(s)).collect::<Result<_, _>>()?;
    if let Some(dir) = &flags.out {
        sets.push(parse_override(&format!("output.dir={}", dir.display()))?);
    }
    if let Some(seed) = flags.seed {
        sets.push(parse_override(&format!("mc.seed={seed}"))?);
    }
    RunConfig::resolve(command, &file, &sets)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Cmd::SolveLinear(f) => (Command::SolveLinear, f),
        Cmd::SolveHjb(f) => (Command::SolveHjb, f),
        Cmd::ExampleExp(f) => (Command::ExampleExp, f),
        Cmd::ExamplePower(f) => (Command::ExamplePower, f),
        Cmd::FkVerify(f) => (Command::FkVerify, f),
        Cmd::Norms(f) => (Command::Norms, f),
        Cmd::Check(f) => (Command::Check, f),
    };
    let cfg = match resolve(command, flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {} = {:e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.condition);
            }
            match report.first_failure() {
                None => ExitCode::SUCCESS,
                Some(c) => {
                    eprintln!("check failed: {} = {:e}, required {}", c.name, c.value, c.condition);
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
