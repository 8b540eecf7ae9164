//! Command-line entry point.
//!
//! Exit codes: `0` when every run converged (or every check passed), `2` when
//! a run stopped at the iteration cap, `1` on configuration or other errors
//! and on failed checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::checks::{run_checks, Subjects};
use crate::config::{Config, Overrides, SolverChoice};
use crate::error::{config_error, Result};
use crate::instance;
use crate::run::{report, run_all, write_outputs};

/// Log level from `FBTN_LOG` (`quiet`, `info` or `debug`).
pub const LOG_ENV: &str = "FBTN_LOG";

#[derive(Debug, Parser)]
#[command(name = "fbtn-bench", version, about = "Run and check the FBTN solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured problem.
    Solve(RunArgs),
    /// Solve with both FBTN and forward-backward splitting.
    Compare(RunArgs),
    /// Run the invariant suites.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub solver: Option<SolverChoice>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma_frac: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub eta_bar: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            solver: self.solver,
            eps: self.eps,
            gamma: self.gamma,
            sigma_frac: self.sigma_frac,
            zeta: self.zeta,
            rho: self.rho,
            nu: self.nu,
            eta_bar: self.eta_bar,
            max_outer: self.max_outer,
            out: self.out.clone(),
            seed: self.seed,
        }
    }
}

fn init_logging() -> Result<()> {
    let level = match std::env::var(LOG_ENV).as_deref() {
        Err(_) | Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        Ok(other) => return Err(config_error(LOG_ENV, format!("expected quiet, info or debug, got `{other}`"))),
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    Ok(())
}

/// Loads, runs and writes outputs; returns whether every run converged.
pub fn solve(args: &RunArgs, force_both: bool) -> Result<bool> {
    let mut config = Config::load(&args.config)?;
    config.apply(&args.overrides())?;
    if force_both {
        config.solver.name = SolverChoice::Both;
    }
    config.validate()?;
    let inst = instance::build(&config)?;
    log::info!("instance: {}", inst.describe());
    let runs = run_all(&inst, &config)?;
    write_outputs(&config.output.dir, &inst, &config, &runs)?;
    print!("{}", report(&inst, &config, &runs));
    Ok(runs.iter().all(|r| r.converged()))
}

pub fn check(seed: u64) -> bool {
    let report = run_checks(seed, &Subjects::default());
    for o in &report.outcomes {
        match &o.result {
            Ok(note) if note.is_empty() => println!("PASS {}.{}", o.suite, o.invariant),
            Ok(note) => println!("PASS {}.{} ({note})", o.suite, o.invariant),
            Err(e) => println!("FAIL {}.{}: {e}", o.suite, o.invariant),
        }
    }
    report.passed()
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    init_logging()?;
    Ok(match cli.command {
        Command::Solve(args) => converged_code(solve(&args, false)?),
        Command::Compare(args) => converged_code(solve(&args, true)?),
        Command::Check { seed } => ExitCode::from(if check(seed) { 0 } else { 1 }),
    })
}

fn converged_code(converged: bool) -> ExitCode {
    ExitCode::from(if converged { 0 } else { 2 })
}

pub fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
