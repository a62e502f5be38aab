//! Command-line front end: configuration, scenario runs, checks and sweeps.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod convergence;
pub mod io;
pub mod scenario;
pub mod suite;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::load_config;
use crate::scenario::{emit_outputs, run_scenario, RunError, EXIT_ITERATION, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "boussinesq", version, about = "Pseudospectral solver for Boussinesq-type Cauchy problems")]
pub struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0, global = true)]
    pub threads: usize,
    /// Seed for randomized probes.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured problem and write the requested outputs.
    Run { config: PathBuf },
    /// Same as `run` with the nonlinearity dropped.
    Linear { config: PathBuf },
    /// Run the inequality and operator checks.
    Check { config: PathBuf },
    /// Time-step and grid refinement sweeps.
    Convergence { config: PathBuf },
}

fn init(cli: &Cli) {
    let level = if cli.quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
}

fn say(cli: &Cli, text: &str) {
    if !cli.quiet {
        println!("{text}");
    }
}

fn dispatch(cli: &Cli) -> Result<i32, RunError> {
    let path = match &cli.command {
        Command::Run { config } | Command::Linear { config } | Command::Check { config } | Command::Convergence { config } => config,
    };
    let cfg = load_config(path).map_err(|e| RunError::Config(e.to_string()))?;
    for w in &cfg.warnings {
        log::warn!("{w}");
    }
    match &cli.command {
        Command::Run { .. } | Command::Linear { .. } => {
            let linear = matches!(cli.command, Command::Linear { .. });
            let out = run_scenario(&cfg, linear)?;
            emit_outputs(&out, &cfg)?;
            say(cli, &scenario::summary(&out.report));
            Ok(out.exit_code())
        }
        Command::Check { .. } => {
            let rep = suite::run_suite(&cfg, cli.seed)?;
            say(cli, &suite::summary(&rep));
            if let Some(p) = &cfg.output.report {
                io::write_json(p, &rep)?;
            }
            Ok(if rep.pass { EXIT_OK } else { EXIT_ITERATION })
        }
        Command::Convergence { .. } => {
            let mut rows = convergence::dt_sweep(&cfg)?;
            rows.extend(convergence::grid_sweep(&cfg)?);
            match &cfg.output.convergence {
                Some(p) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
                    convergence::write_table(&mut f, &rows)?;
                    std::io::Write::flush(&mut f)?;
                }
                None if !cli.quiet => convergence::write_table(&mut std::io::stdout().lock(), &rows)?,
                None => {}
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    init(&cli);
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
