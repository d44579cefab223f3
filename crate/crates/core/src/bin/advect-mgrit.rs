//! Command-line driver for the experiment suite.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use advect_mgrit::error::Error;
use advect_mgrit::experiments::{cmd_constants, cmd_iters, cmd_solve, cmd_sweep, cmd_validate, CsvTable, ExperimentConfig};
use advect_mgrit::mgrit::Cycle;

const EXIT_CONFIG: u8 = 1;
const EXIT_SINGULAR: u8 = 2;
const EXIT_VALIDATE: u8 = 3;

#[derive(Parser)]
#[command(version, about = "MGRIT for periodic advection with corrected semi-Lagrangian coarse grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand)]
enum Command {
    /// Error constants and explicit CFL limits.
    Constants,
    /// Convergence factors over a range of CFL numbers.
    Sweep,
    /// Two-level and V-cycle iteration counts per grid and coarsening factor.
    Iters,
    /// Refinement studies; exits with 3 if any check fails.
    Validate,
    /// One MGRIT run with its residual history.
    Solve,
}

#[derive(Args)]
struct Options {
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the random initial iterate.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Attach measured MGRIT convergence factors to a sweep.
    #[arg(long, global = true)]
    measure: bool,
    #[arg(long, global = true, value_parser = ["two-level", "v"])]
    cycle: Option<String>,
    /// CF-relaxation sweeps after the initial F-relaxation.
    #[arg(long, global = true)]
    nu: Option<usize>,
    /// Coarsening factors, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Space-time grid as NX,NT.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<[usize; 2]>,
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [nx, nt] => Ok([
            nx.trim().parse().map_err(|e| format!("bad NX: {e}"))?,
            nt.trim().parse().map_err(|e| format!("bad NT: {e}"))?,
        ]),
        _ => Err("expected NX,NT".into()),
    }
}

fn load_config(options: &Options) -> Result<ExperimentConfig, Error> {
    let mut config = match &options.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(threads) = options.threads {
        config.output.threads = threads;
    }
    if let Some(seed) = options.seed {
        config.mgrit.seed = seed;
    }
    if let Some(cycle) = &options.cycle {
        config.mgrit.cycle = cycle.parse::<Cycle>()?;
    }
    if let Some(nu) = options.nu {
        config.mgrit.nu = nu;
    }
    if let Some(m) = &options.m {
        config.mgrit.m = m.clone();
    }
    if let Some([n_x, n_t]) = options.grid {
        config.grid.n_x = n_x;
        config.grid.n_t = n_t;
        config.grid.table = vec![[n_x, n_t]];
    }
    if options.measure {
        config.sweep.measure = true;
    }
    if let Some(out) = &options.out {
        config.output.path = Some(out.display().to_string());
    }
    config.validate()?;
    Ok(config)
}

fn write_table(table: &CsvTable, path: Option<&str>) -> Result<(), Error> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Config(format!("cannot create {path}: {e}")))?;
            table.write_to(BufWriter::new(file))
        }
        None => table.write_to(io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    if let Command::Constants = cli.command {
        let out = cli.options.out.as_ref().map(|p| p.display().to_string());
        write_table(&cmd_constants()?, out.as_deref())?;
        return Ok(0);
    }
    if let Command::Validate = cli.command {
        let (table, all_pass) = cmd_validate()?;
        let out = cli.options.out.as_ref().map(|p| p.display().to_string());
        write_table(&table, out.as_deref())?;
        return Ok(if all_pass { 0 } else { EXIT_VALIDATE });
    }
    let config = load_config(&cli.options)?;
    let table = match cli.command {
        Command::Sweep => cmd_sweep(&config, config.sweep.measure)?,
        Command::Iters => cmd_iters(&config)?,
        Command::Solve => {
            let (table, report) = cmd_solve(&config)?;
            eprintln!(
                "iterations = {}, converged = {}, wall = {:.3} s",
                report.iterations, report.converged, report.wall_seconds
            );
            table
        }
        Command::Constants | Command::Validate => unreachable!("handled above"),
    };
    write_table(&table, config.output.path.as_deref())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Singular { .. } => EXIT_SINGULAR,
        _ => EXIT_CONFIG,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_operators_map_to_their_own_exit_code() {
        let singular = Error::Singular { omega: 0.0, magnitude: 0.0, context: String::new() };
        assert_eq!(exit_code(&singular), EXIT_SINGULAR);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
    }

    #[test]
    fn grid_flag_parses_pairs() {
        assert_eq!(parse_grid("64,256").unwrap(), [64, 256]);
        assert!(parse_grid("64").is_err());
    }
}
