//! Command-line front end: price a configured plan, reproduce the
//! benchmark tables, or dump analytic densities, all as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use basketmc::config::{parse_grid, RunConfig};
use basketmc::driver::run;
use basketmc::report::{density_csv, price_csv, reproduce_table, TableOptions};
use basketmc::Error;

#[derive(Parser)]
#[command(
    name = "basketmc",
    about = "Monte Carlo pricing of kth-to-default basket CDSs and CDO tranches \
             under a copula-contagion mixture model",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price every target of a TOML run configuration.
    Price {
        /// Run configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured path count.
        #[arg(long)]
        paths: Option<u64>,
        /// Override the configured worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Override the configured output precision.
        #[arg(long)]
        precision: Option<usize>,
        /// Write the CSV here instead of the configured/stdout destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce one of the benchmark tables (1-4) as CSV.
    Table {
        /// Table id: 1 = Gaussian CDO grid, 2 = copula comparison,
        /// 3 = decay sweep, 4 = counterparty effect.
        #[arg(long)]
        id: u8,
        /// Monte Carlo paths per cell.
        #[arg(long, default_value_t = 1_000_000)]
        paths: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads (defaults to the available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        /// Decimal places per cell.
        #[arg(long, default_value_t = 4)]
        precision: usize,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the analytic density and CDF of the k-th default time
    /// (permanent-shock model).
    Density {
        /// Default order k (1-based).
        #[arg(long)]
        k: usize,
        /// Portfolio size.
        #[arg(long, default_value_t = 40)]
        n: usize,
        /// Base hazard rate.
        #[arg(long, default_value_t = 0.01)]
        a: f64,
        /// Contagion multiplier.
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        /// Evaluation grid `t0:t1:steps`.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 6)]
        precision: usize,
        /// Output CSV file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn emit(csv: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, csv).map_err(Error::from),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Price {
            config,
            seed,
            paths,
            workers,
            precision,
            out,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let config = RunConfig::from_toml_str(&text)?;
            let mut plan = config.to_plan()?;
            if let Some(seed) = seed {
                plan.seed = seed;
            }
            if let Some(paths) = paths {
                plan.paths = paths;
            }
            if let Some(workers) = workers {
                plan.workers = workers;
            }
            plan.validate()?;
            let results = run(&plan)?;
            let csv = price_csv(
                &plan,
                &results,
                precision.unwrap_or(config.output.precision),
            );
            let config_out = config.output.csv.as_ref().map(PathBuf::from);
            emit(&csv, out.as_ref().or(config_out.as_ref()))
        }
        Command::Table {
            id,
            paths,
            seed,
            workers,
            precision,
            out,
        } => {
            let opts = TableOptions {
                paths,
                seed,
                workers: workers.unwrap_or_else(default_workers),
                precision,
            };
            let csv = reproduce_table(id, &opts)?;
            emit(&csv, Some(&out))
        }
        Command::Density {
            k,
            n,
            a,
            c,
            grid,
            precision,
            out,
        } => {
            let grid = parse_grid(&grid)?;
            let csv = density_csv(k, n, a, c, &grid, precision)?;
            emit(&csv, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
