//! Command-line front end: parameter input, sweeps, and file emission
//! (CSV/JSON/SVG) for the time maps, solution sets, thresholds, branch
//! diagrams, parameter-plane maps, large-lambda constants, and the
//! certification reports.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numeric failures exit with 2, I/O failures with 3, usage errors with 1.
pub enum CliError {
    Numeric(String),
    Io(String),
    Usage(String),
}

impl From<timemap_core::Error> for CliError {
    fn from(e: timemap_core::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "timemap", version, about = "Time-map analysis of an indefinite Neumann problem")]
struct Cli {
    /// Output directory for emitted files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// JSON config file mirroring the flags (explicit flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Weight height on the outer intervals.
    #[arg(long)]
    lambda: Option<f64>,
    /// Weight height as a multiple of the threshold lambda*.
    #[arg(long, conflicts_with = "lambda")]
    lambda_rel: Option<f64>,
    /// Weight depth on the middle interval.
    #[arg(long)]
    mu: Option<f64>,
    /// Switch abscissa, in (0, 1/2).
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the outer time map, or the connection times with --connection.
    Timemap {
        #[command(flatten)]
        params: ParamArgs,
        /// Also tabulate the three connection times (needs --mu).
        #[arg(long)]
        connection: bool,
        /// Number of grid points.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Enumerate and verify all solutions at fixed parameters.
    Solve {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Compute the existence/multiplicity thresholds in mu.
    Thresholds {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Trace the mu-parametrized solution branches.
    Bifurcate {
        #[command(flatten)]
        params: ParamArgs,
        /// Upper end of the traced mu range.
        #[arg(long)]
        mu_max: Option<f64>,
    },
    /// Verified solution counts over a (lambda, mu) grid.
    Planemap {
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        lambda_steps: Option<usize>,
        #[arg(long)]
        mu_min: Option<f64>,
        #[arg(long)]
        mu_max: Option<f64>,
        #[arg(long)]
        mu_steps: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Large-lambda constants along mu = K lambda.
    Asymptotic {
        #[arg(long)]
        sigma: Option<f64>,
        /// Ratio K for the landmark table and the sigma-thresholds.
        #[arg(long)]
        k: Option<f64>,
    },
    /// Certify the polynomial sign lemmas and the small-s expansions.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        /// Random sample count for the lemma certifications.
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are normal exits
            use clap::error::ErrorKind::*;
            let _ = e.print();
            return match e.kind() {
                DisplayHelp | DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    let cfg = match cli.config.as_deref().map(config::FileConfig::load) {
        Some(Ok(c)) => c,
        Some(Err(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        None => config::FileConfig::default(),
    };

    // worker count: environment wins over the config file
    let workers = std::env::var("TIMEMAP_WORKERS")
        .ok()
        .and_then(|w| w.parse::<usize>().ok())
        .or(cfg.workers);
    if let Some(n) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let out = if cli.out == PathBuf::from(".") {
        cfg.out.clone().map(PathBuf::from).unwrap_or(cli.out)
    } else {
        cli.out
    };

    let result = commands::dispatch(cli.command, &out, &cfg);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o failure: {msg}");
            ExitCode::from(3)
        }
    }
}
