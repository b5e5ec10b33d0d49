//! `cube-spectral`: runs the verification suites and prints tables.
//!
//! Exit status: 0 all checks pass, 1 some check failed, 2 usage error,
//! 3 numeric failure.

mod commands;
mod manifest;
mod output;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cube_spectral::Error;

use crate::manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "cube-spectral", version, about = "Spectral gap checks for heat semigroups on the Hamming cube")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a check suite or a single numbered criterion.
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(cube_spectral::suites::SUITES), required_unless_present = "criterion", conflicts_with = "criterion")]
        suite: Option<String>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=13))]
        criterion: Option<u8>,
        #[command(flatten)]
        common: Common,
    },
    /// Stable density table: tau, p_gamma, tail_ratio.
    Density {
        #[arg(long, default_value_t = 0.05)]
        tau_min: f64,
        #[arg(long, default_value_t = 100.0)]
        tau_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Modified kernel summary for t0/4, t0/2 and t0 (or the given --t).
    Kernel {
        #[command(flatten)]
        common: Common,
    },
    /// Counterexample values and their lower bounds.
    Counterexample {
        #[arg(long, value_enum)]
        which: Which,
        #[command(flatten)]
        common: Common,
    },
    /// Worst-ratio search and measured rates.
    Search {
        /// Comma-separated exponents for a rate scan; overrides --p.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long, default_value_t = cube_spectral::search::DEFAULT_RESTARTS)]
        restarts: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Delta,
    Fractional,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated degrees, e.g. 2,3,7.
    #[arg(long, value_delimiter = ',')]
    band: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, env = "CUBE_SPECTRAL_THREADS")]
    threads: Option<usize>,
}

impl Common {
    fn band_set(&self) -> Option<BTreeSet<usize>> {
        self.band.as_ref().map(|b| b.iter().cloned().collect())
    }
}

/// What a command hands back for printing.
pub struct Outcome {
    pub manifest: RunManifest,
    /// Header and rows for `--format csv`.
    pub table: (Vec<&'static str>, Vec<Vec<String>>),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericFailure { .. } | Error::ConstructionFailure(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Verify { common, .. }
        | Command::Density { common, .. }
        | Command::Kernel { common }
        | Command::Counterexample { common, .. }
        | Command::Search { common, .. } => common.clone(),
    };
    if let Some(k) = common.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let start = Instant::now();
    let result = match &cli.command {
        Command::Verify { suite, criterion, .. } => commands::verify(suite.as_deref(), criterion.map(usize::from), &common),
        Command::Density { tau_min, tau_max, points, .. } => commands::density(*tau_min, *tau_max, *points, &common),
        Command::Kernel { .. } => commands::kernel(&common),
        Command::Counterexample { which, .. } => commands::counterexample(*which, &common),
        Command::Search { p_grid, iterations, restarts, .. } => commands::search(p_grid.as_deref(), *iterations, *restarts, &common),
    };
    let mut outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    outcome.manifest.duration_ms = start.elapsed().as_millis() as u64;
    let text = match common.format {
        Format::Json => outcome.manifest.to_json() + "\n",
        Format::Csv => match output::csv_text(&outcome.table.0, &outcome.table.1) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
    };
    if let Err(e) = output::emit(&text, common.out.as_deref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    let failed = outcome.manifest.reports.iter().filter(|r| !r.pass).count();
    eprintln!(
        "{}: {} reports, {} failed, {} ms",
        outcome.manifest.command,
        outcome.manifest.reports.len(),
        failed,
        outcome.manifest.duration_ms
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
