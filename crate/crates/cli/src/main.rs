//! `itm`: command-line driver for the interval translation map pipelines.

mod commands;
mod config;
mod error;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use itm_core::rational::{parse_rational, Rational};

use config::{Config, Overrides};
use error::CliError;
use report::Outcome;

#[derive(Parser, Debug)]
#[command(name = "itm", version, about = "Attractors, invariant measures and conjugacies of interval translation maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report, CSV tables and plots; the report goes
    /// to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG plots (requires --out).
    #[arg(long, global = true, requires = "out")]
    plot: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    max_arcs: Option<usize>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Exact tolerance, as P/Q, an integer or a decimal.
    #[arg(long, global = true, value_parser = parse_tol)]
    tol: Option<Rational>,
    /// Number of approximation levels to run.
    #[arg(long, global = true)]
    levels: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check the configuration without running anything.
    Validate,
    /// Forward attractor of `map`.
    Attractor,
    /// Invariant measure on the attractor of `map`, with residuals and recurrence.
    Measure,
    /// Homtervals of `map` to the given depth.
    Homtervals,
    /// Exact endpoint-orbit relations of `map`.
    Relations,
    /// Relation-preserving rational approximants of `target` and their measures.
    Approximate,
    /// Interval exchange induced by an invariant measure of `map`.
    Conjugate,
    /// Empirical measures and visit frequencies along an orbit of `piecewiseMap`.
    Empirical,
    /// Check a candidate limit `measure` against `map` or `piecewiseMap`.
    VerifyLimit,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Attractor => "attractor",
            Command::Measure => "measure",
            Command::Homtervals => "homtervals",
            Command::Relations => "relations",
            Command::Approximate => "approximate",
            Command::Conjugate => "conjugate",
            Command::Empirical => "empirical",
            Command::VerifyLimit => "verify-limit",
        }
    }

    fn run(self, c: &Config) -> Result<Outcome, CliError> {
        match self {
            Command::Validate => commands::validate(c),
            Command::Attractor => commands::attractor(c),
            Command::Measure => commands::measure(c),
            Command::Homtervals => commands::homtervals(c),
            Command::Relations => commands::relations(c),
            Command::Approximate => commands::approximate(c),
            Command::Conjugate => commands::conjugate(c),
            Command::Empirical => commands::empirical(c),
            Command::VerifyLimit => commands::verify_limit(c),
        }
    }
}

fn parse_tol(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    config.apply(&Overrides {
        seed: cli.seed,
        max_iter: cli.max_iter,
        max_arcs: cli.max_arcs,
        depth: cli.depth,
        tol: cli.tol.clone(),
        levels: cli.levels,
    });
    config.resolve();
    let command = cli.command.name();
    let outcome = cli.command.run(&config)?;
    let json = report::render(command, &config, &outcome);
    match &cli.out {
        Some(dir) => report::write_artifacts(dir, command, &json, &outcome, cli.plot)?,
        None => print!("{json}"),
    }
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("itm {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
