//! Command-line front end: run one scenario file and print its report.
//!
//! Exit codes: 0 every check passed, 1 a mathematical check failed,
//! 2 the scenario (or command line) is invalid.

use std::path::PathBuf;

use clap::Parser;
use ovfp_core::scenario::{emit_report, run_scenario, Overrides, ReportFormat};

#[derive(Parser)]
#[command(
    name = "ovfp",
    version,
    about = "Verify operator-valued free-probability identities described by a scenario file"
)]
struct Cli {
    /// Path to the scenario TOML file (one file = one scenario).
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,

    /// Override the scenario's maximum word degree (1–12).
    #[arg(long, value_name = "K")]
    maxdeg: Option<usize>,

    /// Override the scenario's numerical tolerance.
    #[arg(long, value_name = "T")]
    tol: Option<f64>,

    /// Override the scenario's random seed.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,

    /// Report format: human-readable text or schema-stable JSON.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker count; accepted for interface stability (evaluation is
    /// single-threaded, so any accepted value behaves like 1).
    #[arg(long, value_name = "J", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum Format {
    Text,
    Structured,
}

fn main() {
    let cli = Cli::parse();
    let overrides = Overrides {
        maxdeg: cli.maxdeg,
        tol: cli.tol,
        seed: cli.seed,
    };
    let report = run_scenario(&cli.scenario, &overrides);
    let format = match cli.format {
        Format::Text => ReportFormat::Text,
        Format::Structured => ReportFormat::Structured,
    };
    print!("{}", emit_report(&report, format));
    std::process::exit(report.exit_code);
}
