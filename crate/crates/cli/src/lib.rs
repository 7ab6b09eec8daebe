//! Command-line front end for isotonic regression discontinuity estimation.

pub mod args;
pub mod commands;
pub mod error;
pub mod ingest;
pub mod output;

pub use args::{Cli, Command};
pub use error::{CliError, Result};
pub use ingest::{ingest_csv, Columns, IngestSummary, Ingested};
pub use output::{Report, Table, SCHEMA_VERSION};

/// Run one parsed command, writing its output and printing warnings to stderr.
pub fn run(cli: Cli) -> Result<()> {
    let (report, out) = match &cli.command {
        Command::Fit(a) => (commands::fit(a)?, &a.output),
        Command::Rdd(a) => (commands::rdd(a)?, &a.output),
        Command::Ci(a) => (commands::ci(a)?, &a.output),
        Command::Mc(a) => (commands::mc(a)?, &a.output),
        Command::Limit(a) => (commands::limit(a)?, &a.output),
        Command::Cstar(a) => (commands::cstar(a)?, &a.output),
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    output::emit(&report, out)
}
