use std::fmt;
use std::path::PathBuf;

use irdd_core::IrddError;
use thiserror::Error;

/// Exit code for malformed input files, flags or configuration.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for estimation failures on valid input.
pub const EXIT_ESTIMATION: i32 = 3;
/// Exit code for failures writing results.
pub const EXIT_OUTPUT: i32 = 1;

/// One rejected CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowProblem {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for RowProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

fn list_problems(problems: &[RowProblem]) -> String {
    const SHOWN: usize = 20;
    let mut s: Vec<String> = problems.iter().take(SHOWN).map(|p| format!("  {p}")).collect();
    if problems.len() > SHOWN {
        s.push(format!("  ... and {} more", problems.len() - SHOWN));
    }
    s.join("\n")
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },

    #[error("{}: column `{name}` not found (columns: {available})", path.display())]
    MissingColumn {
        path: PathBuf,
        name: String,
        available: String,
    },

    #[error(
        "{}: {} invalid row(s); fix them or pass --drop-invalid\n{}",
        path.display(),
        problems.len(),
        list_problems(problems)
    )]
    InvalidRows {
        path: PathBuf,
        problems: Vec<RowProblem>,
    },

    #[error("{}: no valid rows", path.display())]
    NoRows { path: PathBuf },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Estimation(#[from] IrddError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Estimation(e) if !e.is_input_error() => EXIT_ESTIMATION,
            CliError::Write { .. } => EXIT_OUTPUT,
            _ => EXIT_INPUT,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
