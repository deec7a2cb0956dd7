mod commands;
mod report;

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use probgeom::distinguishability::Mode;
use probgeom::NumericMode;

/// Operational state-space analysis of probability data tables.
#[derive(Debug, Parser)]
#[command(name = "probgeom", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Numeric mode, overriding the one declared by the input.
    #[arg(long, global = true)]
    pub mode: Option<NumericMode>,

    /// Float-mode tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// States (by name) whose vectors become the standard basis.
    #[arg(long, global = true, value_delimiter = ',')]
    pub basis: Vec<String>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    /// Table file format; inferred from the extension, JSON for stdin.
    #[arg(long, global = true, value_enum)]
    pub input_format: Option<TableFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a table is well formed and normalized.
    Validate { table: String },
    /// Rank K of a table.
    Rank { table: String },
    /// Rank factorization p = t·u.
    Factorize { table: String },
    /// Trivial vector, extreme states and outcome-region half-spaces.
    Geometry { table: String },
    /// Maximal one-shot distinguishable set.
    Distinguish {
        table: String,
        /// Allow merging outcomes of one measurement.
        #[arg(long)]
        coarse: bool,
    },
    /// Whether a vector lies in the maximal outcome region.
    RegionCheck {
        table: String,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        candidate: String,
    },
    /// Apply an affine state map to every source state.
    MapApply {
        source: String,
        target: String,
        #[arg(long)]
        map: String,
    },
    /// Linear form C = F + g·nᵀ of an affine state map.
    MapLinearize {
        source: String,
        target: String,
        #[arg(long)]
        map: String,
    },
    /// Generate a table from a quantum model file by the trace rule.
    Qgen {
        model: String,
        /// Format of the generated table.
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        table_format: TableFormat,
    },
    /// Validate, rank, factorize, geometry and distinguishability in one document.
    FullReport {
        table: String,
        #[arg(long)]
        coarse: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Rank { .. } => "rank",
            Command::Factorize { .. } => "factorize",
            Command::Geometry { .. } => "geometry",
            Command::Distinguish { .. } => "distinguish",
            Command::RegionCheck { .. } => "region-check",
            Command::MapApply { .. } => "map-apply",
            Command::MapLinearize { .. } => "map-linearize",
            Command::Qgen { .. } => "qgen",
            Command::FullReport { .. } => "full-report",
        }
    }
}

pub fn distinguish_mode(coarse: bool) -> Mode {
    if coarse {
        Mode::Coarse
    } else {
        Mode::Strict
    }
}

/// A failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    /// Module error, prefixed with the file it came from.
    pub fn from_error(context: &str, e: probgeom::Error) -> Self {
        use probgeom::Error as E;
        let code = match e {
            E::InconsistentRank(_) | E::SolverFailure(_) | E::SearchBudgetExceeded(_) | E::Invariant(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: format!("{context}: {e}"),
        }
    }
}

pub fn read_input(path: &str) -> Result<Vec<u8>, Failure> {
    if path == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::validation(format!("stdin: {e}")))?;
        return Ok(buf);
    }
    std::fs::read(path).map_err(|e| Failure::validation(format!("{path}: {e}")))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Failure::internal(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::internal(format!("stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(&cli).and_then(|bytes| write_output(cli.out.as_deref(), &bytes)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
