//! Library side of the `orbitflag` command-line tool.

pub mod commands;
pub mod output;
pub mod spec;

use std::path::Path;

pub use commands::{cmd_flags, cmd_omega, cmd_simulate, cmd_slc, cmd_validate, OutputFormat};
pub use spec::{load_spec, LoadedSpec, RunConfig, SystemSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error in {origin}{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Parse { origin: String, line: Option<usize>, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure in {context}: {source}")]
    Numerical { context: String, source: orbitflag::Error },
    #[error("SVG output needs n = 3, this system has n = {0}")]
    UnsupportedDimensionForSvg(usize),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Output(format!("{}: {e}", path.display()))
    }

    pub fn numerical(context: &str) -> impl FnOnce(orbitflag::Error) -> Self + '_ {
        move |source| CliError::Numerical { context: context.to_string(), source }
    }

    /// Process exit code: 1 validation, 2 parse, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::UnsupportedDimensionForSvg(_) => 1,
            CliError::Parse { .. } => 2,
            CliError::Numerical { .. } | CliError::Output(_) => 3,
        }
    }
}
