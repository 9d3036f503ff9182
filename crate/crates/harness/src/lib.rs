//! Declarative experiment runner on top of `loyalty-core`.
//!
//! A JSON [`ExperimentSpec`] names a scenario and its parameter sweep;
//! [`run`] solves every point and returns a [`ResultTable`] plus a set of
//! named scalars that [`check`] compares with an expectations file.

pub mod check;
pub mod run;
pub mod spec;
pub mod table;

use std::path::{Path, PathBuf};

pub use check::{check, Expectations, Report};
pub use run::{run, RunOutput};
pub use spec::{ExperimentSpec, Scenario};
pub use table::{emit_csv, ResultTable};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<spec::FieldError>),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{scenario} at {point}: {source}")]
    Solver {
        scenario: Scenario,
        point: String,
        source: loyalty_core::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    /// Process exit status: 2 for bad input, 3 for everything that went
    /// wrong after the input was accepted.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 2,
            HarnessError::Io { .. } | HarnessError::Solver { .. } | HarnessError::Internal(_) => 3,
        }
    }
}

/// Path of the JSON file holding constructed programs next to a CSV output:
/// `fig4.csv` -> `fig4.programs.json`.
pub fn programs_path(csv: &Path) -> PathBuf {
    csv.with_extension("programs.json")
}

/// Writes the table (and any constructed programs) for a finished run.
pub fn write_outputs(out: &RunOutput, path: &Path) -> Result<(), HarnessError> {
    emit_csv(&out.table, path)?;
    if let Some(programs) = &out.programs {
        let target = programs_path(path);
        let mut text = serde_json::to_string_pretty(programs).map_err(|e| HarnessError::Internal(e.to_string()))?;
        text.push('\n');
        std::fs::write(&target, text).map_err(|e| HarnessError::Io {
            path: target,
            source: e,
        })?;
    }
    Ok(())
}
