//! Command-line front end for `schur-lab` experiments: JSON configs in,
//! versioned JSON, CSV or SVG reports out.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod svg;

use std::io::Write;
use std::path::Path;

pub use config::{Command, Expect, ExperimentConfig, Format};
pub use error::CliError;
pub use run::{run, RunOptions, RunOutput};

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
