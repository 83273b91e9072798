//! Output files are written to a temporary file in the target directory and
//! renamed into place, so a failed or interrupted run never leaves a
//! truncated file behind.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_atomic<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<&mut NamedTempFile>) -> Result<()>,
{
    let path = dir.join(name);
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut w = BufWriter::new(&mut tmp);
        body(&mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }
    tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
    Ok(path)
}
