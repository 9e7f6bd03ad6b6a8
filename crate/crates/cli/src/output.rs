//! CSV output with an optional JSON-lines mirror.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Runtime(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Writes `rows` as CSV to `out` (stdout when `None`) and, if requested, as
/// JSON lines to `jsonl`.
pub fn write_rows<R: Serialize>(rows: &[R], out: Option<&Path>, jsonl: Option<&Path>) -> Result<(), CliError> {
    write_csv(rows, open(out)?)?;
    if let Some(path) = jsonl {
        write_jsonl(rows, open(Some(path))?)?;
    }
    Ok(())
}

pub fn write_csv<R: Serialize, W: Write>(rows: &[R], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<R: Serialize, W: Write>(rows: &[R], mut out: W) -> Result<(), CliError> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// `results/grid.csv` becomes `results/grid_boundary.csv`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}{ext}"))
}
