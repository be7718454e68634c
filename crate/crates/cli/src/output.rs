//! Persisted artifacts: the per-step trace CSV and pretty JSON documents.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use mannlab_core::iteration::DiagnosticRow;
use serde::Serialize;

use crate::error::CliError;

pub const TRACE_HEADER: &str = "n,residual,dist_to_z,anchor_pairing,bound_slack,ineq35_slack,key_ineq_slack";

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt17(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(rows: &[DiagnosticRow], w: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{TRACE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n,
            fmt17(r.residual),
            fmt17(r.dist_to_z),
            opt17(r.anchor_pairing),
            fmt17(r.bound_slack),
            opt17(r.ineq35_slack),
            opt17(r.key_ineq_slack),
        )?;
    }
    w.flush()
}

pub fn write_trace_file(rows: &[DiagnosticRow], path: &Path) -> Result<(), CliError> {
    let f = fs::File::create(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    write_trace_csv(rows, f)?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    fs::write(path, to_json(value)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))
}
