//! CSV output.
//!
//! Columns: the scenario keys of [`RunResult::scenario_keys`], `trial`,
//! `metric`, `value`. Values use 9 significant digits in scientific
//! notation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::experiment::RunResult;
use crate::error::Result;

/// Writes `result` as CSV.
pub fn write_csv(result: &RunResult, mut w: impl Write) -> Result<()> {
    let keys = result.scenario_keys();
    let mut header: Vec<&str> = keys.iter().map(|(k, _)| *k).collect();
    header.extend(["trial", "metric", "value"]);
    writeln!(w, "{}", header.join(","))?;
    let prefix: Vec<&str> = keys.iter().map(|(_, v)| v.as_str()).collect();
    let prefix = prefix.join(",");
    for r in &result.rows {
        writeln!(w, "{prefix},{},{},{:.8e}", r.trial, r.metric, r.value)?;
    }
    Ok(())
}

/// [`write_csv`] to a file.
pub fn emit_csv(result: &RunResult, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(result, &mut w)?;
    w.flush()?;
    Ok(())
}

/// VBI traces with `trial,user` prepended to each row.
pub fn write_traces(result: &RunResult, mut w: impl Write) -> Result<()> {
    let mut header_done = false;
    for t in &result.traces {
        let mut lines = t.csv.lines();
        let head = lines.next().unwrap_or_default();
        if !header_done {
            writeln!(w, "trial,user,{head}")?;
            header_done = true;
        }
        for l in lines {
            writeln!(w, "{},{},{l}", t.trial, t.user)?;
        }
    }
    Ok(())
}
