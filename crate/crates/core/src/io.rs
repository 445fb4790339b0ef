//! CSV and key-value serialization.
//!
//! Float fields print as fixed-point decimals with 17 digits after the point:
//! parsing such a string recovers the original f64 exactly for magnitudes of
//! one and above, and to well under 1e-12 absolute below that, comfortably
//! inside the round-trip contract.

use crate::analysis::{ScanTable, Trace};
use crate::error::{Error, Result};
use crate::gas::Ensemble;
use crate::grid::{Grid, GridPdf, MIN_POINTS};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v:.17}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Write a density as `x,y` rows.
pub fn write_pdf_csv(path: &Path, pdf: &GridPdf) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x,y")?;
    let g = pdf.grid();
    for (i, &v) in pdf.values().iter().enumerate() {
        writeln!(w, "{},{}", fmt_float(g.x(i)), fmt_float(v))?;
    }
    Ok(())
}

/// Read a density written by [`write_pdf_csv`]: header `x,y`, at least
/// [`MIN_POINTS`] rows, uniform spacing from zero. Values may be negative
/// (kernel-perturbed outputs round-trip); they only need to be finite.
pub fn read_pdf_csv(path: &Path) -> Result<GridPdf> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))??;
    if header.trim() != "x,y" {
        return Err(Error::Format(format!(
            "expected header 'x,y', found '{header}'"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("row {}: missing comma", lineno + 2)))?;
        let parse = |s: &str, what: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("row {}: bad {what} '{s}'", lineno + 2)))
        };
        let x = parse(x, "x")?;
        let y = parse(y, "y")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Format(format!(
                "row {}: non-finite field",
                lineno + 2
            )));
        }
        xs.push(x);
        ys.push(y);
    }
    if xs.len() < MIN_POINTS {
        return Err(Error::Format(format!(
            "only {} rows; a usable grid needs {MIN_POINTS}",
            xs.len()
        )));
    }
    let n = xs.len();
    if xs[0].abs() > 1e-12 {
        return Err(Error::Format(format!(
            "grid must start at 0, found {}",
            xs[0]
        )));
    }
    let x_max = xs[n - 1];
    let grid = Grid::new(x_max, n)?;
    let h = grid.spacing();
    for (i, &x) in xs.iter().enumerate() {
        if (x - i as f64 * h).abs() > 1e-9 * x_max.max(1.0) {
            return Err(Error::Format(format!(
                "row {}: x = {x} is off the uniform grid (expected {})",
                i + 2,
                i as f64 * h
            )));
        }
    }
    Ok(GridPdf::from_values_unchecked(grid, ys))
}

/// Write an orbit trace as `n,norm,mean,entropy,l1_to_target` rows.
pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "n,norm,mean,entropy,l1_to_target")?;
    for s in &trace.steps {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.step,
            fmt_float(s.norm),
            fmt_float(s.mean),
            fmt_float(s.entropy),
            fmt_float(s.distance)
        )?;
    }
    Ok(())
}

/// Write the feasible rows of a scan as
/// `aL,CM,xCM,per_capita,proportion` rows.
pub fn write_scan_csv(path: &Path, table: &ScanTable) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "aL,CM,xCM,per_capita,proportion")?;
    for row in table.rows() {
        let r = &row.report;
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_float(row.al),
            fmt_float(r.cm),
            fmt_float(r.xcm),
            fmt_float(r.per_capita),
            fmt_float(r.proportion)
        )?;
    }
    Ok(())
}

/// Write agent stocks as `agent,money` rows.
pub fn write_ensemble_csv(path: &Path, ensemble: &Ensemble) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "agent,money")?;
    for (i, &m) in ensemble.money().iter().enumerate() {
        writeln!(w, "{},{}", i, fmt_float(m))?;
    }
    Ok(())
}

/// Write `key=value` lines (run metadata sidecars).
pub fn write_kv(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    let mut w = create(path)?;
    for (k, v) in pairs {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

/// Read a `key=value` file: one pair per line, `#` comments and blank lines
/// ignored.
pub fn read_kv(path: &Path) -> Result<Vec<(String, String)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!(
                "line {}: expected key=value, found '{line}'",
                lineno + 1
            ))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}
