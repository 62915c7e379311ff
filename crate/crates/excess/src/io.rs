//! Plain-text formats: series CSVs and long-format curve tables.
//!
//! Lines starting with `#` are comments. A comment of the form
//! `# key=value` is a directive; the readers understand `dt`, `quantity`
//! and `units`, everything else is provenance for humans.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use excess_core::corrsum::{CurveFamily, EpsGrid, Quantity};
use excess_core::series::ScalarSeries;

use crate::error::{CliError, Result};

/// Converts nats to bits.
pub const BITS_PER_NAT: f64 = std::f64::consts::LOG2_E;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn directive<'a>(line: &'a str) -> Option<(&'a str, &'a str)> {
    let (k, v) = line.strip_prefix('#')?.trim().split_once('=')?;
    Some((k.trim(), v.trim()))
}

/// Reads one column of a CSV file as a series.
pub fn load_series(path: &Path, column: usize) -> Result<ScalarSeries> {
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
    parse_series(&read(path)?, column, label)
}

/// Parses series text; see [`load_series`].
pub fn parse_series(text: &str, column: usize, label: &str) -> Result<ScalarSeries> {
    let mut dt = 1.0;
    let mut samples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(("dt", v)) = directive(line) {
                dt = v.parse().map_err(|_| CliError::ParseError {
                    row: n + 1,
                    column: 0,
                    text: v.to_string(),
                })?;
            }
            continue;
        }
        let cell = line.split(',').nth(column).map(str::trim).unwrap_or("");
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => samples.push(v),
            _ => {
                return Err(CliError::ParseError {
                    row: n + 1,
                    column,
                    text: cell.to_string(),
                })
            }
        }
    }
    Ok(ScalarSeries::new(samples, dt, label)?)
}

/// Comment block: `# key=value` lines in the given order.
pub fn header(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k}={v}");
    }
    out
}

/// Writes columns of equal length below a provenance header. The data has
/// no header row so the file loads directly with [`load_series`].
pub fn write_series(path: &Path, provenance: &[(&str, String)], columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = header(provenance);
    out.reserve(rows * columns.len() * 20);
    for i in 0..rows {
        for (j, col) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", col[i]);
        }
        out.push('\n');
    }
    write(path, &out)
}

fn in_units(q: Quantity, v: f64, bits: bool) -> f64 {
    if bits && q.is_information() {
        v * BITS_PER_NAT
    } else {
        v
    }
}

/// Long-format table `m,epsilon,value,count`; undefined values and missing
/// counts are empty cells.
pub fn curve_csv(family: &CurveFamily, provenance: &[(&str, String)], bits: bool) -> String {
    let q = family.quantity();
    let mut pairs = vec![
        ("quantity", q.name().to_string()),
        ("units", if bits && q.is_information() { "bits" } else { "nats" }.to_string()),
    ];
    pairs.extend(provenance.iter().cloned());
    let mut out = header(&pairs);
    out.push_str("m,epsilon,value,count\n");
    let eps = family.grid().values();
    for (row, &m) in family.orders().iter().enumerate() {
        for (i, e) in eps.iter().enumerate() {
            let _ = write!(out, "{m},{e},");
            if let Some(v) = family.values()[row][i] {
                let _ = write!(out, "{}", in_units(q, v, bits));
            }
            out.push(',');
            if let Some(c) = family.counts() {
                let _ = write!(out, "{}", c[row][i]);
            }
            out.push('\n');
        }
    }
    out
}

/// Reads a table written by [`curve_csv`]. Values in bits are converted
/// back to nats.
pub fn read_curve(path: &Path) -> Result<CurveFamily> {
    parse_curve(&read(path)?)
}

/// Parses a curve table; see [`read_curve`].
pub fn parse_curve(text: &str) -> Result<CurveFamily> {
    let mut quantity = None;
    let mut bits = false;
    let mut rows: Vec<(usize, f64, Option<f64>)> = Vec::new();
    let mut seen_header = false;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            match directive(line) {
                Some(("quantity", v)) => quantity = Quantity::from_name(v),
                Some(("units", v)) => bits = v == "bits",
                _ => {}
            }
            continue;
        }
        if !seen_header {
            seen_header = true;
            continue;
        }
        let bad = |column: usize, text: &str| CliError::ParseError {
            row: n + 1,
            column,
            text: text.to_string(),
        };
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let cell = |c: usize| cells.get(c).copied().unwrap_or("");
        let m = cell(0).parse().map_err(|_| bad(0, cell(0)))?;
        let eps = cell(1).parse().map_err(|_| bad(1, cell(1)))?;
        let value = match cell(2) {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| bad(2, s))?),
        };
        rows.push((m, eps, value));
    }
    let quantity = quantity.ok_or_else(|| CliError::Config("curve table lacks a `# quantity=` line".into()))?;
    let mut orders: Vec<usize> = rows.iter().map(|r| r.0).collect();
    orders.dedup();
    let Some(&first) = orders.first() else {
        return Err(excess_core::Error::EmptyGrid.into());
    };
    let eps: Vec<f64> = rows.iter().take_while(|r| r.0 == first).map(|r| r.1).collect();
    let grid = EpsGrid::from_values(eps)?;
    if rows.len() != orders.len() * grid.len() {
        return Err(excess_core::Error::GridMismatch.into());
    }
    let back = |v: f64| if bits && quantity.is_information() { v / BITS_PER_NAT } else { v };
    let values = rows
        .chunks(grid.len())
        .map(|c| c.iter().map(|r| r.2.map(back)).collect())
        .collect();
    Ok(CurveFamily::new(quantity, orders, grid, values)?)
}
