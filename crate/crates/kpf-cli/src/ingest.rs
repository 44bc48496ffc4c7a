//! CSV ingestion and emission for the three tabular schemas:
//! points `x1..xd`, snapshot pairs `x1..xd,y1..yd`, trajectories `t,x1..xd`.
//! Headers are mandatory, rows must be rectangular, and every cell must be a
//! finite decimal number; violations are reported with file and line.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::CliError;
use crate::report::fmt_f64;

pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// False when some time stamp fails to increase strictly; surfaced as a
    /// warning flag in reports, not as an error.
    pub monotone: bool,
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::new(format!("{}: {e}", path.display())))
}

fn row_error(path: &Path, e: csv::Error) -> CliError {
    CliError::new(format!("{}: {e}", path.display()))
}

fn parse_cell(path: &Path, line: u64, col_name: &str, cell: &str) -> Result<f64, CliError> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        CliError::new(format!(
            "{}:{line}: column `{col_name}`: invalid number {cell:?}",
            path.display()
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::new(format!(
            "{}:{line}: column `{col_name}`: non-finite number {cell:?}",
            path.display()
        )));
    }
    Ok(v)
}

fn expect_header(path: &Path, got: &csv::StringRecord, want: &[String]) -> Result<(), CliError> {
    let got_vec: Vec<&str> = got.iter().map(str::trim).collect();
    if got_vec.len() != want.len() || got_vec.iter().zip(want).any(|(g, w)| *g != w) {
        return Err(CliError::new(format!(
            "{}:1: header mismatch: expected `{}`, found `{}`",
            path.display(),
            want.join(","),
            got_vec.join(",")
        )));
    }
    Ok(())
}

fn point_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

/// Number of `x`-columns declared by a header of the form `x1..xd`.
fn point_width(path: &Path, header: &csv::StringRecord) -> Result<usize, CliError> {
    let d = header.len();
    if d == 0 {
        return Err(CliError::new(format!(
            "{}:1: empty header; expected columns x1..xd",
            path.display()
        )));
    }
    expect_header(path, header, &point_names("x", d))?;
    Ok(d)
}

pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| row_error(path, e))?.clone();
    let d = point_width(path, &header)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| row_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(d);
        for (j, cell) in rec.iter().enumerate() {
            row.push(parse_cell(path, line, &header[j], cell)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::new(format!(
            "{}: no data rows after the header",
            path.display()
        )));
    }
    Ok(rows)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(Vec<f64>, Vec<f64>)>, CliError> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| row_error(path, e))?.clone();
    if header.len() < 2 || header.len() % 2 != 0 {
        return Err(CliError::new(format!(
            "{}:1: pair files need an even column count x1..xd,y1..yd; found {} columns",
            path.display(),
            header.len()
        )));
    }
    let d = header.len() / 2;
    let mut want = point_names("x", d);
    want.extend(point_names("y", d));
    expect_header(path, &header, &want)?;

    let mut pairs = Vec::new();
    let mut seen_sources: HashSet<Vec<u64>> = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| row_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(2 * d);
        for (j, cell) in rec.iter().enumerate() {
            row.push(parse_cell(path, line, &header[j], cell)?);
        }
        let x = row[..d].to_vec();
        let y = row[d..].to_vec();
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if !seen_sources.insert(key) {
            return Err(CliError::new(format!(
                "{}:{line}: duplicate source point; every x row must be unique",
                path.display()
            )));
        }
        pairs.push((x, y));
    }
    if pairs.is_empty() {
        return Err(CliError::new(format!(
            "{}: no data rows after the header",
            path.display()
        )));
    }
    Ok(pairs)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| row_error(path, e))?.clone();
    if header.len() < 2 {
        return Err(CliError::new(format!(
            "{}:1: trajectory files need columns t,x1..xd; found {} columns",
            path.display(),
            header.len()
        )));
    }
    let d = header.len() - 1;
    let mut want = vec!["t".to_string()];
    want.extend(point_names("x", d));
    expect_header(path, &header, &want)?;

    let mut times = Vec::new();
    let mut states = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| row_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(d + 1);
        for (j, cell) in rec.iter().enumerate() {
            row.push(parse_cell(path, line, &header[j], cell)?);
        }
        times.push(row[0]);
        states.push(row[1..].to_vec());
    }
    if times.len() < 2 {
        return Err(CliError::new(format!(
            "{}: trajectories need at least 2 rows",
            path.display()
        )));
    }
    let monotone = times.windows(2).all(|w| w[0] < w[1]);
    Ok(Trajectory { times, states, monotone })
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::new(format!("cannot write {}: {e}", path.display())))
}

pub fn write_points(path: &Path, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let d = rows.first().map_or(0, Vec::len);
    write_rows(path, &point_names("x", d), rows)
}

pub fn write_pairs(path: &Path, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<(), CliError> {
    let d = pairs.first().map_or(0, |p| p.0.len());
    let mut header = point_names("x", d);
    header.extend(point_names("y", d));
    let rows: Vec<Vec<f64>> = pairs
        .iter()
        .map(|(x, y)| x.iter().chain(y).copied().collect())
        .collect();
    write_rows(path, &header, &rows)
}

pub fn write_trajectory(path: &Path, times: &[f64], states: &[Vec<f64>]) -> Result<(), CliError> {
    let d = states.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend(point_names("x", d));
    let rows: Vec<Vec<f64>> = times
        .iter()
        .zip(states)
        .map(|(t, x)| std::iter::once(*t).chain(x.iter().copied()).collect())
        .collect();
    write_rows(path, &header, &rows)
}

/// Generic table writer for command outputs (Gram matrices, eigenvalues,
/// certificates). Same formatting discipline as the ingestion schemas.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    write_rows(path, header, rows)
}
