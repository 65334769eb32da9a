//! Plain CSV tables. Floats are written as `{:.16e}` (17 significant digits),
//! which parses back to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use besov_decomp::samplers::SampleMatrix;
use besov_decomp::Grid;

use crate::error::{CliError, CliResult};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))?;
    let inner = w
        .into_inner()
        .map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    inner
        .into_inner()
        .map_err(|e| CliError::io(path, e.into_error()))?
        .sync_all()
        .map_err(|e| CliError::io(path, e))
}

/// Rows of pre-formatted cells under a header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// One draw per row. Scalar chains get `name` as their only column header,
/// vector chains `c0, c1, ...`.
pub fn write_chain(path: &Path, name: &str, m: &SampleMatrix) -> CliResult<()> {
    let mut w = writer(path)?;
    let header: Vec<String> = if m.cols() == 1 {
        vec![name.to_string()]
    } else {
        (0..m.cols()).map(|j| format!("c{j}")).collect()
    };
    w.write_record(&header).map_err(csv_err(path))?;
    let mut cells = Vec::with_capacity(m.cols());
    for row in m.iter_rows() {
        cells.clear();
        cells.extend(row.iter().map(|v| num(*v)));
        w.write_record(&cells).map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_chain(path: &Path) -> CliResult<SampleMatrix> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let cols = r.headers().map_err(csv_err(path))?.len();
    let mut data = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.len() != cols {
            return Err(CliError::parse(path, format!("row {} has {} cells, expected {cols}", i + 1, rec.len())));
        }
        for cell in rec.iter() {
            data.push(
                cell.parse::<f64>()
                    .map_err(|e| CliError::parse(path, format!("row {}: {e}", i + 1)))?,
            );
        }
    }
    Ok(SampleMatrix::from_rows(cols, data))
}

/// Plain-text signal: one value per line in 1D, one comma-separated row of
/// the image per line in 2D (row-major, like the in-memory layout).
pub fn write_signal(path: &Path, grid: Grid, values: &[f64]) -> CliResult<()> {
    assert_eq!(values.len(), grid.len());
    let width = if grid.dim() == 1 { 1 } else { grid.n_side() };
    let mut text = String::with_capacity(values.len() * 24);
    for row in values.chunks(width) {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                text.push(',');
            }
            text.push_str(&num(*v));
        }
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn read_signal(path: &Path, grid: Grid) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let width = if grid.dim() == 1 { 1 } else { grid.n_side() };
    let mut out = Vec::with_capacity(grid.len());
    for (i, line) in text.lines().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(CliError::parse(path, format!("line {} has {} values, expected {width}", i + 1, cells.len())));
        }
        for c in cells {
            out.push(
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))?,
            );
        }
    }
    if out.len() != grid.len() {
        return Err(CliError::parse(path, format!("{} values, expected {}", out.len(), grid.len())));
    }
    Ok(out)
}

/// `metric,value` table as ordered pairs.
pub fn read_pairs(path: &Path) -> CliResult<Vec<(String, String)>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.len() != 2 {
            return Err(CliError::parse(path, "expected two columns"));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
