//! Plain CSV input for matrices and vectors, and CSV output of numeric tables.
//!
//! Inputs are comma-separated decimals with an optional header row. Outputs use the
//! shortest representation that parses back to the same `f64`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::prob::{validate_simplex, DistortionMatrix, ProbabilityVector};

/// Slack on the total mass of a distribution read from text.
pub const TEXT_SIMPLEX_TOL: f64 = 1e-9;

fn parse_rows(reader: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            // A non-numeric first row is a header.
            Err(_) if line == 0 => {}
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", line + 1))),
        }
    }
    Ok(rows)
}

/// Parses a distortion matrix; rows are source symbols, columns reproduction symbols.
pub fn parse_matrix(reader: impl Read) -> Result<DistortionMatrix> {
    let rows = parse_rows(reader)?;
    if let Some(bad) = rows.iter().position(|r| r.len() != rows[0].len()) {
        return Err(Error::Parse(format!(
            "row {} has {} entries, expected {}",
            bad + 1,
            rows[bad].len(),
            rows[0].len()
        )));
    }
    DistortionMatrix::from_rows(&rows)
}

/// Parses a vector written either as one row or as one column.
pub fn parse_vector(reader: impl Read) -> Result<Vec<f64>> {
    let rows = parse_rows(reader)?;
    match rows.as_slice() {
        [] => Err(Error::Empty("vector")),
        [single] => Ok(single.clone()),
        many if many.iter().all(|r| r.len() == 1) => Ok(many.iter().map(|r| r[0]).collect()),
        _ => Err(Error::Parse("vector must be a single row or a single column".into())),
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DistortionMatrix> {
    parse_matrix(open(path.as_ref())?)
}

/// Reads a probability vector; it must already lie on the simplex.
pub fn read_distribution(path: impl AsRef<Path>) -> Result<ProbabilityVector> {
    let values = parse_vector(open(path.as_ref())?)?;
    validate_simplex(&values, TEXT_SIMPLEX_TOL)
}

/// Writes a header and numeric rows.
pub fn write_table(writer: impl Write, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Parse(e.to_string());
    wtr.write_record(header).map_err(io_err)?;
    for row in rows {
        wtr.write_record(row.iter().map(|v| format_number(*v))).map_err(io_err)?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Shortest round-trip decimal; infinities as `inf`/`-inf`.
pub fn format_number(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}
