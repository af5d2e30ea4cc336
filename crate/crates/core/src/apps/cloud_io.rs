//! ASCII point clouds, one `x y z` triple per line.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Parses whitespace-separated triples. Blank lines and lines starting with
/// `#` are skipped.
pub fn parse_xyz(text: &str) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 coordinates", lineno + 1)));
        }
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number '{f}'", lineno + 1)))?;
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() / 3;
    Ok(Array2::from_shape_vec((n, 3), values).expect("three values per row"))
}

pub fn format_xyz(points: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in points.rows() {
        writeln!(out, "{} {} {}", row[0], row[1], row[2]).expect("writing to a string");
    }
    out
}

pub fn read_xyz(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    parse_xyz(&std::fs::read_to_string(path)?)
}

pub fn write_xyz(path: impl AsRef<Path>, points: &Array2<f64>) -> Result<()> {
    std::fs::write(path, format_xyz(points))?;
    Ok(())
}
