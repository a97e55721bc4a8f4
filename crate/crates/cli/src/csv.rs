//! Plot-ready CSV with a provenance header. Floats use 17 significant digits
//! so that a rerun of the same config reproduces the file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.file);
        self.rows.push(row);
    }

    pub fn render(&self, config_sha256: &str) -> String {
        let mut out = format!("# config_sha256={config_sha256}\n{}\n", self.header.join(","));
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Float(v) => write!(out, "{}", format_float(*v)).unwrap(),
                    Cell::Text(s) => out.push_str(&escape(s)),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path, config_sha256: &str) -> Result<()> {
        let path = dir.join(&self.file);
        std::fs::write(&path, self.render(config_sha256)).map_err(|e| CliError::io(&path, e))
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_and_header_carries_hash() {
        let mut t = Table::new("x.csv", &["k", "v", "note"]);
        let v = 0.1 + 0.2;
        t.push(vec![3usize.into(), v.into(), "a,b".into()]);
        let text = t.render("abc");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_sha256=abc");
        assert_eq!(lines[1], "k,v,note");
        let fields: Vec<&str> = lines[2].splitn(3, ',').collect();
        assert_eq!(fields[0], "3");
        assert_eq!(fields[1].parse::<f64>().unwrap(), v);
        assert_eq!(fields[2], "\"a,b\"");
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn non_finite_values() {
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }
}
