//! Artifact writers. Floats are printed with 17 significant digits so runs
//! round-trip exactly; non-finite values become `null` in JSON and `NaN`,
//! `inf`, `-inf` in CSV.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use glap::numeric::sci17;
use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::CliError;

struct Sci17;

impl Formatter for Sci17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(sci17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, Sci17);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(path)
            .map_err(|e| CliError::Invalid(format!("output directory {}: {e}", path.display())))?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::write(self.path(name), contents)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, &to_json(value)?)
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.path(name)).map_err(csv_err)?;
        w.write_record(&table.header).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Internal(e.to_string())
}

/// A CSV table whose cells are already formatted.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells.into_iter().map(|c| c.to_string()).collect());
    }
}

pub enum Cell {
    F(f64),
    I(usize),
    B(bool),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(x) => f.write_str(&sci17(*x)),
            Cell::I(i) => write!(f, "{i}"),
            Cell::B(b) => write!(f, "{b}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct S {
        a: f64,
        b: f64,
        c: Vec<f64>,
    }

    #[test]
    fn seventeen_digits_and_null() {
        let s = to_json(&S {
            a: 0.1,
            b: f64::NAN,
            c: vec![f64::INFINITY, -2.5, 0.0],
        })
        .unwrap();
        assert_eq!(
            s,
            "{\"a\":1.0000000000000001e-1,\"b\":null,\"c\":[null,-2.5000000000000000e0,0.0000000000000000e0]}\n"
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }
}
