//! CSV and JSON emission with the provenance header every file carries.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const SOFTWARE: &str = concat!("owcsim ", env!("CARGO_PKG_VERSION"));

/// `#`-prefixed lines written above every CSV header.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub fingerprint: String,
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(fingerprint: String) -> Self {
        Provenance { fingerprint, notes: Vec::new() }
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }
}

/// Rows are written as given; `header` names the columns.
pub fn csv_bytes(prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("# fingerprint: {}\n# software: {SOFTWARE}\n", prov.fingerprint).as_bytes());
    for n in &prov.notes {
        out.extend_from_slice(format!("# {n}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).expect("in-memory write");
    for r in rows {
        debug_assert_eq!(r.len(), header.len());
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv(path: &Path, prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    fs::write(path, csv_bytes(prov, header, rows)).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Shortest round-trip formatting, so files are byte-stable.
pub fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}
