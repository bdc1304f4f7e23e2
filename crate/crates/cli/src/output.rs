//! Tables and how they are written to disk.
//!
//! Floats use Rust's shortest round-trip formatting, so identical results
//! give identical bytes. CSV uses `\n` line endings and always has a header.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn to_csv_field(&self) -> String {
        match self {
            // Debug is the shortest string that parses back to the same
            // value, with an exponent for very large or small magnitudes.
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns)
            .expect("writing to memory cannot fail");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv_field))
                .expect("writing to memory cannot fail");
        }
        let bytes = w.into_inner().expect("writing to memory cannot fail");
        String::from_utf8(bytes).expect("all fields are UTF-8")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tables always serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Path of a companion file: `out.csv` with suffix `meta.json` becomes
/// `out.csv.meta.json`.
pub fn companion_path(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

/// Extra table written next to the main output, e.g. density profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    /// Inserted before the format extension: `profile` gives
    /// `out.csv.profile.csv`.
    pub label: String,
    pub table: Table,
}

/// Everything recorded in the `.meta.json` sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub format: Format,
    pub config_sha256: String,
    pub rows: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, Value>,
    pub versions: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("pairlind".to_string(), pairlind::VERSION.to_string()),
        (
            "pairlind-cli".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
    ])
}

fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents)
}

/// Writes the main table, its attachments and the sidecar. Returns every
/// path written, main output first.
pub fn write_outputs(
    out: &Path,
    format: Format,
    table: &Table,
    attachments: &[Attachment],
    meta: &Metadata,
) -> io::Result<Vec<PathBuf>> {
    let mut written = vec![out.to_path_buf()];
    write_file(out, &table.render(format))?;
    for a in attachments {
        let path = companion_path(out, &format!("{}.{}", a.label, format.name()));
        write_file(&path, &a.table.render(format))?;
        written.push(path);
    }
    let meta_path = companion_path(out, "meta.json");
    let mut json = serde_json::to_string_pretty(meta).expect("metadata always serializes");
    json.push('\n');
    write_file(&meta_path, &json)?;
    written.push(meta_path);
    Ok(written)
}
