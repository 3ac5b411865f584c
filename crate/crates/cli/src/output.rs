use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A named table of string-formatted cells.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().context("flushing CSV")
    }

    fn to_json(&self) -> Vec<u8> {
        // numbers stay numbers when they parse as such
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| {
                        let cell = v
                            .parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .and_then(|_| serde_json::from_str::<Value>(v).ok())
                            .unwrap_or_else(|| Value::String(v.clone()));
                        (c.to_string(), cell)
                    })
                    .collect::<serde_json::Map<_, _>>();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({ "schema_version": SCHEMA_VERSION, "columns": self.columns, "rows": rows });
        let mut out = serde_json::to_vec_pretty(&doc).expect("table serializes");
        out.push(b'\n');
        out
    }
}

/// Shortest round-trip text of a float, with an exponent when very small or large.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
    bytes: usize,
}

/// Everything a run writes goes through here, into one directory.
pub struct OutputDir {
    root: PathBuf,
    format: Format,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path, format: Format) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if name.contains('/') || name.contains('\\') || name.starts_with('.') {
            bail!("refusing to write `{name}` outside the output directory");
        }
        let path = self.root.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// `stem.csv` or `stem.json` depending on the chosen format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<String> {
        let (name, bytes) = match self.format {
            Format::Csv => (format!("{stem}.csv"), table.to_csv()?),
            Format::Json => (format!("{stem}.json"), table.to_json()),
        };
        self.write(&name, &bytes)?;
        Ok(name)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, manifest: Value) -> Result<PathBuf> {
        let mut manifest = manifest;
        manifest["schema_version"] = json!(SCHEMA_VERSION);
        manifest["files"] = serde_json::to_value(&self.files)?;
        let path = self.root.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
