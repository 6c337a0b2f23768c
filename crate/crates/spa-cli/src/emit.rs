//! Artifact emission: tables as CSV (RFC 4180, with a convention comment
//! line) or JSON (one object per row), plus a metadata sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::AppError;

/// Statement of the dB conventions, stamped into every artifact.
pub const DB_CONVENTION: &str = "power dB = 10*log10(ratio); squeezing dB = \
10*log10(2*variance) relative to vacuum variance 1/2; dBm referenced to 1 mW";

/// One table cell; the variant fixes the output formatting.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// General value printed with full precision (frequencies in Hz,
    /// powers in W, dimensionless ratios).
    Float(f64),
    /// Decibel value, printed to 4 decimals.
    Db(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v}"),
            Cell::Db(v) => format!("{v:.4}"),
            Cell::Int(v) => format!("{v}"),
            Cell::Bool(v) => format!("{v}"),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n', '\r']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(v) => json!(v),
            Cell::Db(v) => {
                // keep the same 4-decimal rounding as the CSV path
                json!(format!("{v:.4}").parse::<f64>().unwrap())
            }
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// A homogeneous table of results.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Self { headers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = format!("# {DB_CONVENTION}\r\n");
        out.push_str(&self.headers.join(","));
        out.push_str("\r\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push_str("\r\n");
        }
        out
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.headers
                        .iter()
                        .zip(row)
                        .map(|(&h, c)| (h.to_owned(), c.to_json()))
                        .collect(),
                )
            })
            .collect();
        json!({ "db_convention": DB_CONVENTION, "rows": rows })
    }
}

/// Output format of the data artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, AppError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(AppError::Config(format!("unknown output format `{other}`"))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Sidecar contents written next to every data artifact. No timestamps, so
/// identical runs produce identical sidecars.
#[derive(Debug, Serialize)]
pub struct Metadata {
    pub subcommand: String,
    pub version: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub format: &'static str,
    pub rows: usize,
    pub db_convention: &'static str,
}

/// Write the data artifact and its `<path>.meta.json` sidecar.
pub fn write_artifacts(
    path: &Path,
    format: Format,
    table: &Table,
    subcommand: &str,
    seed: u64,
    config_raw: &[u8],
) -> Result<(), AppError> {
    let body = match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&table.to_json()).expect("serializable");
            s.push('\n');
            s
        }
    };
    write_file(path, body.as_bytes())?;

    let meta = Metadata {
        subcommand: subcommand.to_owned(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_sha256: hex::encode(Sha256::digest(config_raw)),
        format: format.extension(),
        rows: table.rows.len(),
        db_convention: DB_CONVENTION,
    };
    let mut meta_path = path.as_os_str().to_owned();
    meta_path.push(".meta.json");
    let mut body = serde_json::to_string_pretty(&meta).expect("serializable");
    body.push('\n');
    write_file(Path::new(&meta_path), body.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| AppError::Io(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(bytes)
        .map_err(|e| AppError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Resolve the artifact path: CLI `--out` beats the config path, and the
/// `SPA_OUT_DIR` environment variable redirects the parent directory.
pub fn resolve_out_path(config_path: &Path, cli_out: Option<&Path>) -> PathBuf {
    let base = cli_out.unwrap_or(config_path).to_path_buf();
    match std::env::var_os("SPA_OUT_DIR") {
        Some(dir) => {
            let file = base.file_name().map(PathBuf::from).unwrap_or_else(|| base.clone());
            PathBuf::from(dir).join(file)
        }
        None => base,
    }
}
