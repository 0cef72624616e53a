//! Rendering of result tables as aligned text, CSV or JSON.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Provenance block written with every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: Option<u64>,
    /// SHA-256 of the input bytes, hex encoded.
    pub input_digest: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, input: &[u8]) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            seed: None,
            input_digest: hex::encode(Sha256::digest(input)),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }
}

/// `x` with `digits` significant digits, in plain decimal notation unless
/// the magnitude is extreme.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let e = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&e) {
        return format!("{:.*e}", digits - 1, x);
    }
    let decimals = (digits as i32 - 1 - e).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64, usize),
    Text(String),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn opt(x: Option<f64>, digits: usize) -> Cell {
        x.map_or(Cell::Empty, |x| Cell::Num(x, digits))
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x, d) => fmt_sig(*x, *d),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x, _) if x.is_finite() => json!(x),
            Cell::Num(..) | Cell::Empty => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::render).collect())
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].len())
                    .chain([self.columns[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, items: Vec<String>, numeric: Vec<bool>| {
            let parts: Vec<String> = items
                .iter()
                .zip(&widths)
                .zip(numeric)
                .map(|((s, &w), num)| {
                    if num {
                        format!("{s:>w$}")
                    } else {
                        format!("{s:<w$}")
                    }
                })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        let numeric_col: Vec<bool> = (0..self.columns.len())
            .map(|j| self.rows.iter().all(|r| !matches!(r[j], Cell::Text(_))))
            .collect();
        line(
            &mut out,
            self.columns.iter().map(|c| c.to_string()).collect(),
            numeric_col.clone(),
        );
        for row in cells {
            line(&mut out, row, numeric_col.clone());
        }
        out
    }

    pub fn to_csv(&self, manifest: &RunManifest) -> Result<String, CliError> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            wtr.write_record(row.iter().map(Cell::render))
                .map_err(csv_err)?;
        }
        let body = wtr.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        let mut out = manifest_comment(manifest);
        out.push_str(&String::from_utf8(body).map_err(|e| CliError::Io(e.to_string()))?);
        Ok(out)
    }

    pub fn rows_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// One `#`-prefixed line carrying the manifest as compact JSON.
pub fn manifest_comment(manifest: &RunManifest) -> String {
    format!(
        "# manifest: {}\n",
        serde_json::to_string(manifest).expect("manifest serializes")
    )
}

pub fn to_json(manifest: &RunManifest, body: Value) -> String {
    let mut doc = Map::new();
    doc.insert(
        "manifest".into(),
        serde_json::to_value(manifest).expect("manifest serializes"),
    );
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
    s.push('\n');
    s
}

pub fn render(format: Format, manifest: &RunManifest, table: &Table) -> Result<String, CliError> {
    match format {
        Format::Table => Ok(table.to_text()),
        Format::Csv => table.to_csv(manifest),
        Format::Json => Ok(to_json(
            manifest,
            json!({ "columns": table.columns, "rows": table.rows_json() }),
        )),
    }
}
