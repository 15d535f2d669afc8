use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::cli::Format;

/// Command output before formatting.
pub struct Report {
    pub json: Value,
    pub csv_headers: Vec<String>,
    pub csv_rows: Vec<Vec<Value>>,
    /// `(check, passed)` pairs consulted by `--verify`.
    pub checks: Vec<(String, bool)>,
}

impl Report {
    pub fn new<T: Serialize>(body: &T) -> Result<Self> {
        Ok(Report {
            json: serde_json::to_value(body)?,
            csv_headers: Vec::new(),
            csv_rows: Vec::new(),
            checks: Vec::new(),
        })
    }

    /// CSV rows taken from flat serializable records; nested fields are
    /// written as JSON text.
    pub fn with_rows<T: Serialize>(mut self, rows: &[T]) -> Result<Self> {
        for r in rows {
            let Value::Object(map) = serde_json::to_value(r)? else {
                anyhow::bail!("CSV rows must serialize to objects");
            };
            if self.csv_headers.is_empty() {
                self.csv_headers = map.keys().cloned().collect();
            }
            self.csv_rows.push(map.into_iter().map(|(_, v)| v).collect());
        }
        Ok(self)
    }

    pub fn check(mut self, name: impl Into<String>, passed: bool) -> Self {
        self.checks.push((name.into(), passed));
        self
    }
}

/// Rounds to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round15).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => {
                let a = x.abs();
                if a == 0.0 || (1e-4..1e15).contains(&a) {
                    format!("{x}")
                } else {
                    format!("{x:e}")
                }
            }
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

pub fn render(report: &Report, format: Format, meta: Option<Value>) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut body = report.json.clone();
            round_value(&mut body);
            if let (Some(meta), Value::Object(map)) = (meta, &mut body) {
                map.insert("meta".into(), meta);
            }
            let mut out = serde_json::to_vec_pretty(&body)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&report.csv_headers)?;
            for row in &report.csv_rows {
                let cells: Vec<String> = row
                    .iter()
                    .map(|v| {
                        let mut v = v.clone();
                        round_value(&mut v);
                        csv_cell(&v)
                    })
                    .collect();
                w.write_record(&cells)?;
            }
            Ok(w.into_inner().context("flushing CSV")?)
        }
    }
}

pub fn write(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn meta(command: &str) -> Value {
    let mut m = Map::new();
    m.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), Value::from(command));
    m.insert("argv".into(), Value::from(std::env::args().skip(1).collect::<Vec<_>>()));
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    m.insert("unix_time".into(), Value::from(secs));
    Value::Object(m)
}
