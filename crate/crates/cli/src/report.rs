//! Report assembly. Output is a pure function of the configuration: no
//! timestamps, host names or timings are written.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Format};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Finite floats as JSON numbers, infinities as the string `inf`.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Serializes the report in the configured format.
pub fn render(config: &ExperimentConfig, table: &Table) -> Result<Vec<u8>, CliError> {
    let config_json = serde_json::to_value(config).map_err(|e| CliError::Internal(e.to_string()))?;
    match config.format.unwrap_or_default() {
        Format::Csv => {
            let mut out = Vec::new();
            writeln!(out, "# flatlab {}", flatlab::VERSION).expect("write to memory");
            writeln!(out, "# config: {config_json}").expect("write to memory");
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.columns).map_err(|e| CliError::Internal(e.to_string()))?;
            for row in &table.rows {
                w.write_record(row.iter().map(cell))
                    .map_err(|e| CliError::Internal(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = table
                        .columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.clone()))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let doc = json!({
                "tool": "flatlab",
                "version": flatlab::VERSION,
                "config": config_json,
                "rows": rows,
            });
            let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes to `config.out`, or standard output when unset.
pub fn emit(config: &ExperimentConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &config.out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![json!(1), num(f64::INFINITY)]);
        let cfg = ExperimentConfig {
            seed: Some(4),
            ..Default::default()
        };
        let text = String::from_utf8(render(&cfg, &t).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# flatlab "));
        assert_eq!(lines[1], "# config: {\"seed\":4}");
        assert_eq!(&lines[2..], &["a,b", "1,inf"]);
    }

    #[test]
    fn json_rows_are_objects() {
        let mut t = Table::new(&["x"]);
        t.push(vec![json!("y")]);
        let cfg = ExperimentConfig {
            format: Some(Format::Json),
            ..Default::default()
        };
        let doc: Value = serde_json::from_slice(&render(&cfg, &t).unwrap()).unwrap();
        assert_eq!(doc["rows"][0]["x"], "y");
        assert_eq!(doc["config"]["format"], "json");
    }
}
