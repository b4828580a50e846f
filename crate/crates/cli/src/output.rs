//! Rendering of command results as `--format json|csv|text`.

use crate::{CliResult, Format};
use serde_json::{Map, Value};

/// A flat result: one record of named values.
pub struct KeyValues {
    pub pairs: Vec<(String, Value)>,
}

impl KeyValues {
    pub fn new() -> Self {
        KeyValues { pairs: Vec::new() }
    }

    pub fn push(mut self, key: &str, value: impl ToValue) -> Self {
        self.pairs.push((key.into(), value.to_value()));
        self
    }
}

/// Converts values while keeping numbers as JSON numbers.
pub trait ToValue {
    fn to_value(self) -> Value;
}

impl ToValue for usize {
    fn to_value(self) -> Value {
        Value::from(self)
    }
}
impl ToValue for u64 {
    fn to_value(self) -> Value {
        Value::from(self)
    }
}
impl ToValue for f64 {
    fn to_value(self) -> Value {
        Value::from(self)
    }
}
impl ToValue for String {
    fn to_value(self) -> Value {
        Value::from(self)
    }
}
impl ToValue for &str {
    fn to_value(self) -> Value {
        Value::from(self)
    }
}
impl ToValue for std::path::Display<'_> {
    fn to_value(self) -> Value {
        Value::from(self.to_string())
    }
}

/// A columnar result.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Default for KeyValues {
    fn default() -> Self {
        Self::new()
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells.to_vec());
    }
}

fn csv_cell(s: &str) -> String {
    // commas inside cells (e.g. error messages) would break the row
    s.replace(',', ";")
}

pub fn emit_key_values(format: Format, kv: &KeyValues) -> CliResult<()> {
    match format {
        Format::Json => {
            let obj: Map<String, Value> = kv.pairs.iter().cloned().collect();
            println!("{}", serde_json::to_string_pretty(&Value::Object(obj)).expect("valid json"));
        }
        Format::Csv => {
            let header: Vec<&str> = kv.pairs.iter().map(|(k, _)| k.as_str()).collect();
            let row: Vec<String> = kv.pairs.iter().map(|(_, v)| csv_cell(&plain(v))).collect();
            println!("{}", header.join(","));
            println!("{}", row.join(","));
        }
        Format::Text => {
            for (k, v) in &kv.pairs {
                println!("{k}: {}", plain(v));
            }
        }
    }
    Ok(())
}

/// JSON scalar rendered without quotes.
fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Emits a table. For JSON, `summary` (an object) is the payload and the
/// rows are attached under `"rows"` unless the summary already carries a
/// structured `"rows"` field.
pub fn emit_table(format: Format, table: &Table, summary: Option<Value>) -> CliResult<()> {
    match format {
        Format::Json => {
            let mut obj = match summary {
                Some(Value::Object(m)) => m,
                Some(other) => Map::from_iter([("summary".to_string(), other)]),
                None => Map::new(),
            };
            if !obj.contains_key("rows") {
                let rows: Vec<Value> = table
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            table
                                .columns
                                .iter()
                                .zip(r)
                                .map(|(c, v)| (c.clone(), Value::from(v.clone())))
                                .collect(),
                        )
                    })
                    .collect();
                obj.insert("rows".into(), Value::Array(rows));
            }
            println!("{}", serde_json::to_string_pretty(&Value::Object(obj)).expect("valid json"));
        }
        Format::Csv => {
            println!("{}", table.columns.join(","));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
                println!("{}", cells.join(","));
            }
        }
        Format::Text => {
            let mut widths: Vec<usize> = table.columns.iter().map(|c| c.len()).collect();
            for row in &table.rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            let render = |cells: &[String]| {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            let header: Vec<String> = table.columns.clone();
            println!("{}", render(&header).trim_end());
            for row in &table.rows {
                println!("{}", render(row).trim_end());
            }
            if let Some(Value::Object(m)) = summary {
                for (k, v) in m {
                    if k != "rows" {
                        println!("{k}: {}", compact(&v));
                    }
                }
            }
        }
    }
    Ok(())
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => serde_json::to_string(other).expect("valid json"),
    }
}
