//! Tables and summaries, written as CSV or JSON to standard output or to
//! files in the `--out` directory.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::args::Format;
use crate::error::CliError;

/// Version of every JSON document the tool writes.
pub const SCHEMA_VERSION: u32 = 1;

/// A named numeric table.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, command: &str) -> Value {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::from(r.iter().map(|&v| number(v)).collect::<Vec<_>>())).collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "name": self.name,
            "columns": self.columns,
            "rows": rows,
        })
    }
}

/// Shortest representation that reads back to the same float.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// JSON number, or null for non-finite values.
pub fn number(v: f64) -> Value {
    if v.is_finite() { json!(v) } else { Value::Null }
}

/// Summary document with the common header fields. Floats are rounded to
/// 12 significant digits, below the accuracy of the computed quantities.
pub fn summary(command: &str, fields: Map<String, Value>) -> Value {
    let mut doc = Map::new();
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    doc.insert("command".into(), json!(command));
    doc.extend(fields);
    let mut doc = Value::Object(doc);
    round_floats(&mut doc);
    doc
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r: f64 = format!("{x:.11e}").parse().expect("formatted float");
            *v = json!(r);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub struct Sink<'a> {
    pub command: &'a str,
    pub out: Option<&'a Path>,
    pub format: Format,
}

impl Sink<'_> {
    pub fn table(&self, table: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.emit(&format!("{}.csv", table.name), &table.to_csv()),
            Format::Json => self.emit(&format!("{}.json", table.name), &pretty(&table.to_json(self.command))?),
        }
    }

    pub fn summary(&self, name: &str, doc: &Value) -> Result<(), CliError> {
        self.emit(&format!("{name}.json"), &pretty(doc)?)
    }

    fn emit(&self, file: &str, body: &str) -> Result<(), CliError> {
        match self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
                let path = dir.join(file);
                std::fs::write(&path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
            None => std::io::stdout()
                .lock()
                .write_all(body.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}"))),
        }
    }
}

fn pretty(doc: &Value) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(doc).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new("x", vec!["t".into(), "p".into()]);
        t.push(vec![0.0, 0.25]);
        t.push(vec![1.0, f64::INFINITY]);
        assert_eq!(t.to_csv(), "t,p\n0,0.25\n1,inf\n");
        let j = t.to_json("renewal");
        assert_eq!(j["rows"][1][1], Value::Null);
        assert_eq!(j["schema_version"], json!(SCHEMA_VERSION));
    }

    #[test]
    fn summaries_round_to_twelve_digits() {
        let mut fields = Map::new();
        fields.insert("mean_inf".into(), json!(3.499999999999999));
        fields.insert("p".into(), json!([0.1 + 0.2, 7]));
        let doc = summary("stopped", fields);
        assert_eq!(doc["mean_inf"], json!(3.5));
        assert_eq!(doc["p"], json!([0.3, 7]));
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }
}
