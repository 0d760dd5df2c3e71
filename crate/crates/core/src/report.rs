//! CSV and JSON report files.
//!
//! A report is an ordered list of summary fields plus an optional table.
//! Both formats carry the same values: floats are written in their
//! shortest round-trip form and non-finite values become empty/null.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub summary: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

/// Converts a float to a JSON value, mapping non-finite values to null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.summary.push((key.to_string(), value.into()));
        self
    }

    pub fn float(&mut self, key: &str, value: f64) -> &mut Self {
        self.summary.push((key.to_string(), num(value)));
        self
    }

    pub fn set_columns(&mut self, columns: &[&str]) -> &mut Self {
        self.columns = columns.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Flattens a serializable struct's fields into the summary.
    pub fn extend_from<T: serde::Serialize>(&mut self, value: &T) {
        if let Ok(Value::Object(map)) = serde_json::to_value(value) {
            for (k, v) in map {
                if !v.is_array() && !v.is_object() {
                    self.summary.push((k, v));
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut summary = Map::new();
        for (k, v) in &self.summary {
            summary.insert(k.clone(), v.clone());
        }
        let mut doc = Map::new();
        doc.insert("summary".into(), Value::Object(summary));
        if !self.columns.is_empty() {
            doc.insert(
                "columns".into(),
                Value::Array(self.columns.iter().cloned().map(Value::String).collect()),
            );
            doc.insert(
                "rows".into(),
                Value::Array(self.rows.iter().cloned().map(Value::Array).collect()),
            );
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("report serializes");
        s.push('\n');
        s
    }

    /// Summary as `# key,value` comment lines, then the table.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# {},{}", k, csv_cell(v));
        }
        if !self.columns.is_empty() {
            out.push_str(&self.columns.join(","));
            out.push('\n');
            for row in &self.rows {
                let cells: Vec<String> = row.iter().map(csv_cell).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Writes `<dir>/<stem>.<ext>` and returns the path.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{stem}.{}", format.extension()));
        std::fs::write(&path, self.render(format))?;
        Ok(path)
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Report {
        let mut r = Report::new();
        r.field("name", "demo").float("max", 1.5e-12).float("bad", f64::NAN);
        r.set_columns(&["id", "value", "label"]);
        r.push_row(vec![json!(0), num(0.1), json!("a,b")]);
        r.push_row(vec![json!(1), num(-2.0), json!("c")]);
        r
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        assert_eq!(
            csv,
            "# name,demo\n# max,1.5e-12\n# bad,\nid,value,label\n0,0.1,\"a,b\"\n1,-2.0,c\n"
        );
    }

    #[test]
    fn json_and_csv_carry_the_same_numbers() {
        let r = sample();
        let doc: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(doc["summary"]["max"], json!(1.5e-12));
        assert_eq!(doc["summary"]["bad"], Value::Null);
        assert_eq!(doc["rows"][0][1].as_f64(), Some(0.1));
        let csv = r.to_csv();
        let line = csv.lines().nth(4).unwrap();
        assert_eq!(line.split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }
}
