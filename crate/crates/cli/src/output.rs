//! Result tables and their CSV / JSON renderings.
//!
//! Floats are written with 17 significant digits so every value read back
//! parses to the same `f64`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Bool(b) => b.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) if x.is_finite() => {
                Value::Number(Number::from_str(&format_float(*x)).expect("formatted float parses"))
            }
            Cell::Float(x) => Value::String(format_float(*x)),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
}

impl Metadata {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Metadata {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl ResultTable {
    pub fn new(metadata: Metadata, columns: &[&'static str]) -> Self {
        ResultTable {
            metadata,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Appends a row given as `(column, value)` pairs; unnamed columns stay
    /// empty.
    pub fn push(&mut self, cells: Vec<(&'static str, Cell)>) {
        let mut row = vec![Cell::Empty; self.columns.len()];
        for (name, value) in cells {
            let j = self
                .columns
                .iter()
                .position(|c| *c == name)
                .unwrap_or_else(|| panic!("unknown column {name}"));
            row[j] = value;
        }
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Metadata as `# key: value` comment lines, then a header and the rows.
    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let config = serde_json::to_string(&m.config.canonical_json()).expect("config serializes");
        writeln!(out, "# command: {}", m.command).unwrap();
        writeln!(out, "# version: {}", m.version).unwrap();
        writeln!(out, "# seed: {}", m.seed).unwrap();
        writeln!(out, "# config_hash: {}", m.config_hash).unwrap();
        writeln!(out, "# config: {config}").unwrap();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    obj.insert(c.to_string(), v.json());
                }
                Value::Object(obj)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("metadata".into(), serde_json::to_value(&self.metadata).expect("metadata serializes"));
        doc.insert("columns".into(), Value::from(self.columns.clone()));
        doc.insert("rows".into(), Value::Array(rows));
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("table serializes");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        let mut t = ResultTable::new(Metadata::new("test", &ExperimentConfig::default()), &["a", "b", "c"]);
        t.push(vec![("a", 0.1.into()), ("c", "x,y".into())]);
        t.push(vec![("b", 3u64.into()), ("a", f64::INFINITY.into())]);
        t
    }

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn csv_layout() {
        let text = table().to_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# command: test");
        assert!(lines[4].starts_with("# config: {"));
        assert_eq!(lines[5], "a,b,c");
        assert_eq!(lines[6], "1.0000000000000001e-1,,\"x,y\"");
        assert_eq!(lines[7], "inf,3,");
    }

    #[test]
    fn json_metadata_round_trips() {
        let t = table();
        let doc: Value = serde_json::from_str(&t.to_json()).unwrap();
        let meta: Metadata = serde_json::from_value(doc["metadata"].clone()).unwrap();
        assert_eq!(meta, t.metadata);
        assert_eq!(meta.config.hash(), meta.config_hash);
        let a = doc["rows"][0]["a"].as_f64().unwrap();
        assert_eq!(a, 0.1);
        assert!(doc["rows"][0]["b"].is_null());
    }
}
