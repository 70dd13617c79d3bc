use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::args::Format;
use crate::manifest::RunManifest;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, v)| ((*k).to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Writes a result. JSON carries the manifest inline; CSV puts it in
/// `PATH.manifest.json` next to `--out PATH`, or on standard error.
pub fn emit(
    table: &Table,
    extra: Option<(&str, Value)>,
    manifest: &RunManifest,
    format: Format,
    out: Option<&Path>,
) -> io::Result<()> {
    let manifest_json = serde_json::to_value(manifest).map_err(io::Error::other)?;
    match format {
        Format::Json => {
            let mut obj = Map::new();
            obj.insert("manifest".into(), manifest_json);
            obj.insert("rows".into(), table.to_json_rows());
            if let Some((k, v)) = extra {
                obj.insert(k.into(), v);
            }
            let mut text =
                serde_json::to_string_pretty(&Value::Object(obj)).map_err(io::Error::other)?;
            text.push('\n');
            write_to(out, &text)
        }
        Format::Csv => {
            write_to(out, &table.to_csv())?;
            let mut text =
                serde_json::to_string_pretty(&manifest_json).map_err(io::Error::other)?;
            text.push('\n');
            match out {
                Some(path) => fs::write(manifest_path(path), text),
                None => io::stderr().write_all(text.as_bytes()),
            }
        }
    }
}

pub fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    name.into()
}

fn write_to(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_seventeen_significant_digits() {
        let mut t = Table::new(&["x", "ok"]);
        t.push(vec![Cell::Num(0.1), Cell::Bool(true)]);
        let csv = t.to_csv();
        assert_eq!(csv, "x,ok\n1.0000000000000001e-1,true\n");
        let back: f64 = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(back.to_bits(), 0.1f64.to_bits());
    }

    #[test]
    fn text_cells_are_quoted_when_needed() {
        assert_eq!(Cell::Text("a,b".into()).csv(), "\"a,b\"");
        assert_eq!(Cell::Text("plain".into()).csv(), "plain");
    }

    #[test]
    fn json_rows_keep_column_order() {
        let mut t = Table::new(&["z", "a"]);
        t.push(vec![Cell::Int(1), Cell::Num(f64::NAN)]);
        let v = t.to_json_rows();
        let obj = v[0].as_object().unwrap();
        assert_eq!(obj.keys().collect::<Vec<_>>(), ["z", "a"]);
        assert!(obj["a"].is_null());
    }
}
