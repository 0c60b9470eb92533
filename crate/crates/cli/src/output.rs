//! Tabular output as CSV or `{meta, records}` JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Num(v.unwrap_or(f64::NAN))
    }
}

impl Cell {
    /// 17 significant digits for floats, so values round-trip exactly.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // NaN and infinities have no JSON representation
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: &mut impl Write, command: &str) -> io::Result<()> {
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        writeln!(out, "# twistlab {} {command} generated_unix={stamp}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self, meta: Value) -> Value {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| ((*c).to_owned(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "meta": meta, "records": records })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub fn emit(table: &Table, format: Format, path: Option<&Path>, command: &str, meta: Value) -> Result<()> {
    let mut sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Csv => table.write_csv(&mut sink, command)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &table.to_json(meta))?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_csv() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 16.0] {
            let s = Cell::Num(v).csv();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(Cell::Num(f64::NAN).csv(), "NaN");
    }

    #[test]
    fn json_mirrors_rows() {
        let mut t = Table::new(&["N", "x", "flag"]);
        t.push(vec![4usize.into(), f64::NAN.into(), "ok".into()]);
        let v = t.to_json(json!({}));
        assert_eq!(v["records"][0]["N"], 4);
        assert!(v["records"][0]["x"].is_null());
        assert_eq!(v["records"][0]["flag"], "ok");
    }
}
