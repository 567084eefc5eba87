//! Structured outputs: one JSON object per line with a leading `record` key,
//! or comma-separated tables with a header row.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    record: &'a str,
    #[serde(flatten)]
    data: &'a T,
}

/// `{"record": <kind>, ...fields of data}` on one line. Field order follows
/// the declaration order of `data`.
pub fn json_line<T: Serialize>(kind: &str, data: &T) -> Result<String> {
    serde_json::to_string(&Record { record: kind, data })
        .map_err(|e| Error::Numerical(format!("cannot serialize `{kind}` record: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Table {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Dimension {
                expected: self.header.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Numerical(format!("cannot write table: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::text)).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("cannot write table: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
    }

    /// One `kind` record per row, keyed by the header.
    pub fn to_json_lines(&self, kind: &str) -> Result<String> {
        let mut out = String::new();
        for r in &self.rows {
            let mut m = serde_json::Map::new();
            for (k, v) in self.header.iter().zip(r) {
                m.insert(k.clone(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
            }
            out.push_str(&json_line(kind, &m)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn render(&self, format: Format, kind: &str) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json_lines(kind),
        }
    }
}
