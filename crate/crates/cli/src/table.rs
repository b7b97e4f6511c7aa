//! Rectangular numeric tables and their CSV/JSON forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputTable {
    pub columns: Vec<String>,
    pub units: Vec<String>,
    /// Run parameters and summaries that belong with the numbers.
    pub meta: BTreeMap<String, String>,
    #[serde(serialize_with = "serialize_rows")]
    pub rows: Vec<Vec<f64>>,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn serialize_rows<S: serde::Serializer>(rows: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::{Error, SerializeSeq};
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for row in rows {
        let raw: Vec<Box<RawValue>> = row
            .iter()
            .map(|&v| RawValue::from_string(fmt_num(v)))
            .collect::<std::result::Result<_, _>>()
            .map_err(S::Error::custom)?;
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

impl OutputTable {
    pub fn new(columns: &[&str], units: &[&str]) -> Self {
        OutputTable {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            units: units.iter().map(|s| s.to_string()).collect(),
            meta: BTreeMap::new(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Numerical(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Numerical(format!("non-finite table value {v}")));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.columns.len();
        if n == 0 || self.units.len() != n {
            return Err(CliError::Usage("table needs matching column and unit lists".into()));
        }
        for row in &self.rows {
            if row.len() != n || row.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Usage("table is not rectangular and finite".into()));
            }
        }
        let bad = |s: &String| s.contains([',', '\n', '\r']);
        if self.columns.iter().chain(&self.units).any(bad) {
            return Err(CliError::Usage("column names and units may not contain commas or newlines".into()));
        }
        if self.meta.iter().any(|(k, v)| k.contains(':') || k.contains(['\n', '\r']) || v.contains(['\n', '\r'])) {
            return Err(CliError::Usage("metadata keys may not contain ':' or newlines".into()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "# units: {}", self.units.join(","));
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| CliError::Usage(format!("malformed CSV table: {m}"));
        let mut meta = BTreeMap::new();
        let mut units = None;
        let mut lines = text.lines();
        let header = loop {
            let line = lines.next().ok_or_else(|| bad("missing header".into()))?;
            let Some(rest) = line.strip_prefix("# ") else { break line };
            let (k, v) = rest.split_once(": ").ok_or_else(|| bad(format!("metadata line {line:?}")))?;
            if k == "units" {
                units = Some(v.split(',').map(str::to_string).collect::<Vec<_>>());
            } else {
                meta.insert(k.to_string(), v.to_string());
            }
        };
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let units = units.ok_or_else(|| bad("missing units line".into()))?;
        let mut rows = Vec::new();
        for line in lines {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| bad(format!("{c:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let table = OutputTable { columns, units, meta, rows };
        table.validate()?;
        Ok(table)
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let table: OutputTable =
            serde_json::from_value(value).map_err(|e| CliError::Usage(format!("malformed JSON table: {e}")))?;
        table.validate()?;
        Ok(table)
    }
}
