//! Tidy result tables with a `# key=value` preamble, written as CSV or JSON.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SweepTable {
    /// Ordered metadata, emitted as `# key=value` lines ahead of the CSV.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self { meta: Vec::new(), columns: columns.iter().map(|c| c.as_ref().to_owned()).collect(), rows: Vec::new() }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.set_meta(key, value);
        self
    }

    /// Replaces an existing key in place, otherwise appends.
    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string().replace(['\n', '\r'], " ");
        match self.meta.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.meta.push((key, value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(format!("row has {} values for {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Output(e.to_string());
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}").map_err(io)?;
        }
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        let fail = |e: csv::Error| Error::Output(e.to_string());
        writer.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|&x| format_value(x))).map_err(fail)?;
        }
        writer.flush().map_err(io)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Output(e.to_string()))
    }

    /// `{"meta": {...}, "columns": [...], "rows": [[...], ...]}`; non-finite
    /// values become strings.
    pub fn to_json(&self) -> Value {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let rows: Vec<Value> =
            self.rows.iter().map(|r| Value::Array(r.iter().map(|&x| json_number(x)).collect())).collect();
        json!({ "meta": meta, "columns": self.columns, "rows": rows })
    }
}

/// Shortest round-trip representation; `inf`, `-inf` and `NaN` spelled out.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn json_number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(format_value(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = SweepTable::new(&["tau", "snr"]).with_meta("backend", "full").with_meta("dt_s", 1e-7);
        t.push(vec![0.5, 1.25e-3]).unwrap();
        t.push(vec![2.0, f64::INFINITY]).unwrap();
        assert!(t.push(vec![1.0]).is_err());
        let text = t.to_csv_string().unwrap();
        assert_eq!(text, "# backend=full\n# dt_s=0.0000001\ntau,snr\r\n0.5,0.00125\r\n2,inf\r\n");
        assert_eq!(t.column("snr").unwrap()[0], 1.25e-3);
    }

    #[test]
    fn values_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 42.0] {
            assert_eq!(format_value(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn meta_replaces_in_place() {
        let mut t = SweepTable::new(&["x"]).with_meta("a", 1).with_meta("b", 2);
        t.set_meta("a", "multi\nline");
        assert_eq!(t.meta, vec![("a".into(), "multi line".into()), ("b".into(), "2".into())]);
        assert_eq!(t.to_json()["meta"]["b"], "2");
    }
}
