//! Structured experiment output: scalars with error estimates, per-point
//! tables, and pass/fail verdicts. Tables serialize to CSV with a fixed float
//! format so identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub name: String,
    pub value: f64,
    /// Error estimate where one applies.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// CSV bytes with floats in `{:.17e}` so values round-trip exactly.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|v| format_float(*v)))?;
        }
        writer.flush()?;
        Ok(writer
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?)
    }
}

fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.17e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Resolved configuration or input parameters.
    pub config: Value,
    pub scalars: Vec<Scalar>,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    pub elapsed_ms: Option<u64>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            config: Value::Object(Default::default()),
            scalars: Vec::new(),
            tables: Vec::new(),
            verdicts: Vec::new(),
            elapsed_ms: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        if let Value::Object(map) = &mut self.config {
            map.insert(
                key.to_string(),
                serde_json::to_value(value).unwrap_or(Value::Null),
            );
        }
    }

    pub fn scalar(&mut self, name: &str, value: f64, error: Option<f64>) {
        self.scalars.push(Scalar {
            name: name.to_string(),
            value,
            error,
        });
    }

    pub fn table(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn verdict(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn get_scalar(&self, name: &str) -> Option<f64> {
        self.scalars.iter().find(|s| s.name == name).map(|s| s.value)
    }

    pub fn get_table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn get_verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Appends everything from `other`, prefixing names with `prefix.`.
    pub fn merge(&mut self, prefix: &str, other: ExperimentReport) {
        for mut s in other.scalars {
            s.name = format!("{prefix}.{}", s.name);
            self.scalars.push(s);
        }
        for mut t in other.tables {
            t.name = format!("{prefix}.{}", t.name);
            self.tables.push(t);
        }
        for mut v in other.verdicts {
            v.name = format!("{prefix}.{}", v.name);
            self.verdicts.push(v);
        }
    }

    /// Writes `report.json`, one CSV per table and `scalars.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        fs::write(&json, serde_json::to_string_pretty(self)?)?;
        written.push(json);

        let mut scalars = csv::Writer::from_writer(Vec::new());
        scalars.write_record(["name", "value", "error"])?;
        for s in &self.scalars {
            scalars.write_record([
                s.name.clone(),
                format_float(s.value),
                s.error.map(format_float).unwrap_or_default(),
            ])?;
        }
        let bytes = scalars
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        let path = dir.join("scalars.csv");
        fs::write(&path, bytes)?;
        written.push(path);

        for table in &self.tables {
            let path = dir.join(format!("{}.csv", table.name));
            fs::write(&path, table.to_csv()?)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_exact_and_stable() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        let first = t.to_csv().unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        let line = text.lines().nth(1).unwrap();
        let parsed: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, vec![0.1, 1.0 / 3.0]);
        assert_eq!(first, t.to_csv().unwrap());
    }

    #[test]
    fn verdict_aggregation() {
        let mut r = ExperimentReport::new("x");
        assert!(r.all_passed());
        r.verdict("a", true, "");
        r.verdict("b", false, "");
        assert!(!r.all_passed());
        assert!(!r.get_verdict("b").unwrap().passed);
    }
}
