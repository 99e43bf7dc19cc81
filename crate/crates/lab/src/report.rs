//! Experiment reports: JSON for machines, CSV tables for plotting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Column-labelled numeric table; `None` cells are written as empty CSV fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Non-finite values become `None` so the JSON stays parseable.
    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table `{}`", self.name);
        self.rows
            .push(row.into_iter().map(|v| v.filter(|x| x.is_finite())).collect());
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Some(v)).collect());
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.map(|x| format!("{x:?}")).unwrap_or_default()))?;
        }
        w.flush().map_err(|e| LabError::io(path, e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedExponent {
    pub name: String,
    #[serde(with = "nan_as_null")]
    pub value: f64,
    #[serde(with = "nan_as_null")]
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Within,
}

/// A named check with its raw value, threshold and signed margin (positive
/// means passing with that much room).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassFlag {
    pub name: String,
    pub passed: bool,
    #[serde(with = "nan_as_null")]
    pub value: f64,
    pub comparison: Comparison,
    /// `[threshold]` for one-sided checks, `[lo, hi]` for `within`.
    pub threshold: Vec<f64>,
    #[serde(with = "nan_as_null")]
    pub margin: f64,
}

/// JSON has no NaN; an undefined statistic is stored as `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl PassFlag {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        let margin = threshold - value;
        Self {
            name: name.into(),
            passed: margin >= 0.0,
            value,
            comparison: Comparison::AtMost,
            threshold: vec![threshold],
            margin,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        let margin = value - threshold;
        Self {
            name: name.into(),
            passed: margin >= 0.0,
            value,
            comparison: Comparison::AtLeast,
            threshold: vec![threshold],
            margin,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let margin = (value - lo).min(hi - value);
        Self {
            name: name.into(),
            passed: margin >= 0.0,
            value,
            comparison: Comparison::Within,
            threshold: vec![lo, hi],
            margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub experiment_seed: u64,
    pub n_values: Vec<usize>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub name: String,
    /// Per-point statistics; the first table is the main CSV.
    pub tables: Vec<Table>,
    pub fitted_exponents: Vec<FittedExponent>,
    pub pass_flags: Vec<PassFlag>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.pass_flags.iter().all(|f| f.passed)
    }

    pub fn flag(&self, name: &str) -> Option<&PassFlag> {
        self.pass_flags.iter().find(|f| f.name == name)
    }

    pub fn exponent(&self, name: &str) -> Option<&FittedExponent> {
        self.fitted_exponents.iter().find(|f| f.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Structural checks applied to every report: a known schema version,
    /// one margin per flag and rectangular tables.
    pub fn check_schema(&self) -> std::result::Result<(), String> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(format!("schema_version {}", self.schema_version));
        }
        if self.tables.is_empty() {
            return Err("no tables".into());
        }
        for t in &self.tables {
            if t.rows.iter().any(|r| r.len() != t.columns.len()) {
                return Err(format!("table `{}` is not rectangular", t.name));
            }
        }
        for f in &self.pass_flags {
            let arity = match f.comparison {
                Comparison::Within => 2,
                _ => 1,
            };
            if f.threshold.len() != arity {
                return Err(format!("flag `{}` has a malformed threshold", f.name));
            }
            if f.passed != (f.margin >= 0.0) {
                return Err(format!("flag `{}` disagrees with its margin", f.name));
            }
        }
        Ok(())
    }

    /// Writes `<name>.json` and one `<name>[_<table>].csv` per table.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let json_path = dir.join(format!("{}.json", self.name));
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&json_path, text + "\n").map_err(|e| LabError::io(&json_path, e))?;
        let mut out = vec![json_path];
        for (k, t) in self.tables.iter().enumerate() {
            let path = if k == 0 {
                dir.join(format!("{}.csv", self.name))
            } else {
                dir.join(format!("{}_{}.csv", self.name, t.name))
            };
            t.write_csv(&path)?;
            out.push(path);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_margins() {
        let f = PassFlag::at_most("a", 1.0, 3.0);
        assert!(f.passed && f.margin == 2.0);
        let f = PassFlag::at_least("b", 1.0, 3.0);
        assert!(!f.passed && f.margin == -2.0);
        let f = PassFlag::within("c", -0.7, -0.8, -0.55);
        assert!(f.passed && (f.margin - 0.1).abs() < 1e-12);
        // A NaN statistic never passes.
        assert!(!PassFlag::at_most("d", f64::NAN, 1.0).passed);
    }

    #[test]
    fn non_finite_cells_become_empty() {
        let mut t = Table::new("t", &["x", "y"]);
        t.push(vec![Some(1.0), Some(f64::NAN)]);
        assert_eq!(t.rows[0], vec![Some(1.0), None]);
    }
}
