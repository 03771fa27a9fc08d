//! Report tables, PASS/FAIL checks and their on-disk form:
//! `report.csv`, `summary.json`, `run.log` and any attachments.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Stated in every report: the weighted bounds carry non-explicit constants.
pub const CONSTANT_NOTE: &str =
    "constants in the weighted bounds are not explicit; scans check exponents and finiteness only";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// Passes when `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value >= bound,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {}: {:.6e} (bound {:.6e})",
            self.name, self.value, self.bound
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    pub extra: Map<String, Value>,
    pub log: Vec<String>,
    /// Additional files, by name.
    pub attachments: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn check(&mut self, check: Check) {
        self.note(check.to_string());
        self.checks.push(check);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        let line = line.into();
        log::info!("{}: {line}", self.command);
        self.log.push(line);
    }

    /// True when there is at least one check and all pass.
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn csv(&self) -> String {
        let mut out = format!("# {CONSTANT_NOTE}\n{}\n", self.columns.join(","));
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary(&self, config: &Map<String, Value>) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "note": CONSTANT_NOTE,
            "config": config,
            "pass": self.passed(),
            "checks": self.checks,
            "results": self.extra,
        })
    }

    pub fn write(&self, dir: &Path, config: &Map<String, Value>) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), self.csv())?;
        let summary = serde_json::to_string_pretty(&self.summary(config))?;
        fs::write(dir.join("summary.json"), summary + "\n")?;
        let mut log = self.log.join("\n");
        log.push('\n');
        fs::write(dir.join("run.log"), log)?;
        for (name, bytes) in &self.attachments {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Fixed-width scientific notation, so reports compare textually across runs.
pub fn num(v: f64) -> String {
    format!("{v:.10e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_and_verdict() {
        let mut r = Report::new("demo", &["a", "b"]);
        r.row(vec![num(1.0), num(2.5)]);
        assert!(!r.passed());
        r.check(Check::at_most("slope", 0.9, 1.15));
        r.check(Check::at_least("eta", 0.6, 0.5));
        assert!(r.passed());
        r.check(Check::at_most("nan", f64::NAN, 1.0));
        assert!(!r.passed());
        let dir = tempfile::tempdir().unwrap();
        r.write(dir.path(), &Map::new()).unwrap();
        let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert_eq!(csv.lines().nth(1), Some("a,b"));
        assert_eq!(csv.lines().nth(2), Some("1.0000000000e0,2.5000000000e0"));
        let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(v["pass"], false);
        assert_eq!(v["checks"].as_array().unwrap().len(), 3);
        assert!(fs::read_to_string(dir.path().join("run.log"))
            .unwrap()
            .contains("FAIL nan"));
    }
}
