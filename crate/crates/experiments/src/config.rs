//! Plain-text configuration: `key = value` lines grouped under `[section]` headers.
//!
//! A key `p` under `[scan]` is looked up as `scan.p`. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{ExperimentError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ExperimentError::Config(format!("line {}: empty key", n + 1)));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(ExperimentError::Config(format!("line {}: duplicate key {full}", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Rejects keys outside `known`, so typos do not silently fall back to defaults.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if !known.contains(&key.as_str()) {
                return Err(ExperimentError::Config(format!("unknown key {key}")));
            }
        }
        Ok(())
    }

    pub fn value_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ExperimentError::Config(format!("{key}: cannot parse {v:?}"))),
        }
    }

    /// Comma-separated list.
    pub fn list_or<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| ExperimentError::Config(format!("{key}: cannot parse {s:?}")))
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_lists() {
        let c = Config::parse("lambda = 1\n# note\n[scan]\np = 1.5, 2 ,3\nops = maximal\n").unwrap();
        assert_eq!(c.value_or("lambda", 0.0).unwrap(), 1.0);
        assert_eq!(c.list_or::<f64>("scan.p", &[]).unwrap(), vec![1.5, 2.0, 3.0]);
        assert_eq!(
            c.list_or::<String>("scan.ops", &[]).unwrap(),
            vec!["maximal".to_string()]
        );
        assert_eq!(c.value_or("scan.steps", 4usize).unwrap(), 4);
        assert!(c.check_known(&["lambda", "scan.p"]).is_err());
        assert!(c.check_known(&["lambda", "scan.p", "scan.ops"]).is_ok());
    }

    #[test]
    fn malformed_lines() {
        assert!(Config::parse("p 2").is_err());
        assert!(Config::parse("p = 2\np = 3").is_err());
        assert!(Config::parse("p = x").unwrap().value_or("p", 1.0).is_err());
    }
}
