//! Run reports: named diagnostics with tolerances, diagnostic time series,
//! provenance and the inventory of files a run wrote.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "stefan-run-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Hard checks decide the run's exit status; soft ones are recorded only.
    pub hard: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

impl Diagnostic {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(measured: f64, tolerance: f64) -> Self {
        Self::new(measured, tolerance, measured <= tolerance)
    }

    /// Passes when `measured >= tolerance`.
    pub fn at_least(measured: f64, tolerance: f64) -> Self {
        Self::new(measured, tolerance, measured >= tolerance)
    }

    pub fn new(measured: f64, tolerance: f64, pass: bool) -> Self {
        let mut d = Self { measured, tolerance, pass, hard: true, notes: String::new() };
        if !measured.is_finite() {
            d.measured = f64::MAX;
            d.pass = false;
            d.notes = format!("measured value was {measured}");
        }
        d
    }

    pub fn soft(mut self) -> Self {
        self.hard = false;
        self
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        let notes = notes.into();
        if self.notes.is_empty() {
            self.notes = notes;
        } else {
            self.notes = format!("{}; {notes}", self.notes);
        }
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// SHA-256 of the canonical configuration JSON.
    pub config_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    pub diagnostics: BTreeMap<String, Diagnostic>,
    #[serde(default)]
    pub series: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default)]
    pub files: Vec<FileEntry>,
    /// Set when the run stopped early; the message of the fatal error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            command: command.into(),
            diagnostics: BTreeMap::new(),
            series: BTreeMap::new(),
            provenance: Provenance::default(),
            files: Vec::new(),
            failure: None,
        }
    }

    pub fn add(&mut self, name: impl Into<String>, d: Diagnostic) {
        self.diagnostics.insert(name.into(), d);
    }

    pub fn add_series(&mut self, name: impl Into<String>, values: Vec<f64>) {
        let values = values.into_iter().map(|v| if v.is_finite() { v } else { f64::MAX }).collect();
        self.series.insert(name.into(), values);
    }

    /// Absorbs another report's diagnostics and series under a name prefix.
    pub fn merge(&mut self, prefix: &str, other: RunReport) {
        for (k, v) in other.diagnostics {
            self.diagnostics.insert(format!("{prefix}{k}"), v);
        }
        for (k, v) in other.series {
            self.series.insert(format!("{prefix}{k}"), v);
        }
        if self.failure.is_none() {
            self.failure = other.failure;
        }
    }

    /// True when no hard diagnostic failed and the run did not abort.
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.diagnostics.values().all(|d| d.pass || !d.hard)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.diagnostics.iter().filter(|(_, d)| d.hard && !d.pass).map(|(k, _)| k.as_str()).collect()
    }

    /// Structural checks beyond what deserialisation enforces.
    pub fn validate(&self) -> Result<()> {
        if self.schema != REPORT_SCHEMA {
            return Err(Error::Parse(format!("unknown report schema {:?}", self.schema)));
        }
        if self.command.is_empty() {
            return Err(Error::Parse("report command is empty".into()));
        }
        for (name, d) in &self.diagnostics {
            if name.is_empty() {
                return Err(Error::Parse("diagnostic with empty name".into()));
            }
            if !d.measured.is_finite() || !d.tolerance.is_finite() {
                return Err(Error::Parse(format!("diagnostic {name} is not finite")));
            }
        }
        for (name, s) in &self.series {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("series {name} is not finite")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.files {
            if f.path.is_empty() || f.path.starts_with('/') || f.path.contains("..") {
                return Err(Error::Parse(format!("file path {:?} is not run-relative", f.path)));
            }
            if f.sha256.len() != 64 || !f.sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(Error::Parse(format!("bad digest for {}", f.path)));
            }
            if !seen.insert(&f.path) {
                return Err(Error::Parse(format!("{} listed twice", f.path)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunReport = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        r.validate()?;
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_validation() {
        let mut r = RunReport::new("solve1d");
        r.add("front_error", Diagnostic::at_most(0.004, 0.01));
        r.add("note", Diagnostic::at_least(0.5, 1.0).soft());
        r.add_series("s", vec![1.0, 2.0]);
        assert!(r.passed());
        let back = RunReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);

        r.files.push(FileEntry { path: "../x".into(), bytes: 0, sha256: "0".repeat(64) });
        assert!(r.validate().is_err());
    }

    #[test]
    fn non_finite_measurement_fails() {
        let d = Diagnostic::at_most(f64::NAN, 1.0);
        assert!(!d.pass && d.measured.is_finite());
        let mut r = RunReport::new("x");
        r.add("bad", d);
        assert_eq!(r.failed_checks(), vec!["bad"]);
        assert!(!r.passed());
    }
}
