//! Report envelope, verdicts and artifact writers.
//!
//! Reports hold no wall-clock data, so equal configs give byte-identical files.
//! Timings go to the `timings.json` sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// Acceptance-criterion identifier, e.g. "4" or "5(b)".
    pub criterion: String,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: &str, check: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            criterion: criterion.to_string(),
            check: check.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub outputs: Value,
    pub artifacts: Vec<String>,
    pub verdicts: Vec<Verdict>,
}

impl ReportEnvelope {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            outputs: Value::Null,
            artifacts: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Phase timings, written next to the report.
#[derive(Debug, Default)]
pub struct Timings {
    phases: BTreeMap<String, f64>,
    order: Vec<String>,
}

impl Timings {
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record(phase, start.elapsed().as_secs_f64());
        out
    }

    pub fn record(&mut self, phase: &str, seconds: f64) {
        if !self.phases.contains_key(phase) {
            self.order.push(phase.to_string());
        }
        *self.phases.entry(phase.to_string()).or_default() += seconds;
    }

    pub fn to_json(&self, command: &str, total: f64) -> Value {
        let phases: Vec<Value> = self
            .order
            .iter()
            .map(|p| serde_json::json!({"phase": p, "seconds": self.phases[p]}))
            .collect();
        serde_json::json!({"command": command, "total_seconds": total, "phases": phases})
    }
}

/// Output location: relative paths land in the output directory.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &Path) -> PathBuf {
        if name.is_absolute() {
            name.to_path_buf()
        } else {
            self.root.join(name)
        }
    }

    /// Artifact name as recorded in reports: relative to the output directory when inside it.
    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root).unwrap_or(path).display().to_string()
    }

    pub fn write_json<T: Serialize>(&self, name: &Path, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_csv<R: Serialize>(&self, name: &Path, rows: &[R]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_without_verdicts_passes() {
        let env = ReportEnvelope::new("suite", Value::Null);
        assert!(env.all_passed());
        let mut env = env;
        env.verdicts.push(Verdict::new("4", "exponent", false, "x"));
        assert!(!env.all_passed());
    }

    #[test]
    fn artifacts_are_recorded_relative_to_the_output_directory() {
        let out = OutDir { root: PathBuf::from("/tmp/run") };
        assert_eq!(out.relative(&out.path(Path::new("gs.json"))), "gs.json");
        assert_eq!(out.relative(Path::new("/elsewhere/gs.json")), "/elsewhere/gs.json");
    }

    #[test]
    fn timings_accumulate_in_order() {
        let mut t = Timings::default();
        t.record("b", 1.0);
        t.record("a", 2.0);
        t.record("b", 0.5);
        let j = t.to_json("x", 3.5);
        assert_eq!(j["phases"][0]["phase"], "b");
        assert_eq!(j["phases"][0]["seconds"], 1.5);
    }
}
