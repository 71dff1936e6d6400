//! Experiment reports: CSV bodies (one row per sweep value), JSON summaries,
//! and the per-field baseline comparison.

use std::collections::BTreeMap;
use std::path::Path;

use kummer::{KummerError, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One experiment's results: named scalar checks plus an optional sweep
/// table. Scalar maps are ordered so the JSON is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub passed: bool,
    /// Named scalar results (measured values, slopes, constants).
    pub scalars: BTreeMap<String, f64>,
    /// Named pass/fail verdicts for the individual checks.
    pub checks: BTreeMap<String, bool>,
    /// CSV column names.
    pub columns: Vec<String>,
    /// CSV rows (one per sweep value).
    pub rows: Vec<Vec<f64>>,
    /// Structured attachments (solver reports and the like).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, Value>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            seed,
            passed: true,
            scalars: BTreeMap::new(),
            checks: BTreeMap::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn attach(&mut self, name: &str, value: Value) {
        self.extra.insert(name.to_string(), value);
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.to_string(), value);
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
        self.passed &= ok;
    }

    /// Check that |value| <= bound, recording both.
    pub fn check_le(&mut self, name: &str, value: f64, bound: f64) {
        self.scalar(name, value);
        self.check(&format!("{name}_ok"), value.is_finite() && value <= bound);
    }

    /// Check that value sits within tol of target.
    pub fn check_near(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        self.scalar(name, value);
        self.check(&format!("{name}_ok"), value.is_finite() && (value - target).abs() <= tol);
    }

    /// Deterministic CSV body: header row then fixed-format rows.
    pub fn csv_body(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let csv_path = out_dir.join(format!("{}.csv", self.experiment));
        std::fs::write(csv_path, self.csv_body())?;
        let json_path = out_dir.join(format!("{}.json", self.experiment));
        std::fs::write(json_path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Outcome of a baseline comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareOutcome {
    pub pass: bool,
    /// Field paths that exceeded the tolerance, with (report, baseline).
    pub mismatches: Vec<(String, f64, f64)>,
}

fn walk_numbers(prefix: &str, v: &Value, out: &mut BTreeMap<String, f64>) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                out.insert(prefix.to_string(), f);
            }
        }
        Value::Bool(b) => {
            out.insert(prefix.to_string(), if *b { 1.0 } else { 0.0 });
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                walk_numbers(&format!("{prefix}/{i}"), item, out);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                walk_numbers(&format!("{prefix}/{k}"), item, out);
            }
        }
        _ => {}
    }
}

/// Per-field relative-tolerance comparison of two JSON reports. Fields are
/// matched by path; a missing field on either side is a mismatch.
pub fn compare_baseline(report: &Value, baseline: &Value, tol: f64) -> CompareOutcome {
    let mut a = BTreeMap::new();
    let mut b = BTreeMap::new();
    walk_numbers("", report, &mut a);
    walk_numbers("", baseline, &mut b);
    let mut mismatches = Vec::new();
    for (k, vb) in &b {
        match a.get(k) {
            None => mismatches.push((k.clone(), f64::NAN, *vb)),
            Some(va) => {
                let scale = va.abs().max(vb.abs()).max(1.0);
                if (va - vb).abs() > tol * scale {
                    mismatches.push((k.clone(), *va, *vb));
                }
            }
        }
    }
    for k in a.keys() {
        if !b.contains_key(k) {
            mismatches.push((k.clone(), a[k], f64::NAN));
        }
    }
    CompareOutcome { pass: mismatches.is_empty(), mismatches }
}

/// Load a JSON report from disk.
pub fn load_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(KummerError::from)
}
