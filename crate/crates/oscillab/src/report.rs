//! Experiment reports: a parameter table, per-run numeric rows, and
//! pass/fail gates, emitted deterministically as CSV (rows) and JSON
//! (full metadata). Identical config and seed must reproduce the files
//! byte for byte, so all float formatting is fixed-width scientific.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

/// One measured value, tagged with the resolution and seed it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub resolution: usize,
    pub seed: u64,
    pub value: f64,
}

/// One acceptance rule: the observed statistic against its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub name: String,
    pub observed: f64,
    pub bound: f64,
    /// `"<="` or `">="`, how `observed` relates to `bound` on pass.
    pub direction: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
    pub rows: Vec<ReportRow>,
    pub gates: Vec<GateResult>,
}

impl NormReport {
    pub fn new(experiment: &str) -> Self {
        NormReport {
            experiment: experiment.to_string(),
            params: BTreeMap::new(),
            rows: Vec::new(),
            gates: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn push(&mut self, label: &str, resolution: usize, seed: u64, value: f64) {
        self.rows.push(ReportRow {
            label: label.to_string(),
            resolution,
            seed,
            value,
        });
    }

    /// Gate passing when `observed <= bound`.
    pub fn gate_le(&mut self, name: &str, observed: f64, bound: f64) -> bool {
        let pass = observed <= bound;
        self.gates.push(GateResult {
            name: name.to_string(),
            observed,
            bound,
            direction: "<=".to_string(),
            pass,
        });
        pass
    }

    /// Gate passing when `observed >= bound`.
    pub fn gate_ge(&mut self, name: &str, observed: f64, bound: f64) -> bool {
        let pass = observed >= bound;
        self.gates.push(GateResult {
            name: name.to_string(),
            observed,
            bound,
            direction: ">=".to_string(),
            pass,
        });
        pass
    }

    pub fn all_pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }

    pub fn row_value(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.value)
    }

    pub fn to_json_string(&self) -> anyhow::Result<String> {
        let mut s = serde_json::to_string_pretty(self).context("serialize report")?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv_string(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["label", "resolution", "seed", "value"])?;
        for row in &self.rows {
            w.write_record([
                row.label.as_str(),
                &row.resolution.to_string(),
                &row.seed.to_string(),
                &format!("{:.12e}", row.value),
            ])?;
        }
        let bytes = w.into_inner().context("flush csv")?;
        Ok(String::from_utf8(bytes).context("csv utf8")?)
    }

    /// Write `<experiment>.csv` and `<experiment>.json` under `dir`,
    /// creating it if needed. Returns the two paths.
    pub fn write_files(&self, dir: &Path) -> anyhow::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))?;
        let csv_path = dir.join(format!("{}.csv", self.experiment));
        let json_path = dir.join(format!("{}.json", self.experiment));
        fs::write(&csv_path, self.to_csv_string()?)
            .with_context(|| format!("write {}", csv_path.display()))?;
        fs::write(&json_path, self.to_json_string()?)
            .with_context(|| format!("write {}", json_path.display()))?;
        Ok((csv_path, json_path))
    }

    /// One console line per gate plus a verdict line.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&format!(
                "gate {:40} {}  ({:.6e} {} {:.6e})\n",
                g.name,
                if g.pass { "PASS" } else { "FAIL" },
                g.observed,
                g.direction,
                g.bound,
            ));
        }
        out.push_str(&format!(
            "{}: {}\n",
            self.experiment,
            if self.all_pass() { "PASS" } else { "FAIL" }
        ));
        out
    }
}
