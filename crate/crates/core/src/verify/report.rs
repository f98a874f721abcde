use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
}

impl Threshold {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Threshold {
            name: name.into(),
            measured,
            relation: Relation::AtMost,
            limit,
            passed: measured <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Threshold {
            name: name.into(),
            measured,
            relation: Relation::AtLeast,
            limit,
            passed: measured >= limit,
        }
    }
}

/// A table of raw measurements, written as `series.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(columns: &[&str]) -> Self {
        Series {
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

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:e}").expect("string write");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyInputs {
    pub config_digest: String,
    pub seeds: Vec<u64>,
    pub parameters: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub name: String,
    /// The quantitative statement under test, in plain words.
    pub claim: String,
    pub inputs: StudyInputs,
    pub fitted: BTreeMap<String, f64>,
    pub thresholds: Vec<Threshold>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
    pub series: Series,
}

impl StudyReport {
    pub fn new(name: &str, claim: &str, inputs: StudyInputs) -> Self {
        StudyReport {
            name: name.into(),
            claim: claim.into(),
            inputs,
            fitted: BTreeMap::new(),
            thresholds: Vec::new(),
            notes: Vec::new(),
            verdict: Verdict::Inconclusive,
            series: Series::default(),
        }
    }

    pub fn fit(&mut self, name: impl Into<String>, value: f64) {
        if value.is_finite() {
            self.fitted.insert(name.into(), value);
        }
    }

    pub fn check(&mut self, t: Threshold) {
        self.thresholds.push(t);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Pass iff every threshold holds; `inconclusive` downgrades an otherwise passing report.
    pub fn finish(mut self, inconclusive: Option<String>) -> Self {
        let all = self.thresholds.iter().all(|t| t.passed);
        self.verdict = match (all, inconclusive) {
            (false, _) => Verdict::Fail,
            (true, Some(reason)) => {
                self.notes.push(reason);
                Verdict::Inconclusive
            }
            (true, None) => Verdict::Pass,
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn threshold(&self, name: &str) -> Option<&Threshold> {
        self.thresholds.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `report.json` and `series.csv` into `dir` (created if needed).
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join("report.json"), self.to_json().as_bytes())?;
        write_atomic(&dir.join("series.csv"), self.series.to_csv().as_bytes())
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path.file_name().ok_or_else(|| {
        io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{} has no file name", path.display()),
        )
    })?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}
