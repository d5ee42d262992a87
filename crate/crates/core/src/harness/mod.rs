//! Executable checks for the pairwise-equal-curvature theorem, the symmetry
//! theorem and the perimeter identities, with JSON and text reporting.

pub mod corpus;
mod suites;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use suites::{
    endpoint_gaps, run_matrix, symmetry_plane, verify_main_theorem, verify_pairwise_equal_curvature,
    verify_translation_derivative, EndpointGaps, MatrixEntry, VerificationMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: String,
    pub measured: f64,
    pub bound: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub records: Vec<CheckRecord>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            suite: suite.into(),
            records: Vec::new(),
            passed: true,
        }
    }

    /// Adds a record that passes iff `measured <= bound`.
    pub fn check(
        &mut self,
        name: impl Into<String>,
        inputs: impl Into<String>,
        measured: f64,
        bound: f64,
        note: Option<String>,
    ) -> bool {
        let ok = measured <= bound;
        self.records.push(CheckRecord {
            name: name.into(),
            inputs: inputs.into(),
            measured,
            bound,
            status: if ok { Status::Pass } else { Status::Fail },
            note,
        });
        self.passed &= ok;
        ok
    }

    /// Records a check whose hypotheses are unmet; never a failure.
    pub fn not_applicable(&mut self, name: impl Into<String>, inputs: impl Into<String>, why: impl Into<String>) {
        self.records.push(CheckRecord {
            name: name.into(),
            inputs: inputs.into(),
            measured: 0.0,
            bound: 0.0,
            status: Status::NotApplicable,
            note: Some(why.into()),
        });
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.passed &= other.passed;
        self.records.extend(other.records);
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| r.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_table(&self) -> String {
        let rows: Vec<[String; 5]> = self
            .records
            .iter()
            .map(|r| {
                [
                    r.name.clone(),
                    r.inputs.clone(),
                    format!("{:.6e}", r.measured),
                    format!("{:.6e}", r.bound),
                    match r.status {
                        Status::Pass => "pass",
                        Status::Fail => "FAIL",
                        Status::NotApplicable => "n/a",
                    }
                    .to_string(),
                ]
            })
            .collect();
        let head = ["check", "inputs", "measured", "bound", "status"];
        let mut width = head.map(str::len);
        for r in &rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(width)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        let _ = writeln!(out, "suite: {}", self.suite);
        line(&mut out, &head);
        for r in &rows {
            line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let _ = writeln!(out, "verdict: {}", if self.passed { "pass" } else { "FAIL" });
        out
    }
}
