//! Structured verification reports.
//!
//! Every verifier in this crate reports its work the same way: a list of
//! named checks, each with the largest violation it measured, the tolerance
//! it was measured against, and an optional witness describing the first
//! failing instance.  Reports serialize to JSON for machine consumption and
//! pretty-print for the terminal.

use serde::{Deserialize, Serialize};
use std::fmt;

/// One named check inside a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckLine {
    /// What was checked, e.g. `"unital"` or `"moment d=4"`.
    pub name: String,
    /// Largest absolute violation measured across the sweep.
    pub max_violation: f64,
    /// Tolerance the violation was compared against.
    pub tol: f64,
    /// `max_violation <= tol`.
    pub passed: bool,
    /// Human-readable description of the first failing instance, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, max_violation: f64, tol: f64) -> Self {
        CheckLine {
            name: name.into(),
            max_violation,
            tol,
            passed: max_violation <= tol,
            witness: None,
        }
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        if !self.passed {
            self.witness = Some(witness.into());
        }
        self
    }

    /// A check that records a precomputed pass/fail verdict rather than a
    /// numeric comparison (e.g. "candidate was rejected upstream").
    pub fn verdict(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        let detail = detail.into();
        CheckLine {
            name: name.into(),
            max_violation: if passed { 0.0 } else { f64::INFINITY },
            tol: 0.0,
            passed,
            witness: if detail.is_empty() { None } else { Some(detail) },
        }
    }
}

/// Outcome of a verification task: a titled list of checks plus free-form
/// key/value facts (computed values worth reporting even when all checks
/// pass, e.g. an index value or a Fisher information).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    /// What was verified (scenario name, task name, ...).
    pub title: String,
    /// Individual checks, in the order they ran.
    pub checks: Vec<CheckLine>,
    /// Computed facts: `(label, rendered value)` pairs.
    #[serde(default)]
    pub facts: Vec<(String, String)>,
    /// Conjunction of all check verdicts.
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(title: impl Into<String>) -> Self {
        VerificationReport {
            title: title.into(),
            checks: Vec::new(),
            facts: Vec::new(),
            passed: true,
        }
    }

    pub fn push(&mut self, check: CheckLine) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn fact(&mut self, label: impl Into<String>, value: impl fmt::Display) {
        self.facts.push((label.into(), value.to_string()));
    }

    /// Merge another report in as a titled section.
    pub fn absorb(&mut self, sub: VerificationReport) {
        for mut check in sub.checks {
            check.name = format!("{}: {}", sub.title, check.name);
            self.push(check);
        }
        for (label, value) in sub.facts {
            self.facts.push((format!("{}: {}", sub.title, label), value));
        }
    }

    /// Largest violation over all checks (0 when there are none).
    pub fn max_violation(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_violation)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ==", self.title)?;
        for check in &self.checks {
            writeln!(
                f,
                "  [{}] {:<44} max |err| = {:.3e}  (tol {:.1e})",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.max_violation,
                check.tol
            )?;
            if let Some(w) = &check.witness {
                writeln!(f, "         witness: {}", w)?;
            }
        }
        for (label, value) in &self.facts {
            writeln!(f, "  {} = {}", label, value)?;
        }
        writeln!(
            f,
            "  overall: {}",
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}
