//! Acceptance records and scan rows.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubCheck {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl SubCheck {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { name: name.into(), measured, threshold, passed: measured <= threshold }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { name: name.into(), measured, threshold, passed: measured >= threshold }
    }

    /// Passes when `|measured - target| <= tol`; the stored threshold is the tolerance.
    pub fn near(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Self { name: name.into(), measured, threshold: tol, passed: (measured - target).abs() <= tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRecord {
    pub id: String,
    /// Headline value: the worst sub-check's `measured`.
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_s: Option<f64>,
    pub details: Vec<SubCheck>,
}

impl AcceptanceRecord {
    /// Passes iff every sub-check passes; the headline is the first failing check, else the first.
    pub fn from_checks(id: impl Into<String>, details: Vec<SubCheck>) -> Self {
        let passed = !details.is_empty() && details.iter().all(|c| c.passed);
        let head = details.iter().find(|c| !c.passed).or(details.first());
        let (measured, threshold) = head.map(|c| (c.measured, c.threshold)).unwrap_or((f64::NAN, f64::NAN));
        Self { id: id.into(), measured, threshold, passed, runtime_s: None, details }
    }

    pub fn without_runtime(&self) -> Self {
        Self { runtime_s: None, ..self.clone() }
    }
}

/// One CSV line: `experiment,n,N,L,param,seed,lhs,rhs,ratio`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub param: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Row {
    pub fn new(param: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs == 0.0 { if lhs == 0.0 { 0.0 } else { f64::INFINITY } } else { lhs / rhs };
        Self { param: param.into(), lhs, rhs, ratio }
    }
}

/// What a suite hands back to the driver.
#[derive(Clone, Debug, Default)]
pub struct SuiteOutput {
    pub rows: Vec<Row>,
    pub records: Vec<AcceptanceRecord>,
}
