//! Verification reports.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::mc::Estimate;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub check_name: String,
    pub exact_value: Option<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub bias_bound: Option<f64>,
    pub z_score: Option<f64>,
    pub pass: bool,
    pub runtime_ms: u64,
    pub seed: u64,
    pub sample_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Absolute slack for zero-variance estimators.
pub fn abs_floor(exact: f64) -> f64 {
    1e-9 * exact.abs().max(1.0)
}

impl VerificationReport {
    /// Compare an estimate with an exact value:
    /// pass iff `|estimate - exact| <= 3 σ + bias`.
    pub fn compare(name: &str, exact: f64, est: &Estimate, bias: Option<f64>, seed: u64) -> Self {
        let diff = est.value - exact;
        let slack = 3.0 * est.std_error + bias.unwrap_or(0.0) + abs_floor(exact);
        // σ below the floor is rounding noise of an exact evaluation.
        let z = if est.std_error > abs_floor(exact) {
            Some(diff / est.std_error)
        } else if diff.abs() <= abs_floor(exact) {
            Some(0.0)
        } else if est.std_error > 0.0 {
            Some(diff / est.std_error)
        } else {
            None
        };
        VerificationReport {
            schema: SCHEMA,
            check_name: name.to_string(),
            exact_value: Some(exact),
            estimate: est.value,
            std_error: est.std_error,
            bias_bound: bias,
            z_score: z,
            pass: diff.abs() <= slack && diff.is_finite(),
            runtime_ms: 0,
            seed,
            sample_count: est.samples,
            note: None,
        }
    }

    /// A check decided by a property-specific predicate.
    pub fn predicate(name: &str, estimate: f64, pass: bool, seed: u64, note: &str) -> Self {
        VerificationReport {
            schema: SCHEMA,
            check_name: name.to_string(),
            exact_value: None,
            estimate,
            std_error: 0.0,
            bias_bound: None,
            z_score: None,
            pass,
            runtime_ms: 0,
            seed,
            sample_count: 0,
            note: Some(note.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Copy with runtime zeroed, for reproducibility comparisons.
    pub fn without_runtime(&self) -> Self {
        VerificationReport { runtime_ms: 0, ..self.clone() }
    }

    pub fn csv_header() -> &'static str {
        "check_name,exact_value,estimate,std_error,bias_bound,z_score,pass,runtime_ms,seed,sample_count"
    }

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.12e}")).unwrap_or_default();
        format!(
            "{},{},{:.12e},{:.12e},{},{},{},{},{},{}",
            self.check_name.replace(',', ";"),
            opt(self.exact_value),
            self.estimate,
            self.std_error,
            opt(self.bias_bound),
            opt(self.z_score),
            self.pass,
            self.runtime_ms,
            self.seed,
            self.sample_count
        )
    }
}

/// Run `f` and store its wall-clock time in the report.
pub fn timed<F>(f: F) -> crate::Result<VerificationReport>
where
    F: FnOnce() -> crate::Result<VerificationReport>,
{
    let t = Instant::now();
    let mut r = f()?;
    r.runtime_ms = t.elapsed().as_millis() as u64;
    Ok(r)
}
