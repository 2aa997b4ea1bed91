//! Structured pass/fail reports shared by the validators, the law suite, and
//! the command-line front end.
//!
//! Reports are plain data serialized as JSON. Field order is fixed and every
//! float is rounded to twelve significant digits before serialization, so a
//! report is byte-identical across runs with the same inputs and seed.

use serde::Serialize;

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    (x * factor).round() / factor
}

/// Formats with twelve significant digits; used for all numeric CLI output.
pub fn fmt_sig(x: f64) -> f64 {
    round_sig(x, 12)
}

/// Outcome of one law checked over some number of randomized trials.
///
/// `max_violation` is the largest observed excess over the allowed tolerance
/// (zero when the law held everywhere); `witness` describes the worst trial.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub law: String,
    pub trials: usize,
    pub max_violation: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl CheckRecord {
    pub fn passed(law: impl Into<String>, trials: usize) -> Self {
        CheckRecord {
            law: law.into(),
            trials,
            max_violation: 0.0,
            pass: true,
            witness: None,
        }
    }

    /// Folds one observed excess into the record.
    pub fn observe(&mut self, excess: f64, witness: impl FnOnce() -> String) {
        if excess > self.max_violation {
            self.max_violation = excess;
            self.witness = Some(witness());
        }
        if excess > 0.0 {
            self.pass = false;
        }
    }

    pub fn merge(&mut self, other: &CheckRecord) {
        assert_eq!(self.law, other.law);
        if other.max_violation > self.max_violation {
            self.max_violation = other.max_violation;
            self.witness = other.witness.clone();
        }
        self.pass &= other.pass;
    }

    fn rounded(mut self) -> Self {
        self.max_violation = fmt_sig(self.max_violation);
        self
    }
}

/// A named batch of check records.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub subject: String,
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl Report {
    pub fn new(
        subject: impl Into<String>,
        seed: u64,
        trials: usize,
        checks: Vec<CheckRecord>,
    ) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        let checks = checks.into_iter().map(CheckRecord::rounded).collect();
        Report {
            subject: subject.into(),
            seed,
            trials,
            checks,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
