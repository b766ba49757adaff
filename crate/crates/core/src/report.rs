//! Machine-readable check results, one JSON object per line.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

/// Tolerance of checks that only record a value.
pub const INFORMATIONAL: f64 = f64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    /// Non-finite values are written as `null`.
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_nan")]
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub context: Map<String, Value>,
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl CheckReport {
    /// Passes iff `residual ≤ tol`; NaN never passes.
    pub fn new(check: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self { check: check.into(), residual, tol, pass: residual <= tol, context: Map::new() }
    }

    pub fn informational(check: impl Into<String>, value: f64) -> Self {
        Self::new(check, value, INFORMATIONAL)
    }

    /// Boolean outcome recorded as residual `0` or `1` with tolerance `0`.
    pub fn verdict(check: impl Into<String>, ok: bool) -> Self {
        Self::new(check, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.context.insert(key.to_owned(), value.into());
        self
    }

    pub fn with_context(mut self, context: &Map<String, Value>) -> Self {
        for (k, v) in context {
            self.context.entry(k.clone()).or_insert_with(|| v.clone());
        }
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report values are serializable")
    }
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// JSON lines, each terminated by a newline.
pub fn to_json_lines(reports: &[CheckReport]) -> String {
    reports.iter().map(|r| r.to_json_line() + "\n").collect()
}
