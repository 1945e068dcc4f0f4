//! Structured verification records shared by every probe and by the CLI.
//!
//! A report is a flat list of named checks. Each check carries the measured
//! value, the tolerance it was held to, the signed margin (non-negative means
//! the check passed) and a verdict. The overall verdict is `PASS` iff every
//! check passes.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_margin(margin: f64) -> Self {
        if margin >= 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub margin: f64,
    pub verdict: Verdict,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        let margin = limit - value;
        Self {
            name: name.into(),
            value,
            tolerance: limit,
            margin,
            verdict: Verdict::from_margin(margin),
        }
    }

    /// Passes when `value >= floor`.
    pub fn at_least(name: impl Into<String>, value: f64, floor: f64) -> Self {
        let margin = value - floor;
        Self {
            name: name.into(),
            value,
            tolerance: floor,
            margin,
            verdict: Verdict::from_margin(margin),
        }
    }

    /// Passes when `|value - target| <= tol`.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let margin = tol - (value - target).abs();
        Self {
            name: name.into(),
            value,
            tolerance: tol,
            margin,
            verdict: Verdict::from_margin(margin),
        }
    }

    /// A boolean condition recorded as a check with value 1 (true) or 0.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            margin: if ok { 0.0 } else { -1.0 },
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Environment {
    pub precision: String,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<Environment>,
    /// Operation-specific outcome tag, e.g. `AP_LIM_CONFIRMED` or `PRECONDITION_FAILED`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub data: Map<String, Value>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            scenario: None,
            timestamp: None,
            environment: None,
            status: None,
            checks: Vec::new(),
            notes: Vec::new(),
            data: Map::new(),
            verdict: Verdict::Pass,
        }
    }

    pub fn push(&mut self, check: Check) -> &mut Self {
        if !check.passed() {
            self.verdict = Verdict::Fail;
        }
        self.checks.push(check);
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    pub fn set_status(&mut self, status: impl Into<String>) -> &mut Self {
        self.status = Some(status.into());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.data.insert(key.to_string(), value);
        self
    }

    /// Marks the report failed without a numeric check (e.g. a precondition audit).
    pub fn fail(&mut self) -> &mut Self {
        self.verdict = Verdict::Fail;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Folds the checks of `other` into `self`, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: VerificationReport) {
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.push(c);
        }
        if other.verdict == Verdict::Fail {
            self.verdict = Verdict::Fail;
        }
        for n in other.notes {
            self.notes.push(format!("{prefix}: {n}"));
        }
        if let Some(s) = other.status {
            self.data
                .insert(format!("{prefix}.status"), Value::String(s));
        }
        if !other.data.is_empty() {
            self.data
                .insert(prefix.to_string(), Value::Object(other.data));
        }
    }

    pub fn to_json_pretty(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_verdict_tracks_checks() {
        let mut r = VerificationReport::new("t");
        r.push(Check::at_most("a", 0.5, 1.0));
        assert!(r.passed());
        r.push(Check::at_least("b", 0.5, 1.0));
        assert!(!r.passed());
        assert_eq!(r.check("b").unwrap().margin, -0.5);
    }

    #[test]
    fn nan_fails() {
        let c = Check::at_most("nan", f64::NAN, 1.0);
        assert!(!c.passed());
    }

    #[test]
    fn serializes_verdict_uppercase() {
        let mut r = VerificationReport::new("t");
        r.push(Check::near("x", 1.0, 1.0, 0.0));
        let s = r.to_json_pretty().unwrap();
        assert!(s.contains("\"PASS\""));
    }
}
