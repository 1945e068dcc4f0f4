//! Scenarios: a named operation on a registry field with a parameter map.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ops;
use super::params::Params;
use crate::fields::field_from_registry;
use crate::report::VerificationReport;
use crate::{Error, Result};

/// Seed used when neither the command line nor a config file sets one.
pub const DEFAULT_SEED: u64 = 0x0d5e_17e5;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub operation: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    /// Overrides of named acceptance tolerances.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    /// Files written for this scenario, relative to the output directory.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

/// Operation ids with the parameter keys each accepts.
pub const OPERATIONS: &[(&str, &[&str])] = &[
    (
        "certify",
        &[
            "c", "rho_lo", "rho_hi", "rho_points", "z_lo", "z_hi", "z_points", "divergence_samples", "fd_step",
            "expect",
        ],
    ),
    ("gamma-bounds", &["n", "gamma_test"]),
    (
        "flow-tube",
        &[
            "epsilon", "eps_factor", "a_lo", "a_hi", "h0", "seeds", "panel_order", "gauge", "trajectories", "refine",
            "zero_control",
        ],
    ),
    ("strip-identity", &["r", "t", "pairs", "phi"]),
    (
        "trace",
        &[
            "method", "x0", "interface", "omega", "k_lo", "k_hi", "radii", "rho", "expected", "bumps", "bump_radius",
            "compare_radii",
        ],
    ),
    (
        "density",
        &["x0", "interface", "w", "alpha", "radii", "k_lo", "k_hi", "samples", "replicates", "max_theta", "min_ratio"],
    ),
    (
        "aplim",
        &["x0", "interface", "w", "alphas", "radii", "k_lo", "k_hi", "samples", "replicates", "eps_density", "expect"],
    ),
    ("blowup", &["x0", "interface", "k_lo", "k_hi", "trace_value", "weak_star", "limit"]),
    (
        "nalpha",
        &["x0", "interface", "alpha", "radii", "k_lo", "k_hi", "samples", "replicates", "max_ratio", "min_ratio"],
    ),
    ("separable", &["gamma", "rho0", "psi0", "triples"]),
    ("quadratic", &["dim", "samples", "grid_lo", "grid_hi", "grid_points"]),
    (
        "jensen",
        &["phi", "epsilon", "grid_lo", "grid_hi", "grid_points", "mollify_field", "divergence_samples", "fd_step"],
    ),
    ("potential-roundtrip", &["n", "gamma", "grid_points", "rho_lo", "rho_hi", "z_lo", "z_hi"]),
    ("gauss-green", &["omega", "psi", "expected"]),
    ("suite", &["steps"]),
];

/// Per-run settings that are not part of the scenario itself.
#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub seed: u64,
}

impl Default for RunContext {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED }
    }
}

/// A report plus CSV plot data keyed by a short suffix.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: VerificationReport,
    pub csv: Vec<(String, String)>,
}

impl Outcome {
    pub fn new(report: VerificationReport) -> Self {
        Self { report, csv: Vec::new() }
    }
}

impl Scenario {
    pub fn new(name: impl Into<String>, operation: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            description: String::new(),
            field: None,
            operation: operation.into(),
            params: Map::new(),
            tolerances: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }

    pub fn with_description(mut self, d: impl Into<String>) -> Self {
        self.description = d.into();
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn params(&self) -> Params<'_> {
        Params::new(&self.params)
    }

    /// Tolerance `name`, unless overridden.
    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Checks that the operation exists, every parameter key is known to it
    /// and the field name parses.
    pub fn validate(&self) -> Result<()> {
        let known = OPERATIONS
            .iter()
            .find(|(op, _)| *op == self.operation)
            .map(|(_, keys)| *keys)
            .ok_or_else(|| Error::UnknownScenario(format!("operation `{}`", self.operation)))?;
        if let Some(k) = self.params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!(
                "operation `{}` has no parameter `{k}` (known: {})",
                self.operation,
                known.join(", ")
            )));
        }
        if let Some(f) = &self.field {
            field_from_registry(f)?;
        }
        if self.operation == "suite" {
            for step in ops::suite_steps(self)? {
                step.validate()?;
            }
        }
        Ok(())
    }
}

/// Validates and dispatches `scenario` to its module operation.
pub fn run_scenario(scenario: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    scenario.validate()?;
    ops::dispatch(scenario, ctx)
}

/// Whether an error reflects bad input rather than a numerical failure.
pub fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::UnknownField(_) | Error::UnknownScenario(_) | Error::InvalidParameter(_) | Error::Json(_)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = Scenario::new("x", "separable").param("gamma", 1.0);
        assert!(ok.validate().is_ok());
        let bad_op = Scenario::new("x", "nope");
        assert!(matches!(bad_op.validate(), Err(Error::UnknownScenario(_))));
        let bad_key = Scenario::new("x", "separable").param("gama", 1.0);
        assert!(matches!(bad_key.validate(), Err(Error::InvalidParameter(_))));
        let bad_field = Scenario::new("x", "trace").with_field("nonsense:q=1");
        assert!(matches!(bad_field.validate(), Err(Error::UnknownField(_))));
    }

    #[test]
    fn json_round_trip() {
        let s = Scenario::new("t", "trace")
            .with_field("capillary:R=1")
            .param("method", "all")
            .with_description("d");
        let back: Scenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
