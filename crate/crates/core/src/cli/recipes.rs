//! Built-in verification recipes, runnable with `divlab run NAME`.

use serde_json::json;

use super::scenario::Scenario;
use crate::{Error, Result};

fn step(name: &str, op: &str, field: Option<&str>, params: serde_json::Value) -> serde_json::Value {
    let mut s = json!({ "name": name, "operation": op, "params": params });
    if let Some(f) = field {
        s["field"] = json!(f);
    }
    s
}

/// The recipe catalog, one entry per acceptance check plus extras.
pub fn catalog() -> Vec<Scenario> {
    vec![
        Scenario::new("counterexample-certificate", "certify")
            .with_field("counterexample:n=4:gamma=auto")
            .with_description("certify the n = 4 cylindrical counterexample on the 200x200 grid, check it is nonzero and divergence-free")
            .param("c", 1.0),
        Scenario::new("gamma-bounds", "gamma-bounds")
            .with_description("closed-form gamma bounds for n = 4; gamma = 1 yields a violated certificate with witness")
            .param("n", 4)
            .param("gamma_test", 1.0),
        Scenario::new("flow-tube-identity", "flow-tube")
            .with_field("stream3:bump")
            .with_description("flow-tube volume identity for the 3D stream bump, 64^2 seeds, refined to 128^2, zero-field control")
            .param("eps_factor", 2.0)
            .param("seeds", 64)
            .param("refine", true)
            .param("zero_control", true),
        Scenario::new("strip-identity", "strip-identity")
            .with_field("stream:bump")
            .with_description("strip identity and L1 bound for the planar stream bump at (r, t) = (5, 3) and (2, 1)")
            .param("pairs", json!([[5.0, 3.0], [2.0, 1.0]])),
        Scenario::new("twisting-trace", "suite")
            .with_field("twisting:levels=8")
            .with_description("twisting field: vanishing pairings, oscillating ball averages, rejected approximate limit")
            .param(
                "steps",
                json!([
                    step("pairing", "trace", Some("twisting:levels=8"), json!({"method": "pairing", "omega": "unit-square", "bumps": 10})),
                    step("ball-average", "trace", Some("twisting:levels=8"), json!({
                        "method": "ball-average", "interface": "line", "x0": [1.0 / 3.0, 0.0],
                        "radii": [0.25, 0.0625, 0.015625],
                        "compare_radii": [0.125, 0.03125, 0.0078125],
                    })),
                    step("aplim", "aplim", Some("twisting:levels=8"), json!({
                        "interface": "line", "x0": [0.5, 0.0], "w": [0.0, 0.0], "alphas": [0.5],
                        "radii": [0.125, 0.0625, 0.03125, 0.015625], "expect": "rejected",
                    })),
                ]),
            ),
        Scenario::new("capillary-verticality", "suite")
            .with_field("capillary:R=1")
            .with_description("capillary field x/R: traces equal 1 at (1, 0), approximate limit, empty deviation set, extremality")
            .param(
                "steps",
                json!([
                    step("trace", "trace", Some("capillary:R=1"), json!({"method": "all", "x0": [1.0, 0.0], "expected": 1.0, "k_lo": 3, "k_hi": 10})),
                    step("aplim", "aplim", Some("capillary:R=1"), json!({
                        "x0": [1.0, 0.0], "w": [1.0, 0.0], "alphas": [0.2, 0.1, 0.05], "k_lo": 5, "k_hi": 8, "expect": "confirmed",
                    })),
                    step("nalpha", "nalpha", Some("capillary:R=1"), json!({"x0": [1.0, 0.0], "alpha": 0.05, "k_lo": 5, "k_hi": 8, "max_ratio": 0.01})),
                    step("extremality", "gauss-green", Some("capillary:R=1"), json!({"omega": "disk:R=1", "expected": 2.0 * std::f64::consts::PI})),
                ]),
            ),
        Scenario::new("jensen-mollify", "jensen")
            .with_field("constant:c=0,1")
            .with_description("Jensen bound for phi(t) = t^2/2 on e_n; mollification keeps the stream bump divergence-free")
            .param("phi", "quadratic")
            .param("mollify_field", "stream:bump"),
        Scenario::new("separable-obstruction", "separable")
            .with_description("blow-up radius of rho psi' = gamma psi^2 against rho0 exp(1/(gamma psi0))")
            .param("triples", json!([[1.0, 1.0, 1.0], [2.0, 1.0, 1.0], [0.5, 2.0, 1.0]])),
        Scenario::new("quadratic-inequality", "quadratic")
            .with_description("z_n >= |z|^2/2 for z = xi + e_n over 10^4 random unit-ball samples")
            .param("dim", 3)
            .param("samples", 10_000),
        Scenario::new("potential-roundtrip", "potential-roundtrip")
            .with_description("field <-> cylindrical potential round trip for the n = 4 counterexample on a 50x50 grid")
            .param("n", 4)
            .param("grid_points", 50),
        Scenario::new("capillary-blowup", "blowup")
            .with_field("capillary:R=1")
            .with_description("blow-ups of the capillary field at (1, 0): divergence and trace defects, weak-star limit")
            .param("x0", json!([1.0, 0.0]))
            .param("k_lo", 2)
            .param("k_hi", 8)
            .param("limit", json!([1.0, 0.0])),
        Scenario::new("twisting-nalpha", "nalpha")
            .with_field("twisting:levels=8")
            .with_description("deviation set of the twisting field at (1/2, 0) keeps positive density")
            .param("interface", "line")
            .param("x0", json!([0.5, 0.0]))
            .param("alpha", 0.5)
            .param("k_lo", 3)
            .param("k_hi", 6)
            .param("min_ratio", 0.1),
    ]
}

pub fn find(name: &str) -> Result<Scenario> {
    catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_valid() {
        let c = catalog();
        assert!(c.len() >= 10);
        for s in &c {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
        let mut names: Vec<_> = c.iter().map(|s| s.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), c.len());
        assert!(find("no-such-recipe").is_err());
    }
}
