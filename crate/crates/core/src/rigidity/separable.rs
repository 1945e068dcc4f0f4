//! The saturated separable ODE `rho psi' = gamma psi^2` in three dimensions,
//! whose solution blows up at `rho* = rho0 exp(1 / (gamma psi0))`.

use crate::ode::{Dopri5, StopReason};
use crate::report::{Check, VerificationReport};
use crate::{Error, Result};

/// Blow-up is declared once `psi` exceeds this value.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

pub fn separable_demo(gamma: f64, rho0: f64, psi0: f64) -> Result<VerificationReport> {
    if !(gamma > 0.0 && rho0 > 0.0 && psi0 > 0.0) {
        return Err(Error::InvalidParameter("gamma, rho0 and psi0 must be positive".into()));
    }
    let rho_star = rho0 * (1.0 / (gamma * psi0)).exp();
    let solver = Dopri5 {
        h_min: 1e-14,
        ..Dopri5::with_tol(1e-10, 1e-12)
    };
    let mut first_violation: Option<f64> = None;
    let out = solver.solve(
        |rho, y| Ok(vec![gamma * y[0] * y[0] / rho]),
        rho0,
        &[psi0],
        10.0 * rho_star,
        None,
        |rho, y| {
            if first_violation.is_none() && gamma * y[0] * y[0] / rho > rho {
                first_violation = Some(rho);
            }
            y[0] > BLOWUP_THRESHOLD || !y[0].is_finite()
        },
    )?;
    let mut rep = VerificationReport::new("separable_demo");
    rep.insert("gamma", gamma)
        .insert("rho0", rho0)
        .insert("psi0", psi0)
        .insert("rho_star", rho_star)
        .insert("stop_reason", out.reason)
        .insert("last_state", [out.t, out.y[0]])
        .insert("steps", out.steps)
        .insert("first_radius_psi_prime_exceeds_rho", first_violation);
    match out.reason {
        StopReason::Condition => {
            rep.set_status("BLOWUP_DETECTED");
        }
        StopReason::StepUnderflow => {
            rep.set_status("STEP_UNDERFLOW").note(format!(
                "step underflow at rho = {} with psi = {}",
                out.t, out.y[0]
            ));
        }
        _ => {
            rep.set_status("NO_BLOWUP").fail();
        }
    }
    let rel = (out.t - rho_star).abs() / rho_star;
    rep.insert("numeric_blowup_radius", out.t);
    rep.push(Check::at_most("relative_blowup_error", rel, 1e-2));
    rep.push(Check::flag("gradient_bound_violated", first_violation.is_some()));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_radius() {
        let rep = separable_demo(1.0, 1.0, 1.0).unwrap();
        assert_eq!(rep.data["rho_star"], std::f64::consts::E);
        assert!(rep.passed(), "{rep:?}");
        let r = rep.data["numeric_blowup_radius"].as_f64().unwrap();
        assert!((r - std::f64::consts::E).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(separable_demo(0.0, 1.0, 1.0).is_err());
    }
}
