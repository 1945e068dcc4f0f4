//! The planar strip identity
//! `int_{-r}^{r} eta_2(x_1, t) dx_1 = int_0^t (eta_1(-r, x_2) - eta_1(r, x_2)) dx_2`
//! for divergence-free fields vanishing on `{x_2 < 0}`.

use crate::fields::{PhiFunction, VectorField};
use crate::quad::{try_adaptive, Tol};
use crate::report::{Check, VerificationReport};
use crate::{Error, Result};

pub const STRIP_TOL: f64 = 1e-8;

const QUAD: Tol = Tol {
    abs: 1e-13,
    rel: 1e-11,
};

pub fn strip_identity_2d(eta: &VectorField, r: f64, t: f64, phi: Option<&PhiFunction>) -> Result<VerificationReport> {
    if eta.dim != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: eta.dim,
        });
    }
    if !eta.has_divergence() {
        return Err(Error::MissingDivergence {
            field: eta.id.clone(),
            set: format!("strip [-{r}, {r}] x (0, {t})"),
        });
    }
    if !(r > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter("strip needs r > 0 and t > 0".into()));
    }
    let at = |x: f64, y: f64| eta.eval_or_zero(&[x, y]);
    let lhs = try_adaptive(|x| Ok([at(x, t)?[1], at(x, t)?[1].abs()]), -r, r, QUAD)?;
    let rhs = try_adaptive(|y| Ok([at(-r, y)?[0] - at(r, y)?[0]]), 0.0, t, QUAD)?;
    let residual = (lhs.value[0] - rhs.value[0]).abs();
    let l1 = lhs.value[1];
    let bound = 2.0 * t * eta.sup_bound;

    let mut rep = VerificationReport::new("strip_identity_2d");
    rep.insert("field", &eta.id)
        .insert("r", r)
        .insert("t", t)
        .insert("lhs", lhs.value[0])
        .insert("rhs", rhs.value[0])
        .insert("quadrature_error", lhs.error + rhs.error)
        .insert("l1_norm", l1)
        .insert("l1_bound", bound);
    rep.push(Check::at_most("residual", residual, STRIP_TOL));
    rep.push(Check::at_least("l1_bound_margin", bound - l1, 0.0));
    if let Some(phi) = phi {
        // edge decay audit, reported as data only
        let mut edges = Vec::new();
        for x in [-r, r] {
            let v = at(x, t)?;
            edges.push(serde_json::json!({
                "x1": x,
                "phi_abs_eta1": phi.eval(v[0].abs()),
                "eta2": v[1],
                "margin": v[1] - phi.eval(v[0].abs()),
            }));
        }
        rep.insert("phi", &phi.label).insert("edge_audit", edges);
    }
    Ok(rep)
}
