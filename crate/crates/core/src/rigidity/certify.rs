//! Sampled certification of the three potential conditions
//!
//! - `V0`: `V(rho, z) = 0` for `z <= 0`,
//! - `V1`: `|grad V| <= rho^{n-2}`,
//! - `V2`: `rho dV/drho >= c rho^{3-n} (dV/dz)^2`,
//!
//! which together say that the associated field is bounded by one, vanishes on
//! `{z < 0}` and satisfies `eta_n >= c |eta|^2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{Axis, GridSpec};
use crate::fields::counterexample::big_c;
use crate::fields::CylindricalPotential;
use crate::report::Verdict;
use crate::{Error, Result};

/// Margins above this are accepted as satisfied.
pub const CERTIFY_TOL: f64 = -1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ConditionMargin {
    pub name: &'static str,
    pub min_margin: f64,
    /// `(rho, z)` of the smallest margin.
    pub argmin_point: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub condition: &'static str,
    pub point: [f64; 2],
    pub margin: f64,
    pub value: f64,
    pub gradient: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateVerdict {
    CertifiedSampled,
    Violated,
}

#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityCertificate {
    pub potential: String,
    pub conditions: Vec<ConditionMargin>,
    pub verdict: CertificateVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub constants: Constants,
    pub grid: GridSpec,
    pub nodes: usize,
}

impl RigidityCertificate {
    pub fn certified(&self) -> bool {
        self.verdict == CertificateVerdict::CertifiedSampled
    }

    pub fn margin(&self, name: &str) -> Option<f64> {
        self.conditions.iter().find(|c| c.name == name).map(|c| c.min_margin)
    }

    pub fn verdict_as_report(&self) -> Verdict {
        if self.certified() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// `rho` log-spaced on `[1e-3, 1e3]`, `z` uniform on `[-1, 10]`, 200 nodes each.
pub fn default_certification_grid() -> GridSpec {
    GridSpec::new(vec![Axis::log(1e-3, 1e3, 200), Axis::uniform(-1.0, 10.0, 200)]).expect("valid grid")
}

const NAMES: [&str; 3] = ["V0", "V1", "V2"];

pub fn certify_potential(p: &CylindricalPotential, grid: &GridSpec, c: f64) -> Result<RigidityCertificate> {
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: grid.dim(),
        });
    }
    if !p.has_gradient() {
        return Err(Error::MissingGradient(p.id.clone()));
    }
    let nf = p.dim as f64;
    let rows: Vec<([f64; 3], [f64; 2], f64, [f64; 2])> = grid
        .points()
        .into_par_iter()
        .map(|x| {
            let (rho, z) = (x[0], x[1]);
            let v = p.value(rho, z);
            let (vr, vz) = p.gradient(rho, z)?;
            let m0 = if z <= 0.0 { -v.abs() } else { 0.0 };
            let m1 = rho.powf(nf - 2.0) - vr.hypot(vz);
            let m2 = rho * vr - c * rho.powf(3.0 - nf) * vz * vz;
            Ok(([m0, m1, m2], [rho, z], v, [vr, vz]))
        })
        .collect::<Result<_>>()?;

    let mut conditions = Vec::with_capacity(3);
    let mut witness: Option<Witness> = None;
    for (k, name) in NAMES.iter().enumerate() {
        let (m, pt, v, g) = rows
            .iter()
            .map(|(m, pt, v, g)| (m[k], *pt, *v, *g))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap_or((0.0, [0.0, 0.0], 0.0, [0.0, 0.0]));
        conditions.push(ConditionMargin {
            name,
            min_margin: m,
            argmin_point: pt,
        });
        if m < CERTIFY_TOL && witness.is_none() {
            witness = Some(Witness {
                condition: name,
                point: pt,
                margin: m,
                value: v,
                gradient: g,
            });
        }
    }
    Ok(RigidityCertificate {
        potential: p.id.clone(),
        conditions,
        verdict: if witness.is_some() {
            CertificateVerdict::Violated
        } else {
            CertificateVerdict::CertifiedSampled
        },
        witness,
        constants: Constants {
            n: p.dim,
            gamma: p.gamma,
            big_c: big_c(),
            c,
        },
        grid: grid.clone(),
        nodes: rows.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Gamma;

    #[test]
    fn zero_potential_equalities() {
        let g = GridSpec::new(vec![Axis::log(1e-2, 1e2, 20), Axis::uniform(-1.0, 3.0, 20)]).unwrap();
        let cert = certify_potential(&CylindricalPotential::zero(4).unwrap(), &g, 1.0).unwrap();
        assert!(cert.certified());
        assert_eq!(cert.margin("V0"), Some(0.0));
        assert_eq!(cert.margin("V2"), Some(0.0));
    }

    #[test]
    fn violation_has_witness() {
        let g = GridSpec::new(vec![Axis::log(1e-2, 1e2, 60), Axis::uniform(-1.0, 5.0, 60)]).unwrap();
        let p = CylindricalPotential::counterexample(4, Gamma::Value(1.0)).unwrap();
        let cert = certify_potential(&p, &g, 1.0).unwrap();
        let w = cert.witness.expect("witness");
        assert!(w.margin < CERTIFY_TOL);
        assert_eq!(cert.verdict, CertificateVerdict::Violated);
    }
}
