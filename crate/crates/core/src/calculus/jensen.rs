use rayon::prelude::*;
use serde::Serialize;

use super::grid::GridSpec;
use super::mollify::{mollify, MollifierKernel};
use crate::fields::{PhiFunction, VectorField};
use crate::report::{Check, VerificationReport};
use crate::{Error, Result};

/// Allowed slack in `phi(|eta|) <= eta_n`.
pub const JENSEN_TOL: f64 = 1e-9;

const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, Serialize)]
struct Violation {
    point: Vec<f64>,
    eta_n: f64,
    phi_norm: f64,
}

fn gauge_margin(v: &[f64], phi: &PhiFunction) -> f64 {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v[v.len() - 1] - phi.eval(norm)
}

/// Audits `eta_n >= phi(|eta|)` on the grid and on the kernel nodes around it,
/// then verifies `phi(|eta^eps|) <= eta^eps_n + tol` on the grid.
pub fn jensen_check(
    field: &VectorField,
    phi: &PhiFunction,
    kernel: &MollifierKernel,
    grid: &GridSpec,
) -> Result<VerificationReport> {
    if grid.dim() != field.dim {
        return Err(Error::DimensionMismatch {
            expected: field.dim,
            got: grid.dim(),
        });
    }
    let mut rep = VerificationReport::new("jensen_check");
    rep.insert("field", &field.id)
        .insert("phi", &phi.label)
        .insert("epsilon", kernel.epsilon)
        .insert("grid_points", grid.len());

    let points = grid.points();
    let rule = kernel.rule();
    let stride = (rule.len() / 16).max(1);
    let audit: Vec<(f64, Option<Violation>)> = points
        .par_iter()
        .map(|x| -> Result<(f64, Option<Violation>)> {
            let mut worst = f64::INFINITY;
            let mut bad = None;
            let mut probe = |p: Vec<f64>| -> Result<()> {
                let v = field.eval_or_zero(&p)?;
                let m = gauge_margin(&v, phi);
                if m < worst {
                    worst = m;
                    if m < -JENSEN_TOL {
                        bad = Some(Violation {
                            phi_norm: v[v.len() - 1] - m,
                            eta_n: v[v.len() - 1],
                            point: p,
                        });
                    }
                }
                Ok(())
            };
            probe(x.clone())?;
            for (y, _) in rule.iter().step_by(stride) {
                probe(x.iter().zip(y).map(|(a, b)| a - b).collect())?;
            }
            Ok((worst, bad))
        })
        .collect::<Result<_>>()?;
    let pre_worst = audit.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
    let violations: Vec<&Violation> = audit.iter().filter_map(|a| a.1.as_ref()).collect();
    rep.insert("precondition_worst_margin", pre_worst);
    if !violations.is_empty() {
        rep.set_status("PRECONDITION_FAILED")
            .insert("precondition_violations", violations.len())
            .insert(
                "violating_samples",
                violations.iter().take(MAX_LISTED).collect::<Vec<_>>(),
            )
            .fail();
        return Ok(rep);
    }

    let smooth = mollify(field, kernel, false)?;
    let margins: Vec<f64> = points
        .par_iter()
        .map(|x| smooth.eval(x).map(|v| gauge_margin(&v, phi)))
        .collect::<Result<_>>()?;
    let (idx, worst) = margins
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &m)| if m < acc.1 { (i, m) } else { acc });
    rep.set_status("VERIFIED")
        .insert("worst_point", &points[idx])
        .push(Check::at_least("min_margin", worst, -JENSEN_TOL));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> GridSpec {
        GridSpec::uniform_box(&[-1.0, -1.0], &[1.0, 1.0], 5).unwrap()
    }

    #[test]
    fn zero_field_margins_vanish() {
        let k = MollifierKernel::new(2, 0.1).unwrap();
        let rep = jensen_check(&VectorField::zero(2), &PhiFunction::linear(1.0), &k, &grid2()).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.check("min_margin").unwrap().value, 0.0);
    }

    #[test]
    fn unit_vertical_field_has_margin_half() {
        let k = MollifierKernel::new(2, 0.1).unwrap();
        let f = VectorField::constant(&[0.0, 1.0]);
        let rep = jensen_check(&f, &PhiFunction::quadratic(), &k, &grid2()).unwrap();
        assert!((rep.check("min_margin").unwrap().value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn precondition_failure_is_tagged() {
        let k = MollifierKernel::new(2, 0.1).unwrap();
        let f = VectorField::constant(&[1.0, 0.0]);
        let rep = jensen_check(&f, &PhiFunction::quadratic(), &k, &grid2()).unwrap();
        assert_eq!(rep.status.as_deref(), Some("PRECONDITION_FAILED"));
        assert!(!rep.passed());
    }
}
