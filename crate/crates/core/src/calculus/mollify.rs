//! Convolution with the standard mollifier `rho_eps`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::fields::{EvalFn, JacobianFn, ScalarFn, VectorField};
use crate::quad::{adaptive_1d, box_rule, gauss_legendre, Tol};
use crate::{Error, Result};

/// `exp(-1 / (1 - s^2))` for `s < 1`, zero otherwise.
pub fn mollifier_profile(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Surface area of the unit sphere `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

/// `rho_eps(y) = k_eps * profile(|y| / eps)` with unit mass on the `eps`-ball.
#[derive(Debug, Clone, Serialize)]
pub struct MollifierKernel {
    pub dim: usize,
    pub epsilon: f64,
    pub normalization: f64,
    /// Radial and angular orders of the convolution rule (`angular` is used in 2D only).
    pub radial_order: usize,
    pub angular_order: usize,
    #[serde(skip)]
    rule: Arc<Vec<(Vec<f64>, f64)>>,
}

impl MollifierKernel {
    pub fn new(dim: usize, epsilon: f64) -> Result<Self> {
        let (radial, angular) = if dim == 2 { (24, 48) } else { (8, 0) };
        Self::with_orders(dim, epsilon, radial, angular)
    }

    pub fn with_orders(dim: usize, epsilon: f64, radial_order: usize, angular_order: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("mollifier needs dimension >= 2, got {dim}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if radial_order < 2 || (dim == 2 && angular_order < 4) {
            return Err(Error::InvalidParameter("quadrature orders too small".into()));
        }
        let radial_mass = adaptive_1d(
            |s| mollifier_profile(s) * s.powi(dim as i32 - 1),
            0.0,
            1.0,
            Tol::new(1e-16, 1e-13),
        )
        .value[0];
        let normalization = 1.0 / (sphere_area(dim) * epsilon.powi(dim as i32) * radial_mass);
        let rule = Arc::new(build_rule(dim, epsilon, radial_order, angular_order));
        Ok(Self {
            dim,
            epsilon,
            normalization,
            radial_order,
            angular_order,
            rule,
        })
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.normalization * mollifier_profile(r / self.epsilon)
    }

    /// Offsets and weights of the discrete convolution rule; weights are
    /// positive and sum to one.
    pub fn rule(&self) -> &[(Vec<f64>, f64)] {
        &self.rule
    }
}

fn build_rule(dim: usize, eps: f64, radial: usize, angular: usize) -> Vec<(Vec<f64>, f64)> {
    let mut rule = Vec::new();
    if dim == 2 {
        // polar: Gauss-Legendre in r, equispaced (spectrally accurate) in theta
        let (x, w) = gauss_legendre(radial);
        for (xi, wi) in x.iter().zip(w) {
            let s = 0.5 * (1.0 + xi);
            let wr = 0.5 * wi * mollifier_profile(s) * s;
            for k in 0..angular {
                let th = 2.0 * PI * (k as f64 + 0.5) / angular as f64;
                rule.push((vec![eps * s * th.cos(), eps * s * th.sin()], wr));
            }
        }
    } else {
        let lo = vec![-1.0; dim];
        let hi = vec![1.0; dim];
        let (pts, wts) = box_rule(&lo, &hi, radial);
        for (p, w) in pts.into_iter().zip(wts) {
            let s = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let k = mollifier_profile(s);
            if k > 0.0 {
                rule.push((p.into_iter().map(|v| eps * v).collect(), w * k));
            }
        }
    }
    let total: f64 = rule.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut rule {
        *w /= total;
    }
    rule
}

/// `eta^eps = rho_eps * eta`, optionally translated by `eps` in `x_n`.
///
/// The field is extended by zero outside its domain. Exclusion margins grow by
/// `eps`; closed-form divergence and Jacobian are convolved too when the input
/// is defined on all of space.
pub fn mollify(field: &VectorField, kernel: &MollifierKernel, shift: bool) -> Result<VectorField> {
    if kernel.dim != field.dim {
        return Err(Error::DimensionMismatch {
            expected: field.dim,
            got: kernel.dim,
        });
    }
    if !field.sup_bound.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "field `{}` has no finite sup bound",
            field.id
        )));
    }
    let n = field.dim;
    let eps = kernel.epsilon;
    let back = if shift { eps } else { 0.0 };
    let rule = kernel.rule.clone();

    let f = field.clone();
    let r = rule.clone();
    let eval: EvalFn = Arc::new(move |x: &[f64]| {
        let mut acc = vec![0.0; n];
        let mut p = vec![0.0; n];
        for (y, w) in r.iter() {
            for k in 0..n {
                p[k] = x[k] - y[k];
            }
            p[n - 1] -= back;
            let v = f.eval_or_zero(&p)?;
            for k in 0..n {
                acc[k] += w * v[k];
            }
        }
        Ok(acc)
    });

    let whole = field.domain == crate::geometry::Domain::Whole;
    let div: Option<ScalarFn> = (whole && field.has_divergence()).then(|| {
        let f = field.clone();
        let r = rule.clone();
        Arc::new(move |x: &[f64]| {
            let mut p = x.to_vec();
            p[n - 1] -= back;
            r.iter()
                .map(|(y, w)| {
                    let q: Vec<f64> = p.iter().zip(y).map(|(a, b)| a - b).collect();
                    w * f.analytic_div(&q).unwrap_or(f64::NAN)
                })
                .sum()
        }) as ScalarFn
    });
    let jac: Option<JacobianFn> = (whole && field.has_jacobian()).then(|| {
        let f = field.clone();
        let r = rule.clone();
        Arc::new(move |x: &[f64]| {
            let mut p = x.to_vec();
            p[n - 1] -= back;
            let mut acc = vec![0.0; n * n];
            for (y, w) in r.iter() {
                let q: Vec<f64> = p.iter().zip(y).map(|(a, b)| a - b).collect();
                let j = f.analytic_jacobian(&q).unwrap_or_else(|| vec![f64::NAN; n * n]);
                for (a, b) in acc.iter_mut().zip(j) {
                    *a += w * b;
                }
            }
            acc
        }) as JacobianFn
    });

    let id = format!(
        "mollified({};eps={eps}{})",
        field.id,
        if shift { ";shift" } else { "" }
    );
    let mut out = VectorField::from_parts(field, id, eval, div, jac);
    out.domain = crate::geometry::Domain::Whole;
    let mut shift_vec = vec![0.0; n];
    shift_vec[n - 1] = back;
    out.exclusions = field
        .exclusions
        .iter()
        .map(|e| {
            let mut e = e.translated(&shift_vec);
            e.margin += eps;
            e
        })
        .collect();
    if let Some(ps) = &field.pieces {
        out = out.with_pieces(
            ps.iter()
                .map(|p| crate::fields::Piece {
                    center: p.center.iter().zip(&shift_vec).map(|(c, s)| c + s).collect(),
                    radius: p.radius + eps,
                })
                .collect(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::divergence::numeric_divergence;
    use crate::fields::{bump_stream_field, RadialBump};
    use crate::geometry::ConvexRegion;
    use crate::quad::integrate_region;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn kernel_has_unit_mass_by_cartesian_oracle() {
        let k = MollifierKernel::new(2, 0.3).unwrap();
        let e = integrate_region(
            &ConvexRegion::disk([0.0, 0.0], 0.3),
            |p| Ok([k.value(&p)]),
            Tol::new(1e-14, 1e-12),
        )
        .unwrap();
        assert!((e.value[0] - 1.0).abs() < 1e-8, "{}", e.value[0]);
        assert_eq!(k.value(&[0.3, 0.0]), 0.0);
        assert_eq!(k.value(&[0.2, 0.3]), 0.0);
    }

    #[test]
    fn constants_are_fixed() {
        let c = VectorField::constant(&[0.25, -1.0, 2.0]);
        let k = MollifierKernel::new(3, 0.2).unwrap();
        let m = mollify(&c, &k, true).unwrap();
        let v = m.eval(&[0.1, 0.2, 0.3]).unwrap();
        for (a, b) in v.iter().zip([0.25, -1.0, 2.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn stream_bump_stays_divergence_free() {
        let f = bump_stream_field(RadialBump::standard(2)).unwrap();
        let k = MollifierKernel::new(2, 0.1).unwrap();
        let m = mollify(&f, &k, false).unwrap();
        for p in [[0.3, 2.2], [-0.5, 1.7], [0.0, 2.9]] {
            assert!(numeric_divergence(&m, &p, 1e-4).unwrap().abs() < 1e-6);
            assert!(m.analytic_div(&p).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn shift_moves_support_up() {
        let f = VectorField::new("lower", 2, 1.0, |x| Ok(if x[1] > 0.0 { vec![0.0, 1.0] } else { vec![0.0, 0.0] }));
        let k = MollifierKernel::new(2, 0.1).unwrap();
        let m = mollify(&f, &k, true).unwrap();
        assert_eq!(m.eval(&[0.0, -1e-9]).unwrap(), vec![0.0, 0.0]);
        assert!((m.eval(&[0.0, 0.25]).unwrap()[1] - 1.0).abs() < 1e-14);
    }
}
