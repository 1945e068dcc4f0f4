//! Cylindrical potentials `V(rho, z)` and the correspondence with fields of the
//! form `eta(r, z) = (r f, h)`:
//!
//! `eta = rho^{1-n} (-(dV/dz) r, rho dV/drho)` and `V = -rho^{n-1} int_0^z f ds`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::counterexample::{radial_profile, resolve_gamma, AXIS_CUTOFF};
use super::{Gamma, VectorField};
use crate::geometry::Exclusion;
use crate::quad::{adaptive_1d, Tol};
use crate::{Error, Result};

type ValueFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// A scalar potential of `(rho, z)` in `R^n`, `n >= 3`.
#[derive(Clone)]
pub struct CylindricalPotential {
    pub id: String,
    pub dim: usize,
    pub gamma: Option<f64>,
    value: ValueFn,
    gradient: Option<GradFn>,
}

impl fmt::Debug for CylindricalPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylindricalPotential")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("gamma", &self.gamma)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}

impl CylindricalPotential {
    pub fn new<V>(id: impl Into<String>, dim: usize, value: V) -> Result<Self>
    where
        V: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if dim < 3 {
            return Err(Error::InvalidParameter(format!(
                "cylindrical potentials need n >= 3, got {dim}"
            )));
        }
        Ok(Self {
            id: id.into(),
            dim,
            gamma: None,
            value: Arc::new(value),
            gradient: None,
        })
    }

    /// Attaches `(dV/drho, dV/dz)`.
    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Ok(Self::new(format!("zero-potential:n={dim}"), dim, |_, _| 0.0)?.with_gradient(|_, _| (0.0, 0.0)))
    }

    /// `V = gamma [(1 + rho^{n-1})^{1/(n-1)} - 1] arctan(z^2)` for `z >= 0`, else 0.
    ///
    /// Unlike the field constructor this accepts any `gamma > 0`, so that
    /// violating parameters can be certified (and rejected) too.
    pub fn counterexample(n: usize, gamma: Gamma) -> Result<Self> {
        let g = match gamma {
            Gamma::Auto => resolve_gamma(n, Gamma::Auto)?,
            Gamma::Value(v) if v > 0.0 && v.is_finite() && n >= 4 => v,
            Gamma::Value(v) => {
                return Err(Error::InvalidParameter(format!(
                    "need n >= 4 and gamma > 0, got n = {n}, gamma = {v}"
                )))
            }
        };
        let m = (n - 1) as f64;
        let nf = n as f64;
        let mut p = Self::new(format!("counterexample-potential:n={n}:gamma={g}"), n, move |rho, z| {
            if z <= 0.0 {
                0.0
            } else {
                g * radial_profile(rho, n) * (z * z).atan()
            }
        })?
        .with_gradient(move |rho, z| {
            if z <= 0.0 {
                return (0.0, 0.0);
            }
            let z2 = z * z;
            let d_rho = g * z2.atan() * ((2.0 - nf) / m * rho.powf(m).ln_1p()).exp() * rho.powf(nf - 2.0);
            let d_z = 2.0 * g * radial_profile(rho, n) * z / (1.0 + z2 * z2);
            (d_rho, d_z)
        });
        p.gamma = Some(g);
        Ok(p)
    }

    pub fn value(&self, rho: f64, z: f64) -> f64 {
        (self.value)(rho, z)
    }

    pub fn gradient(&self, rho: f64, z: f64) -> Result<(f64, f64)> {
        match &self.gradient {
            Some(g) => Ok(g(rho, z)),
            None => Err(Error::MissingGradient(self.id.clone())),
        }
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }
}

/// `eta(r, z) = rho^{1-n} (-(dV/dz) r, rho dV/drho)`; on the axis the value at
/// radius `AXIS_CUTOFF` stands in for the radial limit.
pub fn potential_to_field(p: &CylindricalPotential) -> Result<VectorField> {
    let grad = p.gradient.clone().ok_or_else(|| Error::MissingGradient(p.id.clone()))?;
    let n = p.dim;
    let nf = n as f64;
    let field = VectorField::new(format!("field-of:{}", p.id), n, f64::INFINITY, move |x| {
        let rho = x[..n - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
        let z = x[n - 1];
        let re = rho.max(AXIS_CUTOFF);
        let (d_rho, d_z) = grad(re, z);
        let radial = -d_z * re.powf(1.0 - nf);
        let mut out: Vec<f64> = x[..n - 1].iter().map(|v| radial * v).collect();
        out.push(re.powf(2.0 - nf) * d_rho);
        Ok(out)
    })
    .with_exclusion(Exclusion::axis_line(n - 1, vec![0.0; n]))
    .with_note("sup_bound not certified; use certify_potential");
    Ok(field)
}

/// Symmetry defect threshold for [`field_to_potential`].
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Checks that `eta` has the form `(r f(rho, z), h(rho, z))` at random points.
pub fn cylindrical_defect(eta: &VectorField, samples: usize, seed: u64) -> Result<f64> {
    let n = eta.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let rho: f64 = 10f64.powf(rng.random_range(-2.0..1.0));
        let z: f64 = rng.random_range(-1.0..4.0);
        let mut dir: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
        for v in &mut dir {
            *v /= norm;
        }
        let mut axis_pt = vec![0.0; n];
        axis_pt[0] = rho;
        axis_pt[n - 1] = z;
        let reference = eta.eval(&axis_pt)?;
        let f = reference[0] / rho;
        let mut pt: Vec<f64> = dir.iter().map(|d| rho * d).collect();
        pt.push(z);
        let v = eta.eval(&pt)?;
        let scale = reference.iter().map(|a| a.abs()).fold(1.0, f64::max);
        for i in 0..n - 1 {
            worst = worst.max((v[i] - f * pt[i]).abs() / scale);
        }
        for &r in &reference[1..n - 1] {
            worst = worst.max(r.abs() / scale);
        }
        worst = worst.max((v[n - 1] - reference[n - 1]).abs() / scale);
    }
    Ok(worst)
}

/// `V(rho, z) = -rho^{n-1} int_0^z f(rho, s) ds` with `f = eta_1(rho e_1, s) / rho`.
///
/// The value is computed by adaptive quadrature; the gradient uses the exact
/// relations `dV/dz = -rho^{n-2} eta_1(rho e_1, z)` and
/// `dV/drho = rho^{n-2} eta_n(rho e_1, z)`.
pub fn field_to_potential(eta: &VectorField) -> Result<CylindricalPotential> {
    let n = eta.dim;
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "cylindrical fields need n >= 3, got {n}"
        )));
    }
    let defect = cylindrical_defect(eta, 64, 0x5eed)?;
    if defect > SYMMETRY_TOL {
        return Err(Error::NotCylindrical {
            defect,
            tolerance: SYMMETRY_TOL,
        });
    }
    let nf = n as f64;
    let fv = eta.clone();
    let fg = eta.clone();
    let at = move |rho: f64, z: f64| {
        let mut p = vec![0.0; n];
        p[0] = rho;
        p[n - 1] = z;
        p
    };
    let at2 = at;
    let p = CylindricalPotential::new(format!("potential-of:{}", eta.id), n, move |rho, z| {
        if rho <= 0.0 || z == 0.0 {
            return 0.0;
        }
        let e = adaptive_1d(
            |s| fv.eval(&at(rho, s)).map(|v| v[0] / rho).unwrap_or(f64::NAN),
            0.0,
            z,
            Tol::new(1e-15, 1e-13),
        );
        -rho.powf(nf - 1.0) * e.value[0]
    })?
    .with_gradient(move |rho, z| match fg.eval(&at2(rho, z)) {
        Ok(v) => {
            let k = rho.powf(nf - 2.0);
            (k * v[n - 1], -k * v[0])
        }
        Err(_) => (f64::NAN, f64::NAN),
    });
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_counterexample_field;

    #[test]
    fn zero_potential_gives_zero_field() {
        let f = potential_to_field(&CylindricalPotential::zero(4).unwrap()).unwrap();
        assert_eq!(f.eval(&[0.3, 0.1, -0.2, 1.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn missing_gradient_rejected() {
        let p = CylindricalPotential::new("v", 4, |_, z| z).unwrap();
        assert!(matches!(potential_to_field(&p), Err(Error::MissingGradient(_))));
    }

    #[test]
    fn z_independent_potential_has_no_radial_part() {
        let p = CylindricalPotential::new("r", 3, |rho, _| rho * rho)
            .unwrap()
            .with_gradient(|rho, _| (2.0 * rho, 0.0));
        let f = potential_to_field(&p).unwrap();
        let v = f.eval(&[0.3, 0.4, 2.0]).unwrap();
        assert_eq!(&v[..2], &[0.0, 0.0]);
        assert!((v[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn counterexample_value_from_quadrature() {
        let eta = make_counterexample_field(4, Gamma::Auto).unwrap();
        let v = field_to_potential(&eta).unwrap();
        let closed = CylindricalPotential::counterexample(4, Gamma::Auto).unwrap();
        for (rho, z) in [(0.5, 1.0), (2.0, 3.0), (0.01, 0.2), (10.0, 7.0)] {
            assert!((v.value(rho, z) - closed.value(rho, z)).abs() < 1e-8);
        }
    }

    #[test]
    fn asymmetric_field_rejected() {
        let f = VectorField::new("skew", 3, 1.0, |x| Ok(vec![x[1], 0.0, 0.0]));
        assert!(matches!(field_to_potential(&f), Err(Error::NotCylindrical { .. })));
    }
}
