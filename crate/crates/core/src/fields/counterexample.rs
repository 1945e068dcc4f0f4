//! The cylindrically symmetric counterexample to quadratic rigidity for n >= 4.

use std::f64::consts::PI;

use super::VectorField;
use crate::geometry::Exclusion;
use crate::{Error, Result};

/// Below this radius the closed-form axis limit replaces the `rho^{1-n}` formula.
pub const AXIS_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Auto,
    Value(f64),
}

/// `C = (pi + 3^{3/4}) / 2`.
pub fn big_c() -> f64 {
    0.5 * (PI + 3f64.powf(0.75))
}

/// The two admissible upper bounds for `gamma`: `(1/C, 2^{(4-3n)/(n-1)})`.
pub fn gamma_bounds(n: usize) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "the cylindrical counterexample needs n >= 4, got n = {n}"
        )));
    }
    let nf = n as f64;
    Ok((1.0 / big_c(), 2f64.powf((4.0 - 3.0 * nf) / (nf - 1.0))))
}

/// Resolves `AUTO` and validates an explicit `gamma` against both bounds.
pub fn resolve_gamma(n: usize, gamma: Gamma) -> Result<f64> {
    let (b1, b2) = gamma_bounds(n)?;
    match gamma {
        Gamma::Auto => Ok(b1.min(b2)),
        Gamma::Value(g) => {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
            }
            if g > b1 {
                return Err(Error::GammaTooLarge {
                    gamma: g,
                    bound_name: "gradient (1/C)",
                    bound: b1,
                });
            }
            if g > b2 {
                return Err(Error::GammaTooLarge {
                    gamma: g,
                    bound_name: "quadratic 2^((4-3n)/(n-1))",
                    bound: b2,
                });
            }
            Ok(g)
        }
    }
}

/// `(1 + rho^{n-1})^{1/(n-1)} - 1`, accurate for small `rho`.
pub(crate) fn radial_profile(rho: f64, n: usize) -> f64 {
    let m = (n - 1) as f64;
    (rho.powf(m).ln_1p() / m).exp_m1()
}

/// Evaluates the counterexample field for any `gamma > 0` (no bound check).
pub(crate) fn eval_unchecked(x: &[f64], n: usize, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let z = x[n - 1];
    if z <= 0.0 {
        return out;
    }
    let rho = x[..n - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    let m = (n - 1) as f64;
    let z2 = z * z;
    let zfac = z / (1.0 + z2 * z2);
    let (radial, vertical) = if rho < AXIS_CUTOFF {
        (-2.0 * gamma * zfac / m, gamma * z2.atan())
    } else {
        let u = rho.powf(m);
        let a = radial_profile(rho, n);
        (
            -2.0 * gamma * a / u * zfac,
            gamma * z2.atan() * ((2.0 - (n as f64)) / m * u.ln_1p()).exp(),
        )
    };
    for i in 0..n - 1 {
        out[i] = radial * x[i];
    }
    out[n - 1] = vertical;
    out
}

/// Builds the counterexample field `eta` in `R^n`, `n >= 4`.
pub fn make_counterexample_field(n: usize, gamma: Gamma) -> Result<VectorField> {
    let g = resolve_gamma(n, gamma)?;
    let id = match gamma {
        Gamma::Auto => format!("counterexample:n={n}:gamma=auto"),
        Gamma::Value(v) => format!("counterexample:n={n}:gamma={v}"),
    };
    Ok(VectorField::new(id, n, 1.0, move |x| Ok(eval_unchecked(x, n, g)))
        .with_divergence(|_| 0.0)
        .with_exclusion(Exclusion::hyperplane(n - 1, 0.0))
        .with_exclusion(Exclusion::axis_line(n - 1, vec![0.0; n]))
        .with_note(format!("gamma = {g:.15e}")))
}

/// The resolved gamma of a counterexample built with `gamma`.
pub fn counterexample_gamma(n: usize, gamma: Gamma) -> Result<f64> {
    resolve_gamma(n, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_gamma_n4() {
        let g = resolve_gamma(4, Gamma::Auto).unwrap();
        assert!((g - 2f64.powf(-8.0 / 3.0)).abs() < 1e-15);
        assert!((g - 0.15749).abs() < 1e-5);
    }

    #[test]
    fn rejects_small_dimension_and_large_gamma() {
        assert!(make_counterexample_field(3, Gamma::Auto).is_err());
        match make_counterexample_field(4, Gamma::Value(0.2)) {
            Err(Error::GammaTooLarge { bound_name, .. }) => assert!(bound_name.contains("quadratic")),
            other => panic!("unexpected {other:?}"),
        }
        match make_counterexample_field(4, Gamma::Value(1.0)) {
            Err(Error::GammaTooLarge { bound_name, .. }) => assert!(bound_name.contains("gradient")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn axis_value() {
        let f = make_counterexample_field(4, Gamma::Auto).unwrap();
        let g = 2f64.powf(-8.0 / 3.0);
        let v = f.eval(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(&v[..3], &[0.0, 0.0, 0.0]);
        assert!((v[3] - g * PI / 4.0).abs() < 1e-15);
        // the general branch just above the cutoff agrees with the axis limit
        let w = f.eval(&[2e-8, 0.0, 0.0, 1.0]).unwrap();
        assert!((w[3] - v[3]).abs() < 1e-14);
    }

    #[test]
    fn vanishes_below_plane() {
        let f = make_counterexample_field(5, Gamma::Auto).unwrap();
        assert_eq!(f.eval(&[0.3, -1.0, 2.0, 0.1, -0.5]).unwrap(), vec![0.0; 5]);
        assert_eq!(f.eval(&[0.3, -1.0, 2.0, 0.1, 0.0]).unwrap(), vec![0.0; 5]);
    }
}
