//! Deviation sets `N_alpha` of normalized fields and the quadratic inequality
//! `z_n >= |z|^2 / 2` for `z = xi + e_n`, `|xi| <= 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::GridSpec;
use crate::fields::VectorField;
use crate::report::{Check, VerificationReport};
use crate::trace::{deviation_density, DensityOptions, DensityProbe, OrientedInterface, EPS_DENSITY};
use crate::{Error, Result};

/// Allowed distance of `sup |xi|` from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Slack for the quadratic margin.
pub const QUADRATIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct NAlphaProbe {
    pub alpha: f64,
    pub normal: Vec<f64>,
    /// Rotation taking `nu_S(x0)` to `-e_2` (planar interfaces only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[[f64; 2]; 2]>,
    pub density: DensityProbe,
    /// Smallest-radius ratio and extrapolated density both at most `EPS_DENSITY`.
    pub zero_density: bool,
}

/// Density of `N_alpha = {x in B_r^+(x0) : |R xi(x) + e_2| >= alpha}` where
/// `R` rotates `nu_S(x0)` to `-e_2`. Since `|R xi + e_2| = |xi - nu_S(x0)|`
/// the sampling runs in the original frame.
pub fn nalpha_density(
    xi: &VectorField,
    s: &OrientedInterface,
    x0: &[f64],
    alpha: f64,
    radii: &[f64],
    opts: &DensityOptions,
) -> Result<NAlphaProbe> {
    if (xi.sup_bound - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sup: xi.sup_bound });
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let nu = s.normal_at(x0)?;
    let rotation = (nu.len() == 2).then(|| {
        // rows chosen so that R nu = (0, -1)
        [[-nu[1], nu[0]], [-nu[0], -nu[1]]]
    });
    let density = deviation_density(xi, &nu, x0, &nu, alpha, radii, opts)?;
    let last = *density.ratios.last().expect("nonempty radii");
    Ok(NAlphaProbe {
        alpha,
        normal: nu,
        rotation,
        zero_density: last <= EPS_DENSITY && density.theta <= EPS_DENSITY,
        density,
    })
}

/// `z_n - |z|^2 / 2` for `z = xi + e_n`; equals `(1 - |xi|^2) / 2`.
pub fn quadratic_margin(xi: &[f64]) -> f64 {
    let n = xi.len();
    let mut z = xi.to_vec();
    z[n - 1] += 1.0;
    z[n - 1] - 0.5 * z.iter().map(|v| v * v).sum::<f64>()
}

/// Margins of the quadratic inequality on the grid nodes inside the field's domain.
pub fn quadratic_inequality_check(xi: &VectorField, grid: &GridSpec) -> Result<VerificationReport> {
    if grid.dim() != xi.dim {
        return Err(Error::DimensionMismatch {
            expected: xi.dim,
            got: grid.dim(),
        });
    }
    let rows: Vec<(f64, f64, Vec<f64>)> = grid
        .points()
        .into_par_iter()
        .filter(|x| xi.domain.contains(x))
        .map(|x| {
            let v = xi.eval(&x)?;
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            Ok((quadratic_margin(&v), norm, x))
        })
        .collect::<Result<_>>()?;
    let sup = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let (worst, argmin) = rows
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|r| (r.0, r.2.clone()))
        .unwrap_or((0.0, Vec::new()));
    let mut rep = VerificationReport::new("quadratic_inequality");
    rep.insert("field", &xi.id)
        .insert("nodes", rows.len())
        .insert("argmin", argmin);
    rep.push(Check::at_most("sampled_sup", sup, 1.0 + QUADRATIC_TOL));
    rep.push(Check::at_least("min_margin", worst, -QUADRATIC_TOL));
    Ok(rep)
}

/// The quadratic inequality on `samples` values drawn uniformly from the unit
/// ball of `R^n`, with the closed form `(1 - |xi|^2) / 2` as cross-check.
pub fn quadratic_inequality_random(n: usize, samples: usize, seed: u64) -> Result<VerificationReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("dimension must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut max_dev = 0.0f64;
    let mut drawn = 0;
    while drawn < samples {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let r2: f64 = v.iter().map(|a| a * a).sum();
        if r2 > 1.0 {
            continue;
        }
        drawn += 1;
        let m = quadratic_margin(&v);
        worst = worst.min(m);
        max_dev = max_dev.max((m - 0.5 * (1.0 - r2)).abs());
    }
    let mut rep = VerificationReport::new("quadratic_inequality_random");
    rep.insert("dim", n).insert("samples", samples).insert("seed", seed);
    rep.push(Check::at_least("min_margin", worst, -QUADRATIC_TOL));
    rep.push(Check::at_most("closed_form_deviation", max_dev, QUADRATIC_TOL));
    Ok(rep)
}
