//! Lebesgue densities `|E ∩ B_r(x)| / |B_r(x)|` by randomized quasi-Monte Carlo,
//! and the one-sided approximate-limit test built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::interface::OrientedInterface;
use super::probe::{extrapolate, validate_radii};
use crate::fields::VectorField;
use crate::report::{Check, VerificationReport};
use crate::{Error, Result};

/// Default verdict threshold for "density zero".
pub const EPS_DENSITY: f64 = 1e-2;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DensityOptions {
    /// Points per radius, split evenly over the replicates.
    pub samples: usize,
    /// Independently shifted replicates used for the standard error.
    pub replicates: usize,
    pub seed: u64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            replicates: 10,
            seed: 0x0d5e_17e5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityProbe {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Standard error of each ratio across replicates.
    pub stderr: Vec<f64>,
    /// Extrapolated density, clamped to `[0, 1]`.
    pub theta: f64,
    pub samples: usize,
}

impl DensityProbe {
    pub fn theta_stderr(&self) -> f64 {
        self.stderr.last().copied().unwrap_or(0.0)
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    out
}

/// `k`-th point of the low-discrepancy sequence in `[0,1)^d`: the additive
/// R_d sequence in two dimensions, Halton otherwise.
fn qmc_point(k: u64, d: usize, out: &mut [f64]) {
    if d == 2 {
        const G: f64 = 1.324_717_957_244_746;
        let a = [1.0 / G, 1.0 / (G * G)];
        for j in 0..2 {
            out[j] = (0.5 + a[j] * k as f64).fract();
        }
    } else {
        for j in 0..d {
            out[j] = radical_inverse(k + 1, PRIMES[j % PRIMES.len()]);
        }
    }
}

/// Uniform points in the unit ball: polar map in 2D, cube rejection otherwise.
fn ball_points(d: usize, count: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(count);
    let mut u = vec![0.0; d];
    let mut k = 0u64;
    while pts.len() < count {
        qmc_point(k, d, &mut u);
        k += 1;
        for j in 0..d {
            u[j] = (u[j] + shift[j]).fract();
        }
        if d == 2 {
            let r = u[0].sqrt();
            let th = 2.0 * std::f64::consts::PI * u[1];
            pts.push(vec![r * th.cos(), r * th.sin()]);
        } else {
            let p: Vec<f64> = u.iter().map(|v| 2.0 * v - 1.0).collect();
            if p.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                pts.push(p);
            }
        }
    }
    pts
}

/// Density ratios of `E = {indicator}` at `x` for decreasing radii.
pub fn density<F>(indicator: F, x: &[f64], radii: &[f64], opts: &DensityOptions) -> Result<DensityProbe>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    validate_radii(radii)?;
    let d = x.len();
    if d < 2 {
        return Err(Error::InvalidParameter("density needs dimension >= 2".into()));
    }
    let reps = opts.replicates.max(2);
    let per = (opts.samples / reps).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shifts: Vec<Vec<f64>> = (0..reps)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    let unit: Vec<Vec<Vec<f64>>> = shifts.par_iter().map(|s| ball_points(d, per, s)).collect();

    let mut ratios = Vec::with_capacity(radii.len());
    let mut stderr = Vec::with_capacity(radii.len());
    for &r in radii {
        let means: Vec<f64> = unit
            .par_iter()
            .map(|pts| {
                let mut p = vec![0.0; d];
                let hits = pts
                    .iter()
                    .filter(|u| {
                        for j in 0..d {
                            p[j] = x[j] + r * u[j];
                        }
                        indicator(&p)
                    })
                    .count();
                hits as f64 / pts.len() as f64
            })
            .collect();
        let m = means.iter().sum::<f64>() / reps as f64;
        let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps - 1) as f64;
        ratios.push(m);
        // floor at the resolution of the point set
        stderr.push((var / reps as f64).sqrt().max(1.0 / (per * reps) as f64));
    }
    let (theta, _) = extrapolate(radii, &ratios);
    Ok(DensityProbe {
        center: x.to_vec(),
        radii: radii.to_vec(),
        ratios,
        stderr,
        theta: theta.clamp(0.0, 1.0),
        samples: per * reps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ApLimVerdict {
    ApLimConfirmed,
    ApLimRejected,
    Inconclusive,
}

impl ApLimVerdict {
    pub fn tag(self) -> &'static str {
        match self {
            ApLimVerdict::ApLimConfirmed => "AP_LIM_CONFIRMED",
            ApLimVerdict::ApLimRejected => "AP_LIM_REJECTED",
            ApLimVerdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Density of `E_alpha = {x in D ∩ B^{-nu}(x0) : |field(x) - w| >= alpha}` at `x0`.
pub fn deviation_density(
    field: &VectorField,
    nu: &[f64],
    x0: &[f64],
    w: &[f64],
    alpha: f64,
    radii: &[f64],
    opts: &DensityOptions,
) -> Result<DensityProbe> {
    let n = field.dim;
    if x0.len() != n || w.len() != n || nu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len().min(w.len()).min(nu.len()),
        });
    }
    let failure = std::sync::Mutex::new(None);
    let probe = density(
        |x| {
            let side: f64 = x.iter().zip(x0).zip(nu).map(|((a, b), v)| (a - b) * v).sum();
            if side >= 0.0 || !field.domain.contains(x) {
                return false;
            }
            match field.eval(x) {
                Ok(v) => v.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() >= alpha * alpha,
                Err(e) => {
                    failure.lock().expect("poisoned").get_or_insert(e);
                    false
                }
            }
        },
        x0,
        radii,
        opts,
    )?;
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(probe)
}

/// One-sided approximate limit test of `field` at `x0 ∈ S` against `w`.
///
/// Confirmed when every extrapolated density and every smallest-radius ratio is
/// at most `eps_density`; rejected when for some `alpha` the ratios stay at
/// least `eps_density` (after subtracting three standard errors) on all radii.
pub fn one_sided_ap_lim(
    field: &VectorField,
    s: &OrientedInterface,
    x0: &[f64],
    w: &[f64],
    alphas: &[f64],
    radii: &[f64],
    eps_density: f64,
    opts: &DensityOptions,
) -> Result<VerificationReport> {
    let nu = s.normal_at(x0)?;
    let mut rep = VerificationReport::new("one_sided_ap_lim");
    rep.insert("field", &field.id)
        .insert("x0", x0)
        .insert("w", w)
        .insert("normal", &nu)
        .insert("eps_density", eps_density);
    let mut confirmed = true;
    let mut rejected = false;
    let mut rows = Vec::new();
    for &alpha in alphas {
        let p = deviation_density(field, &nu, x0, w, alpha, radii, opts)?;
        let last = *p.ratios.last().expect("nonempty radii");
        confirmed &= p.theta <= eps_density && last <= eps_density;
        let floor = p
            .ratios
            .iter()
            .zip(&p.stderr)
            .map(|(r, e)| r - 3.0 * e)
            .fold(f64::INFINITY, f64::min);
        rejected |= floor >= eps_density;
        rows.push(serde_json::json!({
            "alpha": alpha,
            "theta": p.theta,
            "ratios": p.ratios,
            "stderr": p.stderr,
            "radii": p.radii,
            "lower_bound": floor,
        }));
    }
    let verdict = if rejected {
        ApLimVerdict::ApLimRejected
    } else if confirmed {
        ApLimVerdict::ApLimConfirmed
    } else {
        ApLimVerdict::Inconclusive
    };
    rep.insert("alphas", rows).insert("verdict", verdict).set_status(verdict.tag());
    rep.push(Check::flag("decided", verdict != ApLimVerdict::Inconclusive));
    Ok(rep)
}
