use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::VectorField;
use crate::trace::probe::validate_radii;
use crate::trace::{InterfaceKind, OrientedInterface};
use crate::{Error, Result};

/// `z_r(y) = z(x0 + r y)`.
pub fn rescale(z: &VectorField, x0: &[f64], r: f64) -> Result<VectorField> {
    if x0.len() != z.dim {
        return Err(Error::DimensionMismatch {
            expected: z.dim,
            got: x0.len(),
        });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("rescaling radius must be positive, got {r}")));
    }
    Ok(z.rescaled(x0, r))
}

/// The blown-up interface `S_r = (S - x0) / r`, with the same orientation.
pub fn rescale_interface(s: &OrientedInterface, x0: &[f64], r: f64) -> Result<OrientedInterface> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("rescaling radius must be positive, got {r}")));
    }
    let out = match &s.kind {
        InterfaceKind::Hyperplane { point, normal } => {
            let p: Vec<f64> = point.iter().zip(x0).map(|(p, x)| (p - x) / r).collect();
            OrientedInterface::hyperplane(&p, normal)?
        }
        InterfaceKind::Circle { center, radius } => {
            OrientedInterface::circle([(center[0] - x0[0]) / r, (center[1] - x0[1]) / r], radius / r)?
        }
        InterfaceKind::Curve {
            gamma,
            dgamma,
            s0,
            s1,
        } => {
            let (g, d) = (gamma.clone(), dgamma.clone());
            let (a, b) = (x0[0], x0[1]);
            OrientedInterface::curve(
                move |t| {
                    let p = g(t);
                    [(p[0] - a) / r, (p[1] - b) / r]
                },
                move |t| {
                    let v = d(t);
                    [v[0] / r, v[1] / r]
                },
                *s0,
                *s1,
            )?
        }
    };
    Ok(if s.orientation_sign < 0.0 { out.reversed() } else { out })
}

/// Rescalings `z_k(y) = z(x0 + r_k y)` along decreasing radii.
#[derive(Debug, Clone)]
pub struct BlowupSequence {
    pub base: VectorField,
    pub x0: Vec<f64>,
    pub radii: Vec<f64>,
    /// Index attached to each radius (the exponent for dyadic sequences).
    pub ks: Vec<i32>,
    pub fields: Vec<VectorField>,
}

impl BlowupSequence {
    pub fn new(z: &VectorField, x0: &[f64], radii: &[f64]) -> Result<Self> {
        let ks = (0..radii.len() as i32).collect();
        Self::build(z, x0, radii, ks)
    }

    /// `r_k = 2^{-k}` for `k` in `k_lo..=k_hi`.
    pub fn dyadic(z: &VectorField, x0: &[f64], k_lo: i32, k_hi: i32) -> Result<Self> {
        if k_lo > k_hi {
            return Err(Error::InvalidParameter("empty k range".into()));
        }
        let ks: Vec<i32> = (k_lo..=k_hi).collect();
        let radii: Vec<f64> = ks.iter().map(|k| 0.5f64.powi(*k)).collect();
        Self::build(z, x0, &radii, ks)
    }

    fn build(z: &VectorField, x0: &[f64], radii: &[f64], ks: Vec<i32>) -> Result<Self> {
        validate_radii(radii)?;
        let fields = radii.iter().map(|&r| rescale(z, x0, r)).collect::<Result<_>>()?;
        Ok(Self {
            base: z.clone(),
            x0: x0.to_vec(),
            radii: radii.to_vec(),
            ks,
            fields,
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn interfaces(&self, s: &OrientedInterface) -> Result<Vec<OrientedInterface>> {
        self.radii.iter().map(|&r| rescale_interface(s, &self.x0, r)).collect()
    }

    /// Sampled sup of `|z|` on `B_rho(x0)` and of `|z_k|` on the matching
    /// points `y = (x - x0) / r_k`; the two agree exactly up to rounding of `y`.
    pub fn sampled_sups(&self, k: usize, rho: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
        let n = self.base.dim;
        let r = self.radii[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut base, mut scaled) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let x: Vec<f64> = self.x0.iter().map(|c| c + rho * (2.0 * rng.random::<f64>() - 1.0)).collect();
            if !self.base.domain.contains(&x) {
                continue;
            }
            let y: Vec<f64> = (0..n).map(|i| (x[i] - self.x0[i]) / r).collect();
            let norm = |v: Vec<f64>| v.iter().map(|a| a * a).sum::<f64>().sqrt();
            base = base.max(norm(self.base.eval(&x)?));
            scaled = scaled.max(norm(self.fields[k].eval_or_zero(&y)?));
        }
        Ok((base, scaled))
    }
}
