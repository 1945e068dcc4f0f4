//! Exactly divergence-free fields generated by stream functions.

use super::VectorField;
use crate::quad::golden_max;
use crate::{Error, Result};

/// `psi(x) = A g(|x - c|^2 / R^2)` with `g(s) = exp(-1 / (1 - s))` for `s < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

fn g(s: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 - s;
    let v = (-1.0 / u).exp();
    let u2 = u * u;
    (v, -v / u2, v * (1.0 / (u2 * u2) - 2.0 / (u2 * u)))
}

impl RadialBump {
    pub fn new(center: Vec<f64>, radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("bump radius must be positive, got {radius}")));
        }
        Ok(Self {
            center,
            radius,
            amplitude,
        })
    }

    /// The default test bump: centered at `(0, 2)` (or `(0, 0, 2)`), radius 1.
    pub fn standard(dim: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[dim - 1] = 2.0;
        Self {
            center: c,
            radius: 1.0,
            amplitude: 1.0,
        }
    }

    fn s(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let s = d.iter().map(|v| v * v).sum::<f64>() / (self.radius * self.radius);
        (s, d)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.amplitude * g(self.s(x).0).0
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (s, d) = self.s(x);
        let k = self.amplitude * g(s).1 * 2.0 / (self.radius * self.radius);
        d.into_iter().map(|v| k * v).collect()
    }

    /// Row-major Hessian.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let (s, d) = self.s(x);
        let n = d.len();
        let (_, g1, g2) = g(s);
        let r2 = self.radius * self.radius;
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut v = self.amplitude * g2 * 4.0 * d[i] * d[j] / (r2 * r2);
                if i == j {
                    v += self.amplitude * g1 * 2.0 / r2;
                }
                h[i * n + j] = v;
            }
        }
        h
    }

    /// Exact sup of `|grad psi|`: `(2|A|/R) max_s sqrt(s) g(s) / (1 - s)^2`.
    pub fn gradient_sup(&self) -> f64 {
        let (_, m) = golden_max(
            |s| {
                if s <= 0.0 || s >= 1.0 {
                    0.0
                } else {
                    s.sqrt() * (-1.0 / (1.0 - s)).exp() / ((1.0 - s) * (1.0 - s))
                }
            },
            0.0,
            1.0,
            1e-12,
        );
        2.0 * self.amplitude.abs() / self.radius * m
    }
}

/// `eta = (-d2 psi, d1 psi)` in the plane. `sup_bound` must bound `|grad psi|`.
pub fn make_stream_field<P, G>(id: impl Into<String>, psi: P, grad: G, sup_bound: f64) -> VectorField
where
    P: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    G: Fn(&[f64]) -> [f64; 2] + Send + Sync + 'static,
{
    VectorField::new(id, 2, sup_bound, move |x| {
        let d = grad(x);
        Ok(vec![-d[1], d[0]])
    })
    .with_divergence(|_| 0.0)
    .with_stream_function(psi)
}

/// Stream field of a radial bump, with its exact Jacobian and sup.
pub fn bump_stream_field(bump: RadialBump) -> Result<VectorField> {
    if bump.center.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: bump.center.len(),
        });
    }
    let id = format!(
        "stream:bump:cx={}:cy={}:R={}:A={}",
        bump.center[0], bump.center[1], bump.radius, bump.amplitude
    );
    let sup = bump.gradient_sup();
    let (b1, b2) = (bump.clone(), bump.clone());
    Ok(make_stream_field(
        id,
        move |x| b1.value(x),
        move |x| {
            let d = b2.gradient(x);
            [d[0], d[1]]
        },
        sup,
    )
    .with_jacobian(move |x| {
        let h = bump.hessian(x);
        // d(-psi_2)/dx_j, d(psi_1)/dx_j
        vec![-h[2], -h[3], h[0], h[1]]
    }))
}

/// Three-dimensional variant `eta = curl(psi e_1) = (0, d3 psi, -d2 psi)`.
pub fn make_stream_field_3d(bump: RadialBump) -> Result<VectorField> {
    if bump.center.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: bump.center.len(),
        });
    }
    let id = format!(
        "stream3:bump:cx={}:cy={}:cz={}:R={}:A={}",
        bump.center[0], bump.center[1], bump.center[2], bump.radius, bump.amplitude
    );
    let sup = bump.gradient_sup();
    let b = bump.clone();
    Ok(VectorField::new(id, 3, sup, move |x| {
        let d = b.gradient(x);
        Ok(vec![0.0, d[2], -d[1]])
    })
    .with_divergence(|_| 0.0)
    .with_jacobian(move |x| {
        let h = bump.hessian(x);
        vec![0.0, 0.0, 0.0, h[6], h[7], h[8], -h[3], -h[4], -h[5]]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(b: &RadialBump, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (b.value(&p) - b.value(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_differences() {
        let b = RadialBump::standard(2);
        for x in [[0.3, 2.1], [-0.5, 1.6], [0.0, 2.9]] {
            let g = b.gradient(&x);
            let f = fd_grad(&b, &x);
            for k in 0..2 {
                assert!((g[k] - f[k]).abs() < 1e-8, "{x:?}");
            }
        }
    }

    #[test]
    fn sup_is_attained_not_exceeded() {
        let b = RadialBump::standard(2);
        let sup = b.gradient_sup();
        let mut best: f64 = 0.0;
        for k in 0..20000 {
            let t = k as f64 / 20000.0;
            let g = b.gradient(&[t, 2.0]);
            best = best.max(g[0].hypot(g[1]));
        }
        assert!(best <= sup + 1e-12);
        assert!(sup - best < 1e-6);
    }

    #[test]
    fn zero_stream_function_gives_zero_field() {
        let f = make_stream_field("zero", |_| 0.0, |_| [0.0, 0.0], 0.0);
        assert_eq!(f.eval(&[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn bump_field_vanishes_below_support() {
        let f = bump_stream_field(RadialBump::standard(2)).unwrap();
        assert_eq!(f.eval(&[0.0, 0.5]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(f.eval(&[0.3, -1.0]).unwrap(), vec![0.0, 0.0]);
    }
}
