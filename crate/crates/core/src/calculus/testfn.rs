use serde::Serialize;

use crate::quad::golden_max;

/// Smooth scalar test functions `psi` with closed-form gradients.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// `A exp(-|x - c|^2 / (2 sigma^2))`
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        amplitude: f64,
    },
    /// `A exp(-1 / (1 - |x - c|^2 / R^2))` inside the ball, zero outside.
    Bump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
    Sum {
        terms: Vec<(f64, TestFunction)>,
    },
}

/// Unscaled bump profile `exp(-1/(1-s^2))` and its derivative in `s`.
fn bump_profile(s: f64) -> (f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0);
    }
    let u = 1.0 - s * s;
    let v = (-1.0 / u).exp();
    (v, -2.0 * s * v / (u * u))
}

impl TestFunction {
    pub fn bump(center: &[f64], radius: f64) -> Self {
        TestFunction::Bump {
            center: center.to_vec(),
            radius,
            amplitude: 1.0,
        }
    }

    pub fn gaussian(center: &[f64], sigma: f64) -> Self {
        TestFunction::Gaussian {
            center: center.to_vec(),
            sigma,
            amplitude: 1.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        TestFunction::Constant { value }
    }

    pub fn combination(terms: Vec<(f64, TestFunction)>) -> Self {
        TestFunction::Sum { terms }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::Gaussian {
                center,
                sigma,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
            }
            TestFunction::Bump {
                center,
                radius,
                amplitude,
            } => {
                let r: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                amplitude * bump_profile(r / radius).0
            }
            TestFunction::Sum { terms } => terms.iter().map(|(c, t)| c * t.value(x)).sum(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            TestFunction::Constant { .. } => vec![0.0; x.len()],
            TestFunction::Gaussian { center, sigma, .. } => {
                let v = self.value(x);
                let s2 = sigma * sigma;
                x.iter().zip(center).map(|(a, b)| -v * (a - b) / s2).collect()
            }
            TestFunction::Bump {
                center,
                radius,
                amplitude,
            } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 || r >= *radius {
                    return vec![0.0; x.len()];
                }
                let (_, dp) = bump_profile(r / radius);
                let k = amplitude * dp / (radius * r);
                d.into_iter().map(|v| k * v).collect()
            }
            TestFunction::Sum { terms } => {
                let mut g = vec![0.0; x.len()];
                for (c, t) in terms {
                    for (a, b) in g.iter_mut().zip(t.gradient(x)) {
                        *a += c * b;
                    }
                }
                g
            }
        }
    }

    /// Ball containing the support, when compact.
    pub fn support(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            TestFunction::Bump { center, radius, .. } => Some((center.clone(), *radius)),
            TestFunction::Sum { terms } => {
                let balls = terms
                    .iter()
                    .filter(|(c, _)| *c != 0.0)
                    .map(|(_, t)| t.support())
                    .collect::<Option<Vec<_>>>()?;
                let first = balls.first()?;
                // centroid of the centers, radius reaching every ball
                let mut c = vec![0.0; first.0.len()];
                for (b, _) in &balls {
                    c.iter_mut().zip(b).for_each(|(s, v)| *s += v / balls.len() as f64);
                }
                let r = balls
                    .iter()
                    .map(|(b, r)| r + b.iter().zip(&c).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
                    .fold(0.0, f64::max);
                Some((c, r))
            }
            _ => None,
        }
    }

    /// `sup |psi| + sup |grad psi|` (an upper bound for sums).
    pub fn c1_norm(&self) -> f64 {
        match self {
            TestFunction::Constant { value } => value.abs(),
            TestFunction::Gaussian {
                sigma, amplitude, ..
            } => amplitude.abs() * (1.0 + (-0.5f64).exp() / sigma),
            TestFunction::Bump {
                radius, amplitude, ..
            } => {
                let (_, slope) = golden_max(|s| -bump_profile(s).1, 0.0, 1.0, 1e-12);
                amplitude.abs() * ((-1.0f64).exp() + slope / radius)
            }
            TestFunction::Sum { terms } => terms.iter().map(|(c, t)| c.abs() * t.c1_norm()).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(t: &TestFunction, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let (mut p, mut m) = (x.to_vec(), x.to_vec());
                p[i] += h;
                m[i] -= h;
                (t.value(&p) - t.value(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_differences() {
        let fns = [
            TestFunction::gaussian(&[0.1, 0.2], 0.7),
            TestFunction::bump(&[0.0, 0.0], 1.5),
            TestFunction::combination(vec![
                (2.0, TestFunction::bump(&[0.5, 0.0], 1.0)),
                (-1.0, TestFunction::gaussian(&[0.0, 1.0], 0.3)),
            ]),
        ];
        for t in &fns {
            for x in [[0.3, -0.4], [1.0, 0.5], [-0.2, 0.9]] {
                let g = t.gradient(&x);
                let f = fd(t, &x);
                for k in 0..2 {
                    assert!((g[k] - f[k]).abs() < 1e-7, "{t:?} at {x:?}");
                }
            }
        }
    }

    #[test]
    fn c1_norm_bounds_samples() {
        let t = TestFunction::bump(&[0.0, 0.0], 0.5);
        let n = t.c1_norm();
        for k in 0..1000 {
            let x = [0.5 * k as f64 / 1000.0, 0.0];
            let g = t.gradient(&x);
            assert!(t.value(&x).abs() <= n && g[0].hypot(g[1]) <= n);
        }
    }
}
