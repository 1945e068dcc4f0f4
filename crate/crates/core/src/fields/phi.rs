use std::fmt;
use std::sync::Arc;

use crate::report::{Check, VerificationReport};

/// A convex gauge `phi: [0, inf) -> [0, inf)` with `phi(0) = 0`.
#[derive(Clone)]
pub struct PhiFunction {
    pub label: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Number of sample points used by [`PhiFunction::audit`].
    pub convexity_samples: usize,
    /// Slope of the gauge when it is linear, `phi(t) = c t`.
    pub linear_constant: Option<f64>,
}

impl fmt::Debug for PhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiFunction")
            .field("label", &self.label)
            .field("linear_constant", &self.linear_constant)
            .finish()
    }
}

impl PhiFunction {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(f),
            convexity_samples: 64,
            linear_constant: None,
        }
    }

    /// `phi(t) = c t`.
    pub fn linear(c: f64) -> Self {
        let mut p = Self::new(format!("linear:c={c}"), move |t| c * t);
        p.linear_constant = Some(c);
        p
    }

    /// `phi(t) = t^2 / 2`.
    pub fn quadratic() -> Self {
        Self::new("quadratic", |t| 0.5 * t * t)
    }

    /// `phi(t) = c t^2`.
    pub fn quadratic_with(c: f64) -> Self {
        Self::new(format!("quadratic:c={c}"), move |t| c * t * t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// Sampled audit of `phi(0) = 0`, positivity and midpoint convexity on `[0, t_max]`.
    pub fn audit(&self, t_max: f64) -> VerificationReport {
        let mut rep = VerificationReport::new(format!("phi_audit:{}", self.label));
        rep.push(Check::near("phi(0)", self.eval(0.0), 0.0, 0.0));
        let m = self.convexity_samples.max(2);
        let ts: Vec<f64> = (1..=m).map(|k| t_max * k as f64 / m as f64).collect();
        let min_pos = ts.iter().map(|&t| self.eval(t)).fold(f64::INFINITY, f64::min);
        rep.push(Check::flag("positive_on_samples", min_pos > 0.0));
        let mut worst = f64::INFINITY;
        for (i, &a) in ts.iter().enumerate() {
            for &b in &ts[i..] {
                let gap = 0.5 * (self.eval(a) + self.eval(b)) - self.eval(0.5 * (a + b));
                worst = worst.min(gap);
            }
            // triples including the origin
            let gap = 0.5 * self.eval(a) - self.eval(0.5 * a);
            worst = worst.min(gap);
        }
        rep.push(Check::at_least("midpoint_convexity_margin", worst, -1e-12));
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gauges_pass_audit() {
        assert!(PhiFunction::linear(0.5).audit(2.0).passed());
        assert!(PhiFunction::quadratic().audit(2.0).passed());
    }

    #[test]
    fn concave_gauge_fails() {
        assert!(!PhiFunction::new("sqrt", f64::sqrt).audit(1.0).passed());
    }
}
