use std::fmt::Write as _;

use serde::Serialize;

use crate::{Error, Result};

/// Relative quadrature tolerance used by the trace probes.
pub const PROBE_QUAD_TOL: f64 = 1e-9;

/// Accuracy target for averaged estimates; spreads above five times this
/// value are reported as oscillation.
pub const PROBE_AVG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMethod {
    BallAverage,
    Curvilinear,
    Pairing,
    SphereFlux,
}

/// Per-radius estimates of a normal trace at `x0`.
#[derive(Debug, Clone, Serialize)]
pub struct TraceProbe {
    pub method: TraceMethod,
    pub x0: Vec<f64>,
    pub normal: Vec<f64>,
    pub radii: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Quadrature error estimate per radius.
    pub stderr: Vec<f64>,
    /// Intercept of the least-squares fit `a + b r` on the last four radii.
    pub extrapolated: f64,
    /// Spread of the fit residuals on the last four radii.
    pub oscillation: f64,
    pub oscillating: bool,
    /// Width parameter of curvilinear rectangles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl TraceProbe {
    pub(crate) fn assemble(
        method: TraceMethod,
        x0: &[f64],
        normal: Vec<f64>,
        radii: &[f64],
        estimates: Vec<f64>,
        stderr: Vec<f64>,
        rho: Option<f64>,
    ) -> Self {
        let (extrapolated, oscillation) = extrapolate(radii, &estimates);
        Self {
            method,
            x0: x0.to_vec(),
            normal,
            radii: radii.to_vec(),
            estimates,
            stderr,
            extrapolated,
            oscillation,
            oscillating: oscillation > 5.0 * PROBE_AVG_TOL,
            rho,
        }
    }

    /// `(liminf, limsup)` proxies: min and max of the estimates on the last four radii.
    pub fn tail_range(&self) -> (f64, f64) {
        let k = self.estimates.len().saturating_sub(4);
        let tail = &self.estimates[k..];
        (
            tail.iter().copied().fold(f64::INFINITY, f64::min),
            tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// `radius,estimate,stderr` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,estimate,stderr\n");
        for ((r, e), d) in self.radii.iter().zip(&self.estimates).zip(&self.stderr) {
            let _ = writeln!(s, "{r:.17e},{e:.17e},{d:.3e}");
        }
        s
    }
}

pub(crate) fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("empty radius sequence".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radii must be strictly decreasing".into()));
    }
    Ok(())
}

/// Least-squares fit of `a + b r` over the last (smallest) four radii.
/// Returns the intercept and the spread of the residuals.
pub fn extrapolate(radii: &[f64], values: &[f64]) -> (f64, f64) {
    let k = radii.len().saturating_sub(4);
    let (r, v) = (&radii[k..], &values[k..]);
    if r.len() == 1 {
        return (v[0], 0.0);
    }
    let m = r.len() as f64;
    let rm = r.iter().sum::<f64>() / m;
    let vm = v.iter().sum::<f64>() / m;
    let sxx: f64 = r.iter().map(|x| (x - rm) * (x - rm)).sum();
    let sxy: f64 = r.iter().zip(v).map(|(x, y)| (x - rm) * (y - vm)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = vm - b * rm;
    let res: Vec<f64> = r.iter().zip(v).map(|(x, y)| y - a - b * x).collect();
    let spread = res.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - res.iter().copied().fold(f64::INFINITY, f64::min);
    (a, spread)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_data_extrapolates_exactly() {
        let r = [0.4, 0.2, 0.1, 0.05, 0.025];
        let v: Vec<f64> = r.iter().map(|x| 1.0 - 3.0 * x).collect();
        let (a, s) = extrapolate(&r, &v);
        assert!((a - 1.0).abs() < 1e-14 && s < 1e-14);
    }

    #[test]
    fn radii_validation() {
        assert!(validate_radii(&[0.5, 0.25]).is_ok());
        assert!(validate_radii(&[0.5, 0.5]).is_err());
        assert!(validate_radii(&[0.5, -0.1]).is_err());
    }
}
