//! Integral curves of `X = eta + eps e_n`, the transported Jacobian `delta` of
//! the height map, and flow tubes seeded on a top plate `A x {h0}`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::fields::VectorField;
use crate::ode::{Dopri5, Event, StopReason};
use crate::quad::{composite_rule, try_adaptive, Tol};
use crate::report::{Check, VerificationReport};
use crate::{Error, Result};

/// Arrival state of one trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct FlowState {
    pub p: Vec<f64>,
    pub target_height: f64,
    /// Flow time `T(p, h)` (negative when flowing down).
    pub t: f64,
    pub position: Vec<f64>,
    /// Jacobian of the height-to-height map, `delta = 1` at the seed height.
    pub delta: f64,
    pub min_delta: f64,
    pub steps: usize,
    pub rejected: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<(f64, Vec<f64>, f64)>,
}

const FD_JAC_STEP: f64 = 1e-6;

/// Longest spatial distance covered by a single integrator step.
pub const MAX_STEP_LENGTH: f64 = 0.1;

fn jacobian(x_field: &VectorField, y: &[f64]) -> Result<Vec<f64>> {
    if let Some(j) = x_field.analytic_jacobian(y) {
        return Ok(j);
    }
    let n = y.len();
    let mut j = vec![0.0; n * n];
    let mut p = y.to_vec();
    for k in 0..n {
        p[k] = y[k] + FD_JAC_STEP;
        let fp = x_field.eval_or_zero(&p)?;
        p[k] = y[k] - FD_JAC_STEP;
        let fm = x_field.eval_or_zero(&p)?;
        p[k] = y[k];
        for i in 0..n {
            j[i * n + k] = (fp[i] - fm[i]) / (2.0 * FD_JAC_STEP);
        }
    }
    Ok(j)
}

/// Right-hand side for `(Phi, delta)`: `Phi' = X(Phi)` and
/// `delta' = delta [sum_{i<n} d_i X_i - X_n^{-1} sum_{i<n} X_i d_i X_n]`, the
/// horizontal divergence of `X^/X_n` rescaled to flow time.
fn rhs(x_field: &VectorField, y: &[f64]) -> Result<Vec<f64>> {
    let n = x_field.dim;
    let pos = &y[..n];
    let v = x_field.eval_or_zero(pos)?;
    let xn = v[n - 1];
    if !(xn > 0.0) {
        return Err(Error::MonotonicityViolation {
            value: xn,
            point: pos.to_vec(),
        });
    }
    let j = jacobian(x_field, pos)?;
    let tr: f64 = (0..n - 1).map(|i| j[i * n + i]).sum();
    let adv: f64 = (0..n - 1).map(|i| v[i] * j[(n - 1) * n + i]).sum();
    let mut out = v;
    out.push(y[n] * (tr - adv / xn));
    Ok(out)
}

/// Integrates `dPhi/dt = X(Phi)` from `p` until `Phi_n = h`, carrying `delta`.
pub fn integrate_flow(x_field: &VectorField, p: &[f64], target_height: f64) -> Result<FlowState> {
    integrate_flow_with(x_field, p, target_height, &Dopri5::with_tol(1e-11, 1e-13))
}

pub fn integrate_flow_with(x_field: &VectorField, p: &[f64], target_height: f64, solver: &Dopri5) -> Result<FlowState> {
    let n = x_field.dim;
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let mut y0 = p.to_vec();
    y0.push(1.0);
    let dh = target_height - p[n - 1];
    // X_n > 0 is enforced in the right-hand side, so time runs with the height
    let t_end = if dh >= 0.0 { 1e12 } else { -1e12 };
    // cap the spatial length of one step so that no feature can be stepped over
    let mut solver = *solver;
    if !solver.h_max.is_finite() && x_field.sup_bound.is_finite() && x_field.sup_bound > 0.0 {
        solver.h_max = MAX_STEP_LENGTH / x_field.sup_bound;
    }
    let mut min_delta = 1.0f64;
    let out = solver.solve(
        |_, y| rhs(x_field, y),
        0.0,
        &y0,
        t_end,
        Some(Event {
            component: n - 1,
            target: target_height,
        }),
        |_, y| {
            min_delta = min_delta.min(y[n]);
            false
        },
    )?;
    match out.reason {
        StopReason::Event => {}
        StopReason::StepUnderflow | StopReason::MaxSteps => {
            return Err(Error::StiffFailure {
                t: out.t,
                step: out.last_step,
            })
        }
        _ => {
            return Err(Error::StiffFailure {
                t: out.t,
                step: out.last_step,
            })
        }
    }
    let delta = out.y[n];
    min_delta = min_delta.min(delta);
    let samples = out
        .trace
        .iter()
        .map(|(t, y)| (*t, y[..n].to_vec(), y[n]))
        .collect();
    Ok(FlowState {
        p: p.to_vec(),
        target_height,
        t: out.t,
        position: out.y[..n].to_vec(),
        delta,
        min_delta,
        steps: out.steps,
        rejected: out.rejected,
        samples,
    })
}

/// Options for [`build_flow_tube`].
#[derive(Debug, Clone, Serialize)]
pub struct TubeOptions {
    /// Seeds per axis of `A`, a multiple of `panel_order`.
    pub seeds_per_axis: usize,
    /// Gauss–Legendre nodes per panel of the seed rule (1 is the midpoint rule).
    pub panel_order: usize,
    /// Slope of a linear gauge `phi(t) = c t`, enabling the displacement check.
    pub linear_gauge: Option<f64>,
    /// Number of trajectories kept for CSV output.
    pub record_trajectories: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for TubeOptions {
    fn default() -> Self {
        Self {
            seeds_per_axis: 64,
            panel_order: 2,
            linear_gauge: None,
            record_trajectories: 0,
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTube {
    pub a_lo: Vec<f64>,
    pub a_hi: Vec<f64>,
    pub h0: f64,
    pub epsilon: f64,
    pub seeds: usize,
    /// `int_A (eta_n(q, h0) + eps) dq` by adaptive quadrature.
    pub top_integral: f64,
    /// `H^{n-1}(L_eps(A)) = int_A delta(q, 0) dq` by the seed quadrature rule.
    pub bottom_measure: f64,
    pub residual: f64,
    /// Half side of the smallest centered box containing the bottom points.
    pub r_bound: f64,
    pub min_delta: f64,
    pub max_displacement: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub displacement_bound: Option<f64>,
    pub min_eta_n: f64,
    #[serde(skip)]
    pub trajectories: Vec<FlowState>,
}

impl FlowTube {
    /// `seed,q1..,h,t,x1..xn,delta` rows of the recorded trajectories, where
    /// `q` is the seed on the top plate and `h` the current height.
    pub fn trajectories_csv(&self) -> String {
        let n = self.a_lo.len() + 1;
        let mut s = String::from("seed");
        for k in 1..n {
            let _ = write!(s, ",q{k}");
        }
        s.push_str(",h,t");
        for k in 1..=n {
            let _ = write!(s, ",x{k}");
        }
        s.push_str(",delta\n");
        for (i, tr) in self.trajectories.iter().enumerate() {
            for (t, x, d) in &tr.samples {
                let _ = write!(s, "{i}");
                for q in &tr.p[..n - 1] {
                    let _ = write!(s, ",{q:.12e}");
                }
                let _ = write!(s, ",{:.12e},{t:.12e}", x[n - 1]);
                for v in x {
                    let _ = write!(s, ",{v:.12e}");
                }
                let _ = writeln!(s, ",{d:.12e}");
            }
        }
        s
    }

    pub fn report(&self) -> VerificationReport {
        let mut rep = VerificationReport::new("flow_tube");
        let n = self.a_lo.len() as i32;
        rep.insert("tube", self);
        rep.push(Check::at_least("min_delta", self.min_delta, f64::MIN_POSITIVE));
        rep.push(Check::at_most(
            "bottom_measure_vs_box",
            self.bottom_measure,
            (2.0 * self.r_bound).powi(n),
        ));
        if let Some(b) = self.displacement_bound {
            rep.push(Check::at_most("displacement", self.max_displacement, b));
        }
        rep
    }
}

/// Nested adaptive integral of `f` over the box `[lo, hi]` (any dimension).
fn box_integral<F>(f: &F, lo: &[f64], hi: &[f64], prefix: &mut Vec<f64>, tol: Tol) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let k = prefix.len();
    if k == lo.len() {
        return f(prefix);
    }
    let inner = tol.scaled(1.0 / (hi[k] - lo[k]));
    let e = try_adaptive(
        |s| {
            prefix.push(s);
            let v = box_integral(f, lo, hi, prefix, inner);
            prefix.pop();
            Ok([v?])
        },
        lo[k],
        hi[k],
        tol,
    )?;
    Ok(e.value[0])
}

/// Tensor product of composite Gauss–Legendre rules on `A`: `m` nodes per
/// axis in panels of `order` nodes. Returns seeds and weights.
fn seed_rule(lo: &[f64], hi: &[f64], m: usize, order: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let axes: Vec<Vec<(f64, f64)>> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| composite_rule(*a, *b, m / order, order))
        .collect();
    let d = lo.len();
    let total = m.pow(d as u32);
    let mut seeds = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        seeds.push((0..d).map(|k| axes[k][idx[k]].0).collect());
        weights.push((0..d).map(|k| axes[k][idx[k]].1).product());
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
    (seeds, weights)
}

/// Builds the flow tube `F_eps(A)` of `X = eta + eps e_n` from `A x {h0}` down to `{x_n = 0}`.
pub fn build_flow_tube(
    eta: &VectorField,
    epsilon: f64,
    a_lo: &[f64],
    a_hi: &[f64],
    h0: f64,
    opts: &TubeOptions,
) -> Result<FlowTube> {
    let n = eta.dim;
    if a_lo.len() != n - 1 || a_hi.len() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: a_lo.len(),
        });
    }
    if a_lo.iter().zip(a_hi).any(|(a, b)| !(a < b)) || !(h0 > 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("need a nonempty plate A, h0 > 0 and eps > 0".into()));
    }
    if opts.panel_order == 0 || opts.seeds_per_axis == 0 || opts.seeds_per_axis % opts.panel_order != 0 {
        return Err(Error::InvalidParameter(
            "seeds_per_axis must be a positive multiple of panel_order".into(),
        ));
    }
    // audit eps against the sampled negative part of eta_n on a box around the tube
    let margin = h0 * (eta.sup_bound / epsilon).min(4.0) + 0.5;
    let mut lo: Vec<f64> = a_lo.iter().map(|v| v - margin).collect();
    let mut hi: Vec<f64> = a_hi.iter().map(|v| v + margin).collect();
    lo.push(0.0);
    hi.push(h0);
    let audit = crate::calculus::GridSpec::uniform_box(&lo, &hi, if n == 2 { 257 } else { 41 })?;
    let (min_eta_n, worst) = audit
        .points()
        .into_par_iter()
        .map(|x| eta.eval_or_zero(&x).map(|v| (v[n - 1], x)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::INFINITY, Vec::new()), |acc, (v, x)| if v < acc.0 { (v, x) } else { acc });
    if epsilon + min_eta_n <= 0.0 {
        return Err(Error::MonotonicityViolation {
            value: epsilon + min_eta_n,
            point: worst,
        });
    }

    let mut e = vec![0.0; n];
    e[n - 1] = epsilon;
    let x_field = eta.plus_constant(&e);

    let top_tol = Tol::new(1e-14, 1e-13);
    // the eps |A| parts of both sides are split off so that they cancel exactly
    let eta_top = box_integral(
        &|q: &[f64]| {
            let mut p = q.to_vec();
            p.push(h0);
            Ok(eta.eval_or_zero(&p)?[n - 1])
        },
        a_lo,
        a_hi,
        &mut Vec::with_capacity(n),
        top_tol,
    )?;

    let (seeds, weights) = seed_rule(a_lo, a_hi, opts.seeds_per_axis, opts.panel_order);
    let solver = Dopri5::with_tol(opts.rtol, opts.atol);
    let keep = opts.record_trajectories;
    let states: Vec<FlowState> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let mut p = q.clone();
            p.push(h0);
            let mut s = solver;
            s.record = i < keep;
            integrate_flow_with(&x_field, &p, 0.0, &s)
        })
        .collect::<Result<_>>()?;

    let area: f64 = a_lo.iter().zip(a_hi).map(|(a, b)| b - a).product();
    let excess: f64 = states.iter().zip(&weights).map(|(s, w)| w * (s.delta - 1.0)).sum();
    let bottom_measure = area + excess;
    let r_bound = states
        .iter()
        .flat_map(|s| s.position[..n - 1].iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let min_delta = states.iter().map(|s| s.min_delta).fold(f64::INFINITY, f64::min);
    let max_displacement = states
        .iter()
        .map(|s| {
            s.p.iter()
                .zip(&s.position)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    let displacement_bound = opts.linear_gauge.map(|c| h0.max(h0 / c));
    let trajectories = states.into_iter().take(keep).collect();
    Ok(FlowTube {
        a_lo: a_lo.to_vec(),
        a_hi: a_hi.to_vec(),
        h0,
        epsilon,
        seeds: seeds.len(),
        top_integral: eta_top + epsilon * area,
        bottom_measure,
        residual: (eta_top - epsilon * excess).abs(),
        r_bound,
        min_delta,
        max_displacement,
        displacement_bound,
        min_eta_n,
        trajectories,
    })
}

/// Tube residuals along a decreasing sequence of `eps` (no limit is claimed).
pub fn flow_tube_epsilon_trend(
    eta: &VectorField,
    epsilons: &[f64],
    a_lo: &[f64],
    a_hi: &[f64],
    h0: f64,
    opts: &TubeOptions,
) -> Result<Vec<FlowTube>> {
    epsilons
        .iter()
        .map(|&e| build_flow_tube(eta, e, a_lo, a_hi, h0, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_flow() {
        let eps = 0.25;
        let x = VectorField::constant(&[0.0, 0.0, eps]);
        let s = integrate_flow(&x, &[0.3, -0.2, 0.0], 1.0).unwrap();
        assert!((s.t - 1.0 / eps).abs() < 1e-10);
        assert!((s.position[0] - 0.3).abs() < 1e-14 && s.position[2] == 1.0);
        assert!((s.delta - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_flow() {
        let s = integrate_flow(&VectorField::constant(&[1.0, 1.0]), &[0.0, 0.0], 1.0).unwrap();
        assert!((s.t - 1.0).abs() < 1e-12 && (s.position[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn downward_field_rejected() {
        let r = integrate_flow(&VectorField::constant(&[0.0, -1.0]), &[0.0, 0.0], 1.0);
        assert!(matches!(r, Err(Error::MonotonicityViolation { .. })));
    }

    #[test]
    fn zero_field_tube() {
        let eps = 0.5;
        let t = build_flow_tube(
            &VectorField::zero(3),
            eps,
            &[0.0, 0.0],
            &[1.0, 1.0],
            1.0,
            &TubeOptions {
                seeds_per_axis: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t.top_integral, eps);
        assert_eq!(t.bottom_measure, 1.0);
        assert_eq!(t.residual, 0.0);
    }
}
