//! Dormand–Prince 5(4) integrator with step-size control, component-crossing
//! events and user stop conditions.

use crate::Result;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Terminate when `y[component]` crosses `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub component: usize,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Event,
    Condition,
    EndTime,
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub last_step: f64,
    pub reason: StopReason,
    /// Accepted states, only filled when recording is requested.
    pub trace: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub record: bool,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
            record: false,
        }
    }
}

struct Step {
    y: Vec<f64>,
    k_last: Vec<f64>,
    err: f64,
}

impl Dopri5 {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn step<F>(&self, f: &mut F, t: f64, y: &[f64], k1: &[f64], h: f64) -> Result<Step>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    {
        let n = y.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(k1.to_vec());
        let mut tmp = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += A[s][j] * kj[i];
                }
                tmp[i] = y[i] + h * acc;
            }
            k.push(f(t + C[s] * h, &tmp)?);
        }
        // stage 7 was evaluated at the 5th-order solution (FSAL)
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for s in 0..7 {
                e += E[s] * k[s][i];
            }
            let sc = self.atol + self.rtol * y[i].abs().max(tmp[i].abs());
            let r = h * e / sc;
            err += r * r;
        }
        let err = (err / n as f64).sqrt();
        let k_last = k.pop().unwrap_or_default();
        Ok(Step { y: tmp, k_last, err })
    }

    /// Integrates `y' = f(t, y)` from `t0` toward `t_end`.
    pub fn solve<F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        event: Option<Event>,
        mut stop: S,
    ) -> Result<Outcome>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
        S: FnMut(f64, &[f64]) -> bool,
    {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k1 = f(t, &y)?;
        let mut trace = Vec::new();
        if self.record {
            trace.push((t, y.clone()));
        }
        let mut h = self.initial_step(&y, &k1, (t_end - t0).abs());
        let mut steps = 0;
        let mut rejected = 0;
        let g = |y: &[f64]| event.map(|e| y[e.component] - e.target);

        let finish = |t: f64, y: Vec<f64>, steps, rejected, h, reason, trace| Outcome {
            t,
            y,
            steps,
            rejected,
            last_step: h,
            reason,
            trace,
        };

        if let Some(g0) = g(&y) {
            if g0 == 0.0 {
                return Ok(finish(t, y, 0, 0, 0.0, StopReason::Event, trace));
            }
        }

        loop {
            if steps >= self.max_steps {
                return Ok(finish(t, y, steps, rejected, h, StopReason::MaxSteps, trace));
            }
            let remaining = (t_end - t).abs();
            if remaining <= 0.0 {
                return Ok(finish(t, y, steps, rejected, h, StopReason::EndTime, trace));
            }
            h = h.min(remaining).min(self.h_max);
            if h < self.h_min && h < remaining {
                return Ok(finish(t, y, steps, rejected, h, StopReason::StepUnderflow, trace));
            }
            let st = self.step(&mut f, t, &y, &k1, dir * h)?;
            if !st.err.is_finite() || st.err > 1.0 {
                rejected += 1;
                let fac = if st.err.is_finite() {
                    (0.9 * st.err.powf(-0.2)).clamp(0.2, 1.0)
                } else {
                    0.2
                };
                h *= fac;
                continue;
            }
            steps += 1;

            if let (Some(ev), Some(g0), Some(g1)) = (event, g(&y), g(&st.y)) {
                if g0.signum() != g1.signum() || g1 == 0.0 {
                    let (tc, yc) = self.locate(&mut f, t, &y, &k1, dir * h, ev, g0, g1)?;
                    if self.record {
                        trace.push((tc, yc.clone()));
                    }
                    return Ok(finish(tc, yc, steps, rejected, h, StopReason::Event, trace));
                }
            }

            t += dir * h;
            y = st.y;
            k1 = st.k_last;
            if self.record {
                trace.push((t, y.clone()));
            }
            if stop(t, &y) {
                return Ok(finish(t, y, steps, rejected, h, StopReason::Condition, trace));
            }
            let fac = if st.err == 0.0 {
                5.0
            } else {
                (0.9 * st.err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        }
    }

    fn initial_step(&self, y: &[f64], k: &[f64], span: f64) -> f64 {
        let n = y.len() as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..y.len() {
            let sc = self.atol + self.rtol * y[i].abs();
            d0 += (y[i] / sc).powi(2);
            d1 += (k[i] / sc).powi(2);
        }
        let d0 = (d0 / n).sqrt();
        let d1 = (d1 / n).sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(span.max(f64::MIN_POSITIVE)).min(self.h_max)
    }

    /// Finds the crossing inside a step by re-stepping from its start with
    /// shortened step sizes (Illinois false position on the step length).
    #[allow(clippy::too_many_arguments)]
    fn locate<F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64],
        k1: &[f64],
        h: f64,
        ev: Event,
        g0: f64,
        g1: f64,
    ) -> Result<(f64, Vec<f64>)>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    {
        let (mut a, mut ga) = (0.0, g0);
        let (mut b, mut gb) = (h, g1);
        let mut best = (b, self.step(f, t, y, k1, b)?.y);
        if gb == 0.0 {
            return Ok((t + b, best.1));
        }
        let scale = ev.target.abs().max(1.0);
        let mut side = 0i8;
        for _ in 0..200 {
            let mut s = (a * gb - b * ga) / (gb - ga);
            if !s.is_finite() || s <= a.min(b) || s >= a.max(b) {
                s = 0.5 * (a + b);
            }
            let ys = self.step(f, t, y, k1, s)?.y;
            let gs = ys[ev.component] - ev.target;
            best = (s, ys);
            if gs.abs() <= 1e-14 * scale || (b - a).abs() <= 1e-15 * h.abs().max(t.abs()) {
                break;
            }
            if gs.signum() == gb.signum() {
                b = s;
                gb = gs;
                if side == -1 {
                    ga *= 0.5;
                }
                side = -1;
            } else {
                a = s;
                ga = gs;
                if side == 1 {
                    gb *= 0.5;
                }
                side = 1;
            }
        }
        let (s, mut ys) = best;
        // land exactly on the target plane
        ys[ev.component] = ev.target;
        Ok((t + s, ys))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let out = Dopri5::with_tol(1e-11, 1e-13)
            .solve(|_, y| Ok(vec![y[0]]), 0.0, &[1.0], 2.0, None, |_, _| false)
            .unwrap();
        assert_eq!(out.reason, StopReason::EndTime);
        assert!((out.y[0] - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let out = Dopri5::with_tol(1e-11, 1e-13)
            .solve(
                |_, y| Ok(vec![y[1], -y[0]]),
                0.0,
                &[1.0, 0.0],
                10.0,
                None,
                |_, _| false,
            )
            .unwrap();
        assert!((out.y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((out.y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn event_hits_target_height() {
        // y = (x, z), x' = 1, z' = 1 + z^2 ; z crosses 1 at t = pi/4
        let out = Dopri5::with_tol(1e-12, 1e-14)
            .solve(
                |_, y| Ok(vec![1.0, 1.0 + y[1] * y[1]]),
                0.0,
                &[0.0, 0.0],
                10.0,
                Some(Event {
                    component: 1,
                    target: 1.0,
                }),
                |_, _| false,
            )
            .unwrap();
        assert_eq!(out.reason, StopReason::Event);
        let t = std::f64::consts::FRAC_PI_4;
        assert!((out.t - t).abs() < 1e-11, "{}", out.t - t);
        assert!((out.y[0] - t).abs() < 1e-11);
    }

    #[test]
    fn backward_integration() {
        let out = Dopri5::default()
            .solve(|_, _| Ok(vec![1.0]), 1.0, &[1.0], 0.0, None, |_, _| false)
            .unwrap();
        assert!(out.y[0].abs() < 1e-12);
    }

    #[test]
    fn stop_condition() {
        let out = Dopri5::default()
            .solve(|_, y| Ok(vec![y[0] * y[0]]), 0.0, &[1.0], 2.0, None, |_, y| y[0] > 1e6)
            .unwrap();
        assert_eq!(out.reason, StopReason::Condition);
        assert!(out.t < 1.0 && out.t > 0.99);
    }
}
