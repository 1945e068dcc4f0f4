//! Gauss–Legendre quadrature: fixed rules, adaptive 1D integration and
//! planar region integrators built on top of it.

use std::sync::OnceLock;

use crate::geometry::{ConvexRegion, P2};
use crate::{Error, Result};

const MAX_ORDER: usize = 128;

static RULES: [OnceLock<(Vec<f64>, Vec<f64>)>; MAX_ORDER + 1] =
    [const { OnceLock::new() }; MAX_ORDER + 1];

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (&'static [f64], &'static [f64]) {
    assert!((1..=MAX_ORDER).contains(&n), "rule order {n} out of range");
    let (x, w) = RULES[n].get_or_init(|| compute_rule(n));
    (x, w)
}

fn compute_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Absolute and relative error targets for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-10,
        }
    }
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            abs: self.abs * factor,
            rel: self.rel,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const K: usize> {
    pub value: [f64; K],
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

impl<const K: usize> Estimate<K> {
    fn zero() -> Self {
        Self {
            value: [0.0; K],
            error: 0.0,
            evals: 0,
            converged: true,
        }
    }

    fn add(&mut self, other: &Self) {
        for k in 0..K {
            self.value[k] += other.value[k];
        }
        self.error += other.error;
        self.evals += other.evals;
        self.converged &= other.converged;
    }
}

const PANEL_ORDER: usize = 10;
const MAX_DEPTH: u32 = 48;
const MAX_INTERVALS: usize = 200_000;

fn panel<const K: usize, F>(f: &mut F, a: f64, b: f64) -> Result<[f64; K]>
where
    F: FnMut(f64) -> Result<[f64; K]>,
{
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = [0.0; K];
    for (xi, wi) in x.iter().zip(w) {
        let v = f(c + h * xi)?;
        for k in 0..K {
            acc[k] += wi * v[k];
        }
    }
    for v in &mut acc {
        *v *= h;
    }
    Ok(acc)
}

fn max_diff<const K: usize>(a: &[f64; K], b: &[f64; K]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs<const K: usize>(a: &[f64; K]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Adaptive Gauss–Legendre integration of a vector-valued integrand.
///
/// Each interval is compared against its two halves; an interval is accepted
/// when the difference falls under its length-proportional share of the
/// tolerance. The integrand may fail, in which case the error is propagated.
pub fn try_adaptive<const K: usize, F>(mut f: F, a: f64, b: f64, tol: Tol) -> Result<Estimate<K>>
where
    F: FnMut(f64) -> Result<[f64; K]>,
{
    let mut out = Estimate::<K>::zero();
    if a == b {
        return Ok(out);
    }
    let (a, b, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let total = b - a;
    let whole = panel(&mut f, a, b)?;
    out.evals += PANEL_ORDER;
    let scale = max_abs(&whole);
    let budget = tol.abs.max(tol.rel * scale);

    let mut stack = vec![(a, b, whole, 0u32)];
    let mut intervals = 0usize;
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(&mut f, lo, mid)?;
        let right = panel(&mut f, mid, hi)?;
        out.evals += 2 * PANEL_ORDER;
        intervals += 1;
        let mut fine = left;
        for k in 0..K {
            fine[k] += right[k];
        }
        let err = max_diff(&fine, &coarse);
        let local = budget * (hi - lo) / total;
        if err <= local || depth >= MAX_DEPTH || intervals >= MAX_INTERVALS || hi - lo < 1e-15 * total {
            if err > local {
                out.converged = false;
            }
            for k in 0..K {
                out.value[k] += fine[k];
            }
            out.error += err;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    for v in &mut out.value {
        *v *= sign;
    }
    Ok(out)
}

/// Adaptive integration of a scalar function that cannot fail.
pub fn adaptive_1d<F>(mut f: F, a: f64, b: f64, tol: Tol) -> Estimate<1>
where
    F: FnMut(f64) -> f64,
{
    try_adaptive(|x| Ok([f(x)]), a, b, tol).expect("infallible integrand")
}

/// Integrates `f` over a convex planar region by nested adaptive quadrature.
///
/// When the region contains a disk constraint the integral is taken in polar
/// coordinates about that disk's center; otherwise in Cartesian order
/// (x outer, y inner) over the bounding box.
pub fn integrate_region<const K: usize, F>(region: &ConvexRegion, f: F, tol: Tol) -> Result<Estimate<K>>
where
    F: Fn(P2) -> Result<[f64; K]>,
{
    match region.smallest_disk() {
        Some((center, _)) => integrate_polar(region, center, f, tol),
        None => integrate_cartesian(region, f, tol),
    }
}

/// Polar integration of `f` over `region` about `pole`.
pub fn integrate_polar<const K: usize, F>(region: &ConvexRegion, pole: P2, f: F, tol: Tol) -> Result<Estimate<K>>
where
    F: Fn(P2) -> Result<[f64; K]>,
{
    let two_pi = 2.0 * std::f64::consts::PI;
    let inner_tol = tol.scaled(0.5 / two_pi);
    let mut inner_evals = 0usize;
    let mut inner_ok = true;
    let mut est = try_adaptive(
        |theta| {
            let u = [theta.cos(), theta.sin()];
            let Some((s0, s1)) = region.clip_line(pole, u) else {
                return Ok([0.0; K]);
            };
            let s0 = s0.max(0.0);
            if s1 <= s0 {
                return Ok([0.0; K]);
            }
            if !s1.is_finite() {
                return Err(Error::UnboundedRegion);
            }
            let e = try_adaptive(
                |s| {
                    let v = f([pole[0] + s * u[0], pole[1] + s * u[1]])?;
                    Ok(v.map(|x| x * s))
                },
                s0,
                s1,
                inner_tol,
            )?;
            inner_evals += e.evals;
            inner_ok &= e.converged;
            Ok(e.value)
        },
        0.0,
        two_pi,
        tol.scaled(0.5),
    )?;
    est.evals = inner_evals;
    est.converged &= inner_ok;
    Ok(est)
}

/// Cartesian nested integration over a bounded convex region.
pub fn integrate_cartesian<const K: usize, F>(region: &ConvexRegion, f: F, tol: Tol) -> Result<Estimate<K>>
where
    F: Fn(P2) -> Result<[f64; K]>,
{
    let (lo, hi) = region.bbox().ok_or(Error::UnboundedRegion)?;
    let width = (hi[0] - lo[0]).max(f64::MIN_POSITIVE);
    let inner_tol = tol.scaled(0.5 / width);
    let mut inner_evals = 0usize;
    let mut inner_ok = true;
    let mut est = try_adaptive(
        |x| {
            let Some((y0, y1)) = region.clip_line([x, 0.0], [0.0, 1.0]) else {
                return Ok([0.0; K]);
            };
            if !(y0.is_finite() && y1.is_finite()) {
                return Err(Error::UnboundedRegion);
            }
            let e = try_adaptive(|y| f([x, y]), y0, y1, inner_tol)?;
            inner_evals += e.evals;
            inner_ok &= e.converged;
            Ok(e.value)
        },
        lo[0],
        hi[0],
        tol.scaled(0.5),
    )?;
    est.evals = inner_evals;
    est.converged &= inner_ok;
    Ok(est)
}

/// Sums integrals over several pieces, each integrated in polar coordinates
/// about its own pole. Used for fields supported on disjoint disks.
pub fn integrate_pieces<const K: usize, F>(
    region: &ConvexRegion,
    pieces: &[(P2, f64)],
    f: F,
    tol: Tol,
) -> Result<Estimate<K>>
where
    F: Fn(P2) -> Result<[f64; K]> + Sync,
{
    let active: Vec<&(P2, f64)> = pieces
        .iter()
        .filter(|(c, r)| region.may_meet_disk(*c, *r))
        .collect();
    let n = active.len().max(1) as f64;
    let share = tol.scaled(1.0 / n);
    let mut out = Estimate::zero();
    for &&(c, r) in &active {
        let sub = region.clone().and(crate::geometry::Constraint::Disk { center: c, radius: r });
        let e = integrate_polar(&sub, c, &f, share)?;
        out.add(&e);
    }
    Ok(out)
}

/// Tensor-product Gauss–Legendre rule on an axis-aligned box:
/// returns `(points, weights)` with weights including the box volume.
pub fn box_rule(lo: &[f64], hi: &[f64], order: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = lo.len();
    let (x, w) = gauss_legendre(order);
    let total = order.pow(d as u32);
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut p = Vec::with_capacity(d);
        let mut wt = 1.0;
        for k in 0..d {
            let h = 0.5 * (hi[k] - lo[k]);
            p.push(lo[k] + h * (1.0 + x[idx[k]]));
            wt *= h * w[idx[k]];
        }
        points.push(p);
        weights.push(wt);
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < order {
                break;
            }
            idx[k] = 0;
        }
    }
    (points, weights)
}

/// Composite Gauss–Legendre nodes on `[a, b]` with `panels` equal panels.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            out.push((c + 0.5 * h * xi, 0.5 * h * wi));
        }
    }
    out
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in [1, 2, 5, 10, 33, 128] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            // even power deg-1 integrates to 2/deg
            assert!((got - 2.0 / deg as f64).abs() < 1e-13, "n = {n}: {got}");
            let sum: f64 = w.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn adaptive_handles_kinks() {
        let e = adaptive_1d(|x| (x - 0.3).abs(), 0.0, 1.0, Tol::default());
        let exact = 0.5 * (0.09 + 0.49);
        assert!((e.value[0] - exact).abs() < 1e-11);
        assert!(e.converged);
    }

    #[test]
    fn adaptive_reversed_bounds() {
        let e = adaptive_1d(f64::exp, 1.0, 0.0, Tol::default());
        assert!((e.value[0] + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn polar_disk_area_and_moment() {
        let disk = ConvexRegion::disk([0.2, -0.1], 0.7);
        let e = integrate_region(&disk, |p| Ok([1.0, p[0] * p[0]]), Tol::default()).unwrap();
        let pi = std::f64::consts::PI;
        let area = pi * 0.49;
        assert!((e.value[0] - area).abs() < 1e-11);
        // second moment about origin: area*(cx^2) + pi r^4/4
        let m = area * 0.04 + pi * 0.7f64.powi(4) / 4.0;
        assert!((e.value[1] - m).abs() < 1e-11);
    }

    #[test]
    fn cartesian_rectangle() {
        let r = ConvexRegion::rect([0.0, 0.0], [2.0, 1.0]);
        let e = integrate_region(&r, |p| Ok([p[0] * p[1]]), Tol::default()).unwrap();
        assert!((e.value[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_disk_off_pole() {
        let r = ConvexRegion::half_disk([1.0, 0.0], 0.5, [-1.0, 0.0]);
        let e = integrate_polar(&r, [0.0, 0.0], |_| Ok([1.0]), Tol::default()).unwrap();
        assert!((e.value[0] - std::f64::consts::PI * 0.125).abs() < 1e-10);
    }

    #[test]
    fn box_rule_volume() {
        let (p, w) = box_rule(&[0.0, -1.0, 2.0], &[1.0, 1.0, 5.0], 4);
        assert_eq!(p.len(), 64);
        let v: f64 = w.iter().sum();
        assert!((v - 6.0).abs() < 1e-13);
    }

    #[test]
    fn golden_finds_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8 && fx.abs() < 1e-15);
    }
}
