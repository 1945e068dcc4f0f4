//! A divergence-free field in the upper half-plane built from rotating bumps
//! on the balls `B(p_ij, r_i)`, `p_ij = (j / 2^i, 1 / 2^i)`, `r_i = 2^{-(i+2)}`.
//! Its weak normal trace on `{y = 0}` vanishes, yet it keeps twisting at every
//! scale near the axis.

use std::cmp::Ordering;
use std::sync::Arc;

use super::{Piece, VectorField};
use crate::geometry::{Domain, Exclusion};
use crate::quad::golden_max;
use crate::{Error, Result};

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const MAX_LEVELS: u32 = 20;

/// `w(s) = exp(-1 / (1 - (2s - 1)^2))` on `(0, 1)`, zero elsewhere.
pub fn standard_profile(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let t = 2.0 * s - 1.0;
    (-1.0 / (1.0 - t * t)).exp()
}

/// Center and radius of ball `(i, j)` in exact dyadic form.
pub fn ball(i: u32, j: u64) -> ([f64; 2], f64) {
    let scale = 0.5f64.powi(i as i32);
    ([j as f64 * scale, scale], 0.25 * scale)
}

/// Calibration constant `c` with `max_s c * bump(s) = 1`.
fn calibrate(bump: &Profile) -> Result<f64> {
    // coarse scan, then golden section around the best sample
    let m = 2000;
    let (mut best_s, mut best) = (0.5, f64::NEG_INFINITY);
    for k in 1..m {
        let s = k as f64 / m as f64;
        let v = bump(s);
        if v > best {
            best = v;
            best_s = s;
        }
    }
    if !(best > 0.0) {
        return Err(Error::InvalidParameter("bump profile is identically zero on (0, 1)".into()));
    }
    let lo = (best_s - 1.0 / m as f64).max(0.0);
    let hi = (best_s + 1.0 / m as f64).min(1.0);
    let (_, peak) = golden_max(|s| bump(s), lo, hi, 1e-10);
    Ok(1.0 / peak.max(best))
}

/// Integer description of a ball in units of `2^{-(L+2)}`.
#[derive(Debug, Clone, Copy)]
struct IntBall {
    i: u32,
    j: u64,
    cx: u128,
    cy: u128,
    r: u128,
}

/// Exact pairwise-disjointness check of the open balls up to `max_level`.
///
/// All centers and radii are integers in units of `2^{-(L+2)}`, so tangency and
/// overlap are decided without rounding. Balls are grouped into clusters of
/// overlapping vertical extent and swept in `x` inside each cluster.
pub fn check_disjoint(max_level: u32) -> Result<usize> {
    let l = max_level;
    let mut balls = Vec::new();
    for i in 1..=l {
        let unit = 1u128 << (l + 2 - i);
        for j in 1..(1u64 << i) {
            balls.push(IntBall {
                i,
                j,
                cx: j as u128 * unit,
                cy: unit,
                r: unit >> 2,
            });
        }
    }
    balls.sort_by(|a, b| (a.cy - a.r).cmp(&(b.cy - b.r)).then(a.cx.cmp(&b.cx)));
    let mut start = 0;
    while start < balls.len() {
        let mut end = start + 1;
        let mut top = balls[start].cy + balls[start].r;
        while end < balls.len() && balls[end].cy - balls[end].r < top {
            top = top.max(balls[end].cy + balls[end].r);
            end += 1;
        }
        let cluster = &mut balls[start..end];
        cluster.sort_by(|a, b| (a.cx.saturating_sub(a.r)).cmp(&b.cx.saturating_sub(b.r)));
        let mut active: Vec<IntBall> = Vec::new();
        for b in cluster.iter() {
            active.retain(|a| a.cx + a.r > b.cx.saturating_sub(b.r));
            for a in &active {
                let dx = a.cx.abs_diff(b.cx);
                let dy = a.cy.abs_diff(b.cy);
                let rr = a.r + b.r;
                if dx * dx + dy * dy < rr * rr {
                    return Err(Error::OverlappingBalls {
                        first: format!("B(i={}, j={})", a.i, a.j),
                        second: format!("B(i={}, j={})", b.i, b.j),
                    });
                }
            }
            active.push(*b);
        }
        start = end;
    }
    Ok(balls.len())
}

/// Locates the ball containing `p`, if any.
fn locate(p: &[f64], max_level: u32) -> Option<(u32, u64)> {
    let (x, y) = (p[0], p[1]);
    if !(y > 0.0) {
        return None;
    }
    let guess = (-y.log2()).round() as i64;
    for i in (guess - 1)..=(guess + 1) {
        if i < 1 || i > max_level as i64 {
            continue;
        }
        let i = i as u32;
        let count = 1u64 << i;
        let jf = (x * count as f64).round();
        if jf < 1.0 || jf > (count - 1) as f64 {
            continue;
        }
        let j = jf as u64;
        let (c, r) = ball(i, j);
        let (dx, dy) = (x - c[0], y - c[1]);
        if dx * dx + dy * dy < r * r {
            return Some((i, j));
        }
    }
    None
}

/// Builds the twisting field with levels `1..=max_level` and a bump profile
/// supported in `(0, 1)`.
pub fn make_twisting_field(max_level: u32, bump: Option<Profile>) -> Result<VectorField> {
    if max_level == 0 || max_level > MAX_LEVELS {
        return Err(Error::InvalidParameter(format!(
            "max_level must lie in 1..={MAX_LEVELS}, got {max_level}"
        )));
    }
    let custom = bump.is_some();
    let bump: Profile = bump.unwrap_or_else(|| Arc::new(standard_profile));
    if bump(0.0) != 0.0 || bump(1.0) != 0.0 {
        return Err(Error::InvalidParameter("bump profile must vanish at 0 and 1".into()));
    }
    let c = calibrate(&bump)?;
    let count = check_disjoint(max_level)?;

    let mut pieces = Vec::with_capacity(count);
    for i in 1..=max_level {
        for j in 1..(1u64 << i) {
            let (center, radius) = ball(i, j);
            pieces.push(Piece {
                center: center.to_vec(),
                radius,
            });
        }
    }
    pieces.sort_by(|a, b| {
        b.radius
            .partial_cmp(&a.radius)
            .unwrap_or(Ordering::Equal)
            .then(a.center[0].total_cmp(&b.center[0]))
    });

    let profile = bump.clone();
    let field = VectorField::new(
        format!("twisting:levels={max_level}"),
        2,
        1.0,
        move |p| {
            let Some((i, j)) = locate(p, max_level) else {
                return Ok(vec![0.0, 0.0]);
            };
            let (center, r) = ball(i, j);
            let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
            let s = dx.hypot(dy);
            if s == 0.0 {
                return Ok(vec![0.0, 0.0]);
            }
            let k = c * profile(s / r) / s;
            Ok(vec![-k * dy, k * dx])
        },
    )
    .with_divergence(|_| 0.0)
    .with_domain(Domain::HalfSpace {
        normal: vec![0.0, 1.0],
        offset: 0.0,
    })
    .with_exclusion(Exclusion::hyperplane(1, 0.0))
    .with_pieces(pieces)
    .with_note(format!(
        "{count} balls, profile {} , calibration constant c = {c:.12}",
        if custom { "custom" } else { "exp(-1/(1-(2s-1)^2))" }
    ));
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_for_default_levels() {
        assert_eq!(check_disjoint(8).unwrap(), 502);
    }

    #[test]
    fn calibration_is_e_for_standard_profile() {
        let c = calibrate(&(Arc::new(standard_profile) as Profile)).unwrap();
        assert!((c - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn zero_at_centers_and_outside() {
        let f = make_twisting_field(8, None).unwrap();
        for i in 1..=8u32 {
            let (c, _) = ball(i, 1);
            assert_eq!(f.eval(&c).unwrap(), vec![0.0, 0.0]);
        }
        assert_eq!(f.eval(&[0.5, 0.7]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(f.eval(&[0.1, 0.9]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn unit_sup_on_first_ball() {
        let f = make_twisting_field(3, None).unwrap();
        let (c, r) = ball(1, 1);
        let mut best: f64 = 0.0;
        for k in 0..=100_000 {
            let s = r * k as f64 / 100_000.0;
            let v = f.eval(&[c[0] + s, c[1]]).unwrap();
            best = best.max(v[0].hypot(v[1]));
        }
        assert!((best - 1.0).abs() < 1e-6, "{best}");
    }

    #[test]
    fn rotational_direction() {
        let f = make_twisting_field(2, None).unwrap();
        let (c, r) = ball(1, 1);
        let v = f.eval(&[c[0] + 0.5 * r, c[1]]).unwrap();
        assert!(v[0].abs() < 1e-15 && v[1] > 0.99);
    }
}
