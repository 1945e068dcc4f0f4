//! Normal-trace estimators: ball averages, curvilinear rectangles, Gauss–Green
//! pairings and sphere fluxes.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::interface::{InterfaceKind, OrientedInterface};
use super::probe::{validate_radii, TraceMethod, TraceProbe, PROBE_QUAD_TOL};
use crate::calculus::gauss_green::{pairing_volume, BoundaryPiece, Omega};
use crate::calculus::TestFunction;
use crate::fields::VectorField;
use crate::geometry::{Constraint, ConvexRegion, P2};
use crate::quad::{adaptive_1d, integrate_pieces, integrate_region, try_adaptive, Estimate, Tol};
use crate::{Error, Result};

fn planar(field: &VectorField, s: &OrientedInterface) -> Result<()> {
    if field.dim != 2 || s.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "planar trace probes need n = 2 (field n = {}, interface n = {})",
            field.dim,
            s.dim()
        )));
    }
    Ok(())
}

fn pieces_of(field: &VectorField) -> Option<Vec<(P2, f64)>> {
    field
        .pieces
        .as_ref()
        .map(|ps| ps.iter().map(|p| ([p.center[0], p.center[1]], p.radius)).collect())
}

/// Integrates over `region ∩ domain`, per piece when the field has pieces.
fn integrate_field<const K: usize, F>(field: &VectorField, region: &ConvexRegion, f: F, tol: Tol) -> Result<Estimate<K>>
where
    F: Fn(P2) -> Result<[f64; K]> + Sync,
{
    let region = region.intersect(&field.domain.as_region());
    match pieces_of(field) {
        Some(ps) => integrate_pieces(&region, &ps, f, tol),
        None => integrate_region(&region, f, tol),
    }
}

fn p2(v: &[f64]) -> P2 {
    [v[0], v[1]]
}

/// `(1/|B_r ∩ D|) int_{B_r(x0) ∩ D} xi . nu_S(x0)` for each radius, `D` the
/// field's domain (half balls when `x0` lies on the domain boundary).
pub fn weak_trace_ball_average(
    field: &VectorField,
    s: &OrientedInterface,
    x0: &[f64],
    radii: &[f64],
) -> Result<TraceProbe> {
    planar(field, s)?;
    validate_radii(radii)?;
    let nu = s.normal_at(x0)?;
    let (c, n) = (p2(x0), p2(&nu));
    let rows: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| -> Result<(f64, f64)> {
            let disk = ConvexRegion::disk(c, r);
            let tol = Tol::new(PROBE_QUAD_TOL * r * r, PROBE_QUAD_TOL);
            let area = integrate_region(&disk.intersect(&field.domain.as_region()), |_| Ok([1.0]), tol)?.value[0];
            let e = integrate_field(
                field,
                &disk,
                |p| {
                    let v = field.eval_or_zero(&p)?;
                    Ok([v[0] * n[0] + v[1] * n[1]])
                },
                tol,
            )?;
            Ok((e.value[0] / area, e.error / area))
        })
        .collect::<Result<_>>()?;
    let (est, err) = rows.into_iter().unzip();
    Ok(TraceProbe::assemble(TraceMethod::BallAverage, x0, nu, radii, est, err, None))
}

/// Parameter interval of `S ∩ B_rho(x0)` around `sigma0`.
fn local_arc(s: &OrientedInterface, x0: P2, sigma0: f64, rho: f64) -> Result<(f64, f64)> {
    match &s.kind {
        InterfaceKind::Hyperplane { .. } => Ok((sigma0 - rho, sigma0 + rho)),
        InterfaceKind::Circle { radius, .. } => {
            if rho >= 2.0 * radius {
                return Err(Error::NonEmbedding(format!("rho = {rho} exceeds the circle diameter")));
            }
            let d = 2.0 * radius * (rho / (2.0 * radius)).asin();
            Ok((sigma0 - d, sigma0 + d))
        }
        InterfaceKind::Curve { s0, s1, .. } => {
            let dist = |t: f64| -> Result<f64> {
                let p = s.point(t)?;
                Ok((p[0] - x0[0]).hypot(p[1] - x0[1]))
            };
            let mut ends = [0.0; 2];
            for (k, dir) in [-1.0, 1.0].into_iter().enumerate() {
                let step = rho / 64.0;
                let mut inner = sigma0;
                let mut outer = sigma0;
                loop {
                    let next = outer + dir * step;
                    if next < *s0 || next > *s1 {
                        return Err(Error::NonEmbedding(format!(
                            "S ∩ B_rho(x0) reaches the end of the curve parameter range (rho = {rho})"
                        )));
                    }
                    if dist(next)? >= rho {
                        outer = next;
                        break;
                    }
                    inner = next;
                    outer = next;
                }
                for _ in 0..80 {
                    let mid = 0.5 * (inner + outer);
                    if dist(mid)? < rho {
                        inner = mid;
                    } else {
                        outer = mid;
                    }
                }
                ends[k] = 0.5 * (inner + outer);
            }
            Ok((ends[0], ends[1]))
        }
    }
}

/// `(1/(2 rho r)) int_{Q_{r,rho}(x0)} xi(z) . nu_{x0}(z) dz` for each `r`, where
/// `Q` is foliated by translates of `S ∩ B_rho(x0)` in the `-nu_S(x0)` direction.
pub fn weak_trace_curvilinear(
    field: &VectorField,
    s: &OrientedInterface,
    x0: &[f64],
    rho: f64,
    r_seq: &[f64],
) -> Result<TraceProbe> {
    planar(field, s)?;
    validate_radii(r_seq)?;
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let nu = s.normal_at(x0)?;
    let n0 = p2(&nu);
    let c = p2(x0);
    let (sigma0, _) = s.project(x0)?;
    let t0 = {
        let d = s.derivative(sigma0)?;
        let l = d[0].hypot(d[1]);
        [d[0] / l, d[1] / l]
    };
    let (a, b) = local_arc(s, c, sigma0, rho)?;
    // the map (sigma, t) -> gamma(sigma) - t nu0 is injective iff gamma' . tau0 > 0
    let m = 512;
    for k in 0..=m {
        let sig = a + (b - a) * k as f64 / m as f64;
        let d = s.derivative(sig)?;
        if d[0] * t0[0] + d[1] * t0[1] <= 0.0 {
            return Err(Error::NonEmbedding(format!(
                "the projection of S onto its tangent at x0 folds at parameter {sig} (rho = {rho})"
            )));
        }
    }
    let flat = matches!(s.kind, InterfaceKind::Hyperplane { .. });
    let rows: Vec<(f64, f64)> = r_seq
        .par_iter()
        .map(|&r| -> Result<(f64, f64)> {
            let norm = 2.0 * rho * r;
            let tol = Tol::new(PROBE_QUAD_TOL * norm, PROBE_QUAD_TOL);
            let e = if flat {
                let region = ConvexRegion::whole()
                    .and(Constraint::HalfPlane {
                        point: [c[0] - rho * t0[0], c[1] - rho * t0[1]],
                        normal: t0,
                    })
                    .and(Constraint::HalfPlane {
                        point: [c[0] + rho * t0[0], c[1] + rho * t0[1]],
                        normal: [-t0[0], -t0[1]],
                    })
                    .and(Constraint::HalfPlane { point: c, normal: [-n0[0], -n0[1]] })
                    .and(Constraint::HalfPlane {
                        point: [c[0] - r * n0[0], c[1] - r * n0[1]],
                        normal: n0,
                    });
                integrate_field(
                    field,
                    &region,
                    |p| {
                        let v = field.eval_or_zero(&p)?;
                        Ok([v[0] * n0[0] + v[1] * n0[1]])
                    },
                    tol,
                )?
            } else {
                let inner_tol = tol.scaled(1.0 / (b - a));
                try_adaptive(
                    |sig| {
                        let g = s.point(sig)?;
                        let d = s.derivative(sig)?;
                        let nv = s.normal(sig)?;
                        let jac = (d[0] * t0[0] + d[1] * t0[1]).abs();
                        let e = try_adaptive(
                            |t| {
                                let z = [g[0] - t * n0[0], g[1] - t * n0[1]];
                                let v = field.eval_or_zero(&z)?;
                                Ok([(v[0] * nv[0] + v[1] * nv[1]) * jac])
                            },
                            0.0,
                            r,
                            inner_tol,
                        )?;
                        Ok(e.value)
                    },
                    a,
                    b,
                    tol,
                )?
            };
            Ok((e.value[0] / norm, e.error / norm))
        })
        .collect::<Result<_>>()?;
    let (est, err) = rows.into_iter().unzip();
    Ok(TraceProbe::assemble(TraceMethod::Curvilinear, x0, nu, r_seq, est, err, Some(rho)))
}

/// `<[xi . nu_Omega], psi> = int_Omega psi d(div xi) + int_Omega xi . grad psi`
/// for each test function.
pub fn weak_trace_pairing(field: &VectorField, omega: &Omega, psis: &[TestFunction]) -> Result<Vec<f64>> {
    if !omega.within(&field.domain) {
        return Err(Error::MissingDivergence {
            field: field.id.clone(),
            set: "the boundary of the field's domain (singular divergence not represented)".into(),
        });
    }
    let tol = Tol::new(1e-12, 1e-10);
    psis.par_iter()
        .map(|psi| pairing_volume(field, &omega.region(), psi, tol).map(|[d, g]| d + g))
        .collect()
}

/// The side of `S` pointed to by `-nu`, as a convex region.
fn inner_side(s: &OrientedInterface, x0: P2, nu: P2) -> Result<ConvexRegion> {
    match &s.kind {
        InterfaceKind::Hyperplane { .. } => Ok(ConvexRegion::half_plane(x0, [-nu[0], -nu[1]])),
        InterfaceKind::Circle { center, radius } if s.orientation_sign > 0.0 => {
            Ok(ConvexRegion::disk(*center, *radius))
        }
        _ => Err(Error::InvalidParameter(
            "pairing probe needs a line or an outward-oriented circle".into(),
        )),
    }
}

/// Pairing estimates `<[xi . nu], psi_r> / int_S psi_r` with `psi_r` the
/// bump of radius `r` at `x0`, over the `-nu` side of `S`.
pub fn weak_trace_pairing_probe(
    field: &VectorField,
    s: &OrientedInterface,
    x0: &[f64],
    radii: &[f64],
) -> Result<TraceProbe> {
    planar(field, s)?;
    validate_radii(radii)?;
    let nu = s.normal_at(x0)?;
    let c = p2(x0);
    let side = inner_side(s, c, p2(&nu))?;
    let (sigma0, _) = s.project(x0)?;
    let rows: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| -> Result<(f64, f64)> {
            let psi = TestFunction::bump(x0, r);
            let tol = Tol::new(PROBE_QUAD_TOL * r * r, PROBE_QUAD_TOL);
            let [d, g] = pairing_volume(field, &side, &psi, tol)?;
            let (a, b) = local_arc(s, c, sigma0, r)?;
            let mass = adaptive_1d(
                |sig| s.point(sig).map(|p| psi.value(&p)).unwrap_or(0.0),
                a,
                b,
                Tol::new(PROBE_QUAD_TOL * r, PROBE_QUAD_TOL),
            );
            Ok(((d + g) / mass.value[0], mass.error.max(tol.abs) / mass.value[0]))
        })
        .collect::<Result<_>>()?;
    let (est, err) = rows.into_iter().unzip();
    Ok(TraceProbe::assemble(TraceMethod::Pairing, x0, nu, radii, est, err, None))
}

/// `(1/(omega_1 r^2)) int_{dB_r^-(x0)} xi(y) . (x0 - y) dH^1(y)`, with
/// `dB_r^-` the half circle on the `-nu` side and `omega_1 = 2`.
pub fn weak_trace_sphere_flux(
    field: &VectorField,
    s: &OrientedInterface,
    x0: &[f64],
    radii: &[f64],
) -> Result<TraceProbe> {
    planar(field, s)?;
    validate_radii(radii)?;
    let nu = s.normal_at(x0)?;
    let c = p2(x0);
    let phi = (-nu[1]).atan2(-nu[0]);
    let rows: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| -> Result<(f64, f64)> {
            let arc = BoundaryPiece::Arc {
                center: c,
                radius: r,
                theta0: phi - PI / 2.0,
                theta1: phi + PI / 2.0,
            };
            let intervals = match pieces_of(field) {
                Some(ps) => {
                    let mut iv: Vec<(f64, f64)> = ps.iter().flat_map(|(pc, pr)| arc.inside_disk(*pc, *pr)).collect();
                    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
                    iv
                }
                None => vec![(0.0, arc.length())],
            };
            let tol = Tol::new(PROBE_QUAD_TOL * r, PROBE_QUAD_TOL);
            let (mut total, mut err) = (0.0, 0.0);
            for (lo, hi) in intervals {
                let e = try_adaptive(
                    |len| {
                        let (y, u) = arc.at(len);
                        let v = field.eval_or_zero(&y)?;
                        Ok([-(v[0] * u[0] + v[1] * u[1]) * r])
                    },
                    lo,
                    hi,
                    tol,
                )?;
                total += e.value[0];
                err += e.error;
            }
            let norm = 2.0 * r * r;
            Ok((total / norm, err / norm))
        })
        .collect::<Result<_>>()?;
    let (est, err) = rows.into_iter().unzip();
    Ok(TraceProbe::assemble(TraceMethod::SphereFlux, x0, nu, radii, est, err, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_capillary_field;

    fn radii(k0: i32, k1: i32) -> Vec<f64> {
        (k0..=k1).map(|k| 0.5f64.powi(k)).collect()
    }

    #[test]
    fn constant_field_all_methods() {
        let f = VectorField::constant(&[0.3, -1.0]);
        let s = OrientedInterface::x_axis_down();
        let x0 = [0.2, 0.0];
        let rs = radii(2, 5);
        let probes = [
            weak_trace_ball_average(&f, &s, &x0, &rs).unwrap(),
            weak_trace_curvilinear(&f, &s, &x0, 0.1, &rs).unwrap(),
            weak_trace_sphere_flux(&f, &s, &x0, &rs).unwrap(),
            weak_trace_pairing_probe(&f, &s, &x0, &rs).unwrap(),
        ];
        for p in &probes {
            for e in &p.estimates {
                assert!((e - 1.0).abs() < 1e-8, "{:?}: {e}", p.method);
            }
        }
    }

    #[test]
    fn capillary_traces_near_one() {
        let f = make_capillary_field(1.0).unwrap();
        let s = OrientedInterface::circle([0.0, 0.0], 1.0).unwrap();
        let x0 = [1.0, 0.0];
        let rs = radii(3, 10);
        let b = weak_trace_ball_average(&f, &s, &x0, &rs).unwrap();
        assert!((b.extrapolated - 1.0).abs() < 1e-2, "{b:?}");
        let c = weak_trace_curvilinear(&f, &s, &x0, 0.1, &rs).unwrap();
        assert!((c.extrapolated - 1.0).abs() < 1e-2, "{c:?}");
        let sf = weak_trace_sphere_flux(&f, &s, &x0, &rs).unwrap();
        assert!((sf.extrapolated - 1.0).abs() < 1e-2, "{sf:?}");
    }

    #[test]
    fn folding_curve_is_rejected() {
        let f = VectorField::constant(&[0.0, 1.0]);
        let s = OrientedInterface::curve(|t| [t.sin(), 1.0 - t.cos()], |t| [t.cos(), t.sin()], -3.0, 3.0).unwrap();
        let r = weak_trace_curvilinear(&f, &s, &[0.0, 0.0], 1.99, &[0.1]);
        assert!(matches!(r, Err(Error::NonEmbedding(_))), "{r:?}");
    }
}
