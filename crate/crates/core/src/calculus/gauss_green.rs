//! Gauss–Green pairings `int psi div(xi) + int xi . grad(psi)` and boundary fluxes.

use std::f64::consts::PI;

use serde::Serialize;

use super::divergence::{numeric_divergence, DEFAULT_STEP};
use super::testfn::TestFunction;
use crate::fields::VectorField;
use crate::geometry::{dot2, Constraint, ConvexRegion, Domain, P2};
use crate::quad::{adaptive_1d, integrate_pieces, integrate_region, try_adaptive, Tol};
use crate::{Error, Result};

/// Planar regions with piecewise-C1 boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Omega {
    Disk { center: P2, radius: f64 },
    Rect { lo: P2, hi: P2 },
    /// `{x in B_r(c) : (x - c) . dir > 0}`, `dir` a unit vector.
    HalfDisk { center: P2, radius: f64, dir: P2 },
}

/// A boundary piece parametrized by arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPiece {
    Segment { a: P2, b: P2, normal: P2 },
    Arc { center: P2, radius: f64, theta0: f64, theta1: f64 },
}

impl BoundaryPiece {
    pub fn length(&self) -> f64 {
        match *self {
            BoundaryPiece::Segment { a, b, .. } => (b[0] - a[0]).hypot(b[1] - a[1]),
            BoundaryPiece::Arc {
                radius,
                theta0,
                theta1,
                ..
            } => radius * (theta1 - theta0),
        }
    }

    /// Point and outward unit normal at arc length `s`.
    pub fn at(&self, s: f64) -> (P2, P2) {
        match *self {
            BoundaryPiece::Segment { a, b, normal } => {
                let l = self.length();
                let t = s / l;
                ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], normal)
            }
            BoundaryPiece::Arc {
                center,
                radius,
                theta0,
                ..
            } => {
                let th = theta0 + s / radius;
                let u = [th.cos(), th.sin()];
                ([center[0] + radius * u[0], center[1] + radius * u[1]], u)
            }
        }
    }

    /// Arc-length intervals where the piece lies inside the disk `B(c, r)`.
    pub(crate) fn inside_disk(&self, c: P2, r: f64) -> Vec<(f64, f64)> {
        let len = self.length();
        match *self {
            BoundaryPiece::Segment { a, b, .. } => {
                let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                match ConvexRegion::disk(c, r).clip_line(a, u) {
                    Some((s0, s1)) if s1 > 0.0 && s0 < len => vec![(s0.max(0.0), s1.min(len))],
                    _ => vec![],
                }
            }
            BoundaryPiece::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => {
                let d = (c[0] - center[0]).hypot(c[1] - center[1]);
                if d == 0.0 {
                    return if radius < r { vec![(0.0, len)] } else { vec![] };
                }
                let kappa = (radius * radius + d * d - r * r) / (2.0 * radius * d);
                if kappa >= 1.0 {
                    return vec![];
                }
                if kappa <= -1.0 {
                    return vec![(0.0, len)];
                }
                let phi = (c[1] - center[1]).atan2(c[0] - center[0]);
                let half = kappa.acos();
                let mut out = Vec::new();
                for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
                    let lo = (phi - half + shift).max(theta0);
                    let hi = (phi + half + shift).min(theta1);
                    if hi > lo {
                        out.push(((lo - theta0) * radius, (hi - theta0) * radius));
                    }
                }
                out
            }
        }
    }
}

impl Omega {
    pub fn unit_square() -> Self {
        Omega::Rect {
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
        }
    }

    pub fn region(&self) -> ConvexRegion {
        match *self {
            Omega::Disk { center, radius } => ConvexRegion::disk(center, radius),
            Omega::Rect { lo, hi } => ConvexRegion::rect(lo, hi),
            Omega::HalfDisk {
                center,
                radius,
                dir,
            } => ConvexRegion::half_disk(center, radius, dir),
        }
    }

    pub fn boundary(&self) -> Vec<BoundaryPiece> {
        match *self {
            Omega::Disk { center, radius } => vec![BoundaryPiece::Arc {
                center,
                radius,
                theta0: 0.0,
                theta1: 2.0 * PI,
            }],
            Omega::Rect { lo, hi } => vec![
                BoundaryPiece::Segment {
                    a: lo,
                    b: [hi[0], lo[1]],
                    normal: [0.0, -1.0],
                },
                BoundaryPiece::Segment {
                    a: [hi[0], lo[1]],
                    b: hi,
                    normal: [1.0, 0.0],
                },
                BoundaryPiece::Segment {
                    a: hi,
                    b: [lo[0], hi[1]],
                    normal: [0.0, 1.0],
                },
                BoundaryPiece::Segment {
                    a: [lo[0], hi[1]],
                    b: lo,
                    normal: [-1.0, 0.0],
                },
            ],
            Omega::HalfDisk {
                center,
                radius,
                dir,
            } => {
                let phi = dir[1].atan2(dir[0]);
                let t = [-dir[1], dir[0]];
                vec![
                    BoundaryPiece::Arc {
                        center,
                        radius,
                        theta0: phi - PI / 2.0,
                        theta1: phi + PI / 2.0,
                    },
                    BoundaryPiece::Segment {
                        a: [center[0] + radius * t[0], center[1] + radius * t[1]],
                        b: [center[0] - radius * t[0], center[1] - radius * t[1]],
                        normal: [-dir[0], -dir[1]],
                    },
                ]
            }
        }
    }

    /// Whether the closure of the region lies in the closure of `domain`.
    pub fn within(&self, domain: &Domain) -> bool {
        let slack = 1e-12;
        match domain {
            Domain::Whole => true,
            Domain::HalfSpace { normal, offset } => {
                let corners: Vec<P2> = match *self {
                    Omega::Rect { lo, hi } => vec![lo, hi, [lo[0], hi[1]], [hi[0], lo[1]]],
                    Omega::Disk { center, radius } | Omega::HalfDisk { center, radius, .. } => {
                        let nn = normal[0].hypot(normal[1]);
                        let c = dot2(center, [normal[0], normal[1]]);
                        return c - radius * nn >= offset - slack;
                    }
                };
                corners
                    .iter()
                    .all(|p| dot2(*p, [normal[0], normal[1]]) >= offset - slack)
            }
            Domain::Ball { center, radius } => {
                let c = [center[0], center[1]];
                match *self {
                    Omega::Disk { center: oc, radius: or }
                    | Omega::HalfDisk {
                        center: oc,
                        radius: or,
                        ..
                    } => (oc[0] - c[0]).hypot(oc[1] - c[1]) + or <= radius + slack,
                    Omega::Rect { lo, hi } => [lo, hi, [lo[0], hi[1]], [hi[0], lo[1]]]
                        .iter()
                        .all(|p| (p[0] - c[0]).hypot(p[1] - c[1]) <= radius + slack),
                }
            }
        }
    }
}

/// Evaluates on the closure of the domain: boundary points are nudged inward
/// along `-normal` so that one-sided boundary values are used.
pub(crate) fn eval_boundary(field: &VectorField, p: P2, normal: P2) -> Result<Vec<f64>> {
    if field.domain.contains(&p) {
        return field.eval(&p);
    }
    let scale = 1e-10 * p[0].abs().max(p[1].abs()).max(1.0);
    let q = [p[0] - scale * normal[0], p[1] - scale * normal[1]];
    field.eval_or_zero(&q)
}

fn divergence_at(field: &VectorField, x: &[f64]) -> Result<f64> {
    match field.analytic_div(x) {
        Some(d) => Ok(d),
        None => numeric_divergence(field, x, DEFAULT_STEP),
    }
}

/// Volume terms of the pairing over `region ∩ domain`:
/// `(int psi div(xi), int xi . grad psi)`.
pub fn pairing_volume(field: &VectorField, region: &ConvexRegion, psi: &TestFunction, tol: Tol) -> Result<[f64; 2]> {
    if field.dim != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: field.dim,
        });
    }
    let mut full = region.intersect(&field.domain.as_region());
    if let Some((c, r)) = psi.support() {
        full = full.and(Constraint::Disk {
            center: [c[0], c[1]],
            radius: r,
        });
    }
    if !field.has_divergence() {
        if let Some(e) = field.exclusions.iter().find(|e| e.meets_region(&full)) {
            return Err(Error::MissingDivergence {
                field: field.id.clone(),
                set: e.name(),
            });
        }
    }
    let integrand = |p: P2| -> Result<[f64; 2]> {
        let x = [p[0], p[1]];
        let v = field.eval_or_zero(&x)?;
        let w = psi.value(&x);
        let g = psi.gradient(&x);
        let d = if w != 0.0 { divergence_at(field, &x)? } else { 0.0 };
        Ok([w * d, v[0] * g[0] + v[1] * g[1]])
    };
    let est = match &field.pieces {
        Some(pieces) => {
            let ps: Vec<(P2, f64)> = pieces
                .iter()
                .map(|p| ([p.center[0], p.center[1]], p.radius))
                .collect();
            integrate_pieces(&full, &ps, integrand, tol)?
        }
        None => integrate_region(&full, integrand, tol)?,
    };
    Ok(est.value)
}

/// `int_{boundary} psi (xi . nu) dH^1` over the boundary of `omega`.
pub fn boundary_flux(field: &VectorField, omega: &Omega, psi: &TestFunction, tol: Tol) -> Result<f64> {
    let mut total = 0.0;
    for piece in omega.boundary() {
        let len = piece.length();
        let intervals: Vec<(f64, f64)> = match &field.pieces {
            Some(ps) => {
                let mut iv: Vec<(f64, f64)> = ps
                    .iter()
                    .flat_map(|p| piece.inside_disk([p.center[0], p.center[1]], p.radius))
                    .collect();
                iv.sort_by(|a, b| a.0.total_cmp(&b.0));
                iv
            }
            None => vec![(0.0, len)],
        };
        for (a, b) in intervals {
            let e = try_adaptive(
                |s| {
                    let (p, n) = piece.at(s);
                    let v = eval_boundary(field, p, n)?;
                    Ok([psi.value(&p) * (v[0] * n[0] + v[1] * n[1])])
                },
                a,
                b,
                tol,
            )?;
            total += e.value[0];
        }
    }
    Ok(total)
}

/// `int_{boundary} psi dH^1`.
pub fn boundary_mass(omega: &Omega, psi: &TestFunction, tol: Tol) -> f64 {
    omega
        .boundary()
        .iter()
        .map(|piece| {
            adaptive_1d(|s| psi.value(&piece.at(s).0), 0.0, piece.length(), tol).value[0]
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussGreen {
    pub div_term: f64,
    pub grad_term: f64,
    pub boundary_term: f64,
    pub residual: f64,
}

/// `int psi div + int xi . grad psi - int_{boundary} psi xi . nu` over `omega`.
pub fn gauss_green_residual(field: &VectorField, omega: &Omega, psi: &TestFunction) -> Result<GaussGreen> {
    gauss_green_residual_with(field, omega, psi, Tol::new(1e-12, 1e-10))
}

pub fn gauss_green_residual_with(field: &VectorField, omega: &Omega, psi: &TestFunction, tol: Tol) -> Result<GaussGreen> {
    if !omega.within(&field.domain) {
        return Err(Error::MissingDivergence {
            field: field.id.clone(),
            set: "the boundary of the field's domain (singular divergence not represented)".into(),
        });
    }
    let [div_term, grad_term] = pairing_volume(field, &omega.region(), psi, tol)?;
    let boundary_term = boundary_flux(field, omega, psi, tol)?;
    Ok(GaussGreen {
        div_term,
        grad_term,
        boundary_term,
        residual: div_term + grad_term - boundary_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_capillary_field;

    #[test]
    fn half_disk_boundary_length() {
        let o = Omega::HalfDisk {
            center: [0.0, 0.0],
            radius: 2.0,
            dir: [0.0, 1.0],
        };
        let len: f64 = o.boundary().iter().map(|b| b.length()).sum();
        assert!((len - (2.0 * PI + 4.0)).abs() < 1e-14);
        let m = boundary_mass(&o, &TestFunction::constant(1.0), Tol::default());
        assert!((m - len).abs() < 1e-10);
    }

    #[test]
    fn identity_field_on_rect() {
        // div x = 2, so int_Omega 2 = flux = 2 * area
        let f = VectorField::identity(2);
        let g = gauss_green_residual(
            &f,
            &Omega::Rect {
                lo: [-1.0, 0.5],
                hi: [2.0, 1.5],
            },
            &TestFunction::constant(1.0),
        )
        .unwrap();
        assert!((g.div_term - 6.0).abs() < 1e-10);
        assert!(g.residual.abs() < 1e-10);
    }

    #[test]
    fn capillary_extremality() {
        let f = make_capillary_field(1.0).unwrap();
        let g = gauss_green_residual(
            &f,
            &Omega::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            &TestFunction::constant(1.0),
        )
        .unwrap();
        assert!((g.div_term - 2.0 * PI).abs() < 1e-8);
        assert!((g.boundary_term - 2.0 * PI).abs() < 1e-8);
        assert!(g.residual.abs() < 1e-8);
    }

    #[test]
    fn region_beyond_domain_rejected() {
        let f = make_capillary_field(1.0).unwrap();
        let r = gauss_green_residual(
            &f,
            &Omega::Disk {
                center: [0.0, 0.0],
                radius: 1.5,
            },
            &TestFunction::constant(1.0),
        );
        assert!(matches!(r, Err(Error::MissingDivergence { .. })));
    }

    #[test]
    fn arc_disk_intersection() {
        let arc = BoundaryPiece::Arc {
            center: [0.0, 0.0],
            radius: 1.0,
            theta0: 0.0,
            theta1: 2.0 * PI,
        };
        let iv = arc.inside_disk([1.0, 0.0], 0.1);
        let total: f64 = iv.iter().map(|(a, b)| b - a).sum();
        let expect = 2.0 * 2.0 * (0.05f64).asin();
        assert!((total - expect).abs() < 1e-12, "{iv:?}");
    }
}
