//! Planar convex regions, field domains and smoothness exclusion sets.

use serde::Serialize;

pub type P2 = [f64; 2];

pub fn dot2(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One convex constraint in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Constraint {
    /// `|x - center| <= radius`
    Disk { center: P2, radius: f64 },
    /// `(x - point) . normal >= 0`
    HalfPlane { point: P2, normal: P2 },
}

impl Constraint {
    fn contains(&self, p: P2) -> bool {
        match *self {
            Constraint::Disk { center, radius } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                dot2(d, d) <= radius * radius
            }
            Constraint::HalfPlane { point, normal } => {
                dot2([p[0] - point[0], p[1] - point[1]], normal) >= 0.0
            }
        }
    }

    /// Parameter interval of `o + s u` inside the constraint.
    fn clip(&self, o: P2, u: P2) -> Option<(f64, f64)> {
        match *self {
            Constraint::Disk { center, radius } => {
                let w = [o[0] - center[0], o[1] - center[1]];
                let a = dot2(u, u);
                let b = dot2(u, w);
                let c = dot2(w, w) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 || a == 0.0 {
                    return if a == 0.0 && c <= 0.0 {
                        Some((f64::NEG_INFINITY, f64::INFINITY))
                    } else {
                        None
                    };
                }
                let sq = disc.sqrt();
                Some(((-b - sq) / a, (-b + sq) / a))
            }
            Constraint::HalfPlane { point, normal } => {
                let base = dot2([o[0] - point[0], o[1] - point[1]], normal);
                let slope = dot2(u, normal);
                if slope > 0.0 {
                    Some((-base / slope, f64::INFINITY))
                } else if slope < 0.0 {
                    Some((f64::NEG_INFINITY, -base / slope))
                } else if base >= 0.0 {
                    Some((f64::NEG_INFINITY, f64::INFINITY))
                } else {
                    None
                }
            }
        }
    }
}

/// Intersection of disks and half-planes.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvexRegion {
    pub constraints: Vec<Constraint>,
}

impl ConvexRegion {
    pub fn whole() -> Self {
        Self::default()
    }

    pub fn disk(center: P2, radius: f64) -> Self {
        Self {
            constraints: vec![Constraint::Disk { center, radius }],
        }
    }

    pub fn rect(lo: P2, hi: P2) -> Self {
        Self {
            constraints: vec![
                Constraint::HalfPlane { point: lo, normal: [1.0, 0.0] },
                Constraint::HalfPlane { point: lo, normal: [0.0, 1.0] },
                Constraint::HalfPlane { point: hi, normal: [-1.0, 0.0] },
                Constraint::HalfPlane { point: hi, normal: [0.0, -1.0] },
            ],
        }
    }

    /// `{x in B_r(c) : (x - c) . dir > 0}`
    pub fn half_disk(center: P2, radius: f64, dir: P2) -> Self {
        Self {
            constraints: vec![
                Constraint::Disk { center, radius },
                Constraint::HalfPlane { point: center, normal: dir },
            ],
        }
    }

    pub fn half_plane(point: P2, normal: P2) -> Self {
        Self {
            constraints: vec![Constraint::HalfPlane { point, normal }],
        }
    }

    pub fn and(mut self, c: Constraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn intersect(&self, other: &ConvexRegion) -> ConvexRegion {
        let mut constraints = self.constraints.clone();
        constraints.extend(other.constraints.iter().copied());
        ConvexRegion { constraints }
    }

    pub fn contains(&self, p: P2) -> bool {
        self.constraints.iter().all(|c| c.contains(p))
    }

    /// Parameter interval `[s0, s1]` such that `o + s u` lies in the region.
    pub fn clip_line(&self, o: P2, u: P2) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for c in &self.constraints {
            let (a, b) = c.clip(o, u)?;
            lo = lo.max(a);
            hi = hi.min(b);
            if lo >= hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    /// Axis-aligned bounding box, `None` when unbounded.
    pub fn bbox(&self) -> Option<(P2, P2)> {
        let mut lo = [f64::NEG_INFINITY; 2];
        let mut hi = [f64::INFINITY; 2];
        for c in &self.constraints {
            match *c {
                Constraint::Disk { center, radius } => {
                    for k in 0..2 {
                        lo[k] = lo[k].max(center[k] - radius);
                        hi[k] = hi[k].min(center[k] + radius);
                    }
                }
                Constraint::HalfPlane { point, normal } => {
                    for k in 0..2 {
                        let other = 1 - k;
                        if normal[other] == 0.0 {
                            if normal[k] > 0.0 {
                                lo[k] = lo[k].max(point[k]);
                            } else if normal[k] < 0.0 {
                                hi[k] = hi[k].min(point[k]);
                            }
                        }
                    }
                }
            }
        }
        if lo.iter().chain(hi.iter()).all(|v| v.is_finite()) {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// The smallest disk constraint, used as the pole for polar quadrature.
    pub fn smallest_disk(&self) -> Option<(P2, f64)> {
        self.constraints
            .iter()
            .filter_map(|c| match *c {
                Constraint::Disk { center, radius } => Some((center, radius)),
                _ => None,
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Whether the region can meet the disk `B_r(c)` (bounding-box test).
    pub fn may_meet_disk(&self, c: P2, r: f64) -> bool {
        match self.bbox() {
            Some((lo, hi)) => {
                c[0] + r >= lo[0] && c[0] - r <= hi[0] && c[1] + r >= lo[1] && c[1] - r <= hi[1]
            }
            None => true,
        }
    }
}

/// Where a field is defined. Integrals over a region are taken over
/// `region ∩ domain`, which realizes the extension by zero outside the domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Domain {
    Whole,
    /// `{x : x . normal > offset}`
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// `{x : |x - center| < radius}`
    Ball { center: Vec<f64>, radius: f64 },
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Whole => true,
            Domain::HalfSpace { normal, offset } => {
                x.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() > *offset
            }
            Domain::Ball { center, radius } => dist(x, center) < *radius,
        }
    }

    /// Image of the domain under `y = (x - x0) / r`.
    pub fn rescaled(&self, x0: &[f64], r: f64) -> Domain {
        match self {
            Domain::Whole => Domain::Whole,
            Domain::HalfSpace { normal, offset } => {
                let shift: f64 = x0.iter().zip(normal).map(|(a, b)| a * b).sum();
                Domain::HalfSpace {
                    normal: normal.clone(),
                    offset: (offset - shift) / r,
                }
            }
            Domain::Ball { center, radius } => Domain::Ball {
                center: center.iter().zip(x0).map(|(c, x)| (c - x) / r).collect(),
                radius: radius / r,
            },
        }
    }

    /// Planar version of the domain as a convex constraint list.
    pub fn as_region(&self) -> ConvexRegion {
        match self {
            Domain::Whole => ConvexRegion::whole(),
            Domain::HalfSpace { normal, offset } => {
                let nn = normal[0] * normal[0] + normal[1] * normal[1];
                let point = [normal[0] * offset / nn, normal[1] * offset / nn];
                ConvexRegion::half_plane(point, [normal[0], normal[1]])
            }
            Domain::Ball { center, radius } => ConvexRegion::disk([center[0], center[1]], *radius),
        }
    }
}

/// Lower-dimensional sets near which a field is not smooth and finite
/// differencing is invalid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExclusionKind {
    /// `{x : x[axis] = offset}`
    Hyperplane { axis: usize, offset: f64 },
    /// The line through `through` parallel to coordinate `axis`.
    AxisLine { axis: usize, through: Vec<f64> },
    /// `{x : |x - center| = radius}`
    Sphere { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub kind: ExclusionKind,
    /// Extra clearance required around the set (grows under mollification).
    pub margin: f64,
}

impl Exclusion {
    pub fn hyperplane(axis: usize, offset: f64) -> Self {
        Self {
            kind: ExclusionKind::Hyperplane { axis, offset },
            margin: 0.0,
        }
    }

    pub fn axis_line(axis: usize, through: Vec<f64>) -> Self {
        Self {
            kind: ExclusionKind::AxisLine { axis, through },
            margin: 0.0,
        }
    }

    pub fn sphere(center: Vec<f64>, radius: f64) -> Self {
        Self {
            kind: ExclusionKind::Sphere { center, radius },
            margin: 0.0,
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ExclusionKind::Hyperplane { axis, offset } => (x[*axis] - offset).abs(),
            ExclusionKind::AxisLine { axis, through } => x
                .iter()
                .zip(through)
                .enumerate()
                .filter(|(i, _)| i != axis)
                .map(|(_, (a, b))| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            ExclusionKind::Sphere { center, radius } => (dist(x, center) - radius).abs(),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ExclusionKind::Hyperplane { axis, offset } => {
                format!("hyperplane {{x{} = {}}}", axis + 1, offset)
            }
            ExclusionKind::AxisLine { axis, through } => {
                format!("axis line parallel to x{} through {:?}", axis + 1, through)
            }
            ExclusionKind::Sphere { center, radius } => {
                format!("sphere |x - {center:?}| = {radius}")
            }
        }
    }

    pub fn rescaled(&self, x0: &[f64], r: f64) -> Exclusion {
        let kind = match &self.kind {
            ExclusionKind::Hyperplane { axis, offset } => ExclusionKind::Hyperplane {
                axis: *axis,
                offset: (offset - x0[*axis]) / r,
            },
            ExclusionKind::AxisLine { axis, through } => ExclusionKind::AxisLine {
                axis: *axis,
                through: through.iter().zip(x0).map(|(t, x)| (t - x) / r).collect(),
            },
            ExclusionKind::Sphere { center, radius } => ExclusionKind::Sphere {
                center: center.iter().zip(x0).map(|(c, x)| (c - x) / r).collect(),
                radius: radius / r,
            },
        };
        Exclusion {
            kind,
            margin: self.margin / r,
        }
    }

    pub fn translated(&self, shift: &[f64]) -> Exclusion {
        let neg: Vec<f64> = shift.iter().map(|s| -s).collect();
        self.rescaled(&neg, 1.0)
    }

    /// Whether the exclusion set (plus margin) meets the planar region's bounding box.
    pub fn meets_region(&self, region: &ConvexRegion) -> bool {
        let Some((lo, hi)) = region.bbox() else {
            return true;
        };
        let m = self.margin;
        match &self.kind {
            ExclusionKind::Hyperplane { axis, offset } => {
                *axis < 2 && offset + m >= lo[*axis] && offset - m <= hi[*axis]
            }
            ExclusionKind::AxisLine { axis, through } => {
                let other = 1 - axis.min(&1);
                through[other] + m >= lo[other] && through[other] - m <= hi[other]
            }
            ExclusionKind::Sphere { center, radius } => {
                // nearest and farthest box points from the sphere center
                let mut near = 0.0;
                let mut far = 0.0;
                for k in 0..2 {
                    let c = center[k];
                    let dn = if c < lo[k] {
                        lo[k] - c
                    } else if c > hi[k] {
                        c - hi[k]
                    } else {
                        0.0
                    };
                    let df = (c - lo[k]).abs().max((c - hi[k]).abs());
                    near += dn * dn;
                    far += df * df;
                }
                near.sqrt() <= radius + m && far.sqrt() >= radius - m
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_disk_and_halfplane() {
        let r = ConvexRegion::half_disk([0.0, 0.0], 1.0, [0.0, 1.0]);
        let (a, b) = r.clip_line([-2.0, 0.5], [1.0, 0.0]).unwrap();
        let w = (1.0f64 - 0.25).sqrt();
        assert!((a - (2.0 - w)).abs() < 1e-14 && (b - (2.0 + w)).abs() < 1e-14);
        assert!(r.clip_line([-2.0, -0.5], [1.0, 0.0]).is_none());
    }

    #[test]
    fn rect_bbox() {
        let r = ConvexRegion::rect([-1.0, 0.0], [2.0, 3.0]);
        assert_eq!(r.bbox(), Some(([-1.0, 0.0], [2.0, 3.0])));
        assert!(ConvexRegion::half_plane([0.0, 0.0], [0.0, 1.0]).bbox().is_none());
    }

    #[test]
    fn domain_rescale_roundtrip() {
        let d = Domain::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let x0 = [1.0, 0.0];
        let r = 0.25;
        let dk = d.rescaled(&x0, r);
        for y in [[-1.0, 0.0], [0.5, 0.1], [-3.9, 0.0], [-4.1, 0.0]] {
            let x = [x0[0] + r * y[0], x0[1] + r * y[1]];
            assert_eq!(dk.contains(&y), d.contains(&x));
        }
    }

    #[test]
    fn exclusion_distances() {
        let e = Exclusion::axis_line(3, vec![0.0; 4]);
        assert!((e.distance(&[3.0, 4.0, 0.0, 7.0]) - 5.0).abs() < 1e-15);
        let s = Exclusion::sphere(vec![0.0, 0.0], 1.0);
        assert!((s.distance(&[0.3, 0.4]) - 0.5).abs() < 1e-15);
    }
}
