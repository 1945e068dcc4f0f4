use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::geometry::P2;
use crate::quad::golden_max;
use crate::{Error, Result};

/// Distance tolerance for "`x0` lies on `S`".
pub const ON_INTERFACE_TOL: f64 = 1e-10;

pub type CurveFn = Arc<dyn Fn(f64) -> P2 + Send + Sync>;

#[derive(Clone)]
pub enum InterfaceKind {
    /// `{x : (x - point) . normal = 0}` in any dimension.
    Hyperplane { point: Vec<f64>, normal: Vec<f64> },
    /// Circle parametrized counterclockwise by arc length.
    Circle { center: P2, radius: f64 },
    /// Regular planar curve `gamma` on `[s0, s1]` with derivative `dgamma`.
    Curve {
        gamma: CurveFn,
        dgamma: CurveFn,
        s0: f64,
        s1: f64,
    },
}

impl fmt::Debug for InterfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterfaceKind::Hyperplane { point, normal } => f
                .debug_struct("Hyperplane")
                .field("point", point)
                .field("normal", normal)
                .finish(),
            InterfaceKind::Circle { center, radius } => f
                .debug_struct("Circle")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            InterfaceKind::Curve { s0, s1, .. } => {
                f.debug_struct("Curve").field("s0", s0).field("s1", s1).finish()
            }
        }
    }
}

/// An oriented `C^1` interface `S` with unit normal `nu_S`.
///
/// Planar normals are `sign * (t_2, -t_1)` for the unit tangent `t`: the
/// outward normal for counterclockwise circles.
#[derive(Debug, Clone)]
pub struct OrientedInterface {
    pub kind: InterfaceKind,
    pub orientation_sign: f64,
}

impl Serialize for OrientedInterface {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| a / n).collect()
}

impl OrientedInterface {
    /// Hyperplane through `point` with unit normal `normal`.
    pub fn hyperplane(point: &[f64], normal: &[f64]) -> Result<Self> {
        if point.len() != normal.len() || point.len() < 2 {
            return Err(Error::InvalidParameter("hyperplane point/normal dimensions differ".into()));
        }
        if normal.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidParameter("hyperplane normal is zero".into()));
        }
        Ok(Self {
            kind: InterfaceKind::Hyperplane {
                point: point.to_vec(),
                normal: unit(normal),
            },
            orientation_sign: 1.0,
        })
    }

    /// The line `{y = 0}` in the plane with normal `(0, -1)`.
    pub fn x_axis_down() -> Self {
        Self::hyperplane(&[0.0, 0.0], &[0.0, -1.0]).expect("valid line")
    }

    /// Circle with outward normal.
    pub fn circle(center: P2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Self {
            kind: InterfaceKind::Circle { center, radius },
            orientation_sign: 1.0,
        })
    }

    pub fn curve<G, D>(gamma: G, dgamma: D, s0: f64, s1: f64) -> Result<Self>
    where
        G: Fn(f64) -> P2 + Send + Sync + 'static,
        D: Fn(f64) -> P2 + Send + Sync + 'static,
    {
        if !(s0 < s1) {
            return Err(Error::InvalidParameter("curve parameter interval is empty".into()));
        }
        Ok(Self {
            kind: InterfaceKind::Curve {
                gamma: Arc::new(gamma),
                dgamma: Arc::new(dgamma),
                s0,
                s1,
            },
            orientation_sign: 1.0,
        })
    }

    pub fn reversed(mut self) -> Self {
        self.orientation_sign = -self.orientation_sign;
        self
    }

    pub fn label(&self) -> String {
        let s = if self.orientation_sign < 0.0 { " (reversed)" } else { "" };
        match &self.kind {
            InterfaceKind::Hyperplane { point, normal } => {
                format!("hyperplane through {point:?} with normal {normal:?}{s}")
            }
            InterfaceKind::Circle { center, radius } => format!("circle |x - {center:?}| = {radius}{s}"),
            InterfaceKind::Curve { s0, s1, .. } => format!("curve on [{s0}, {s1}]{s}"),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            InterfaceKind::Hyperplane { point, .. } => point.len(),
            _ => 2,
        }
    }

    /// Point of a planar interface at parameter `s`.
    pub fn point(&self, s: f64) -> Result<P2> {
        match &self.kind {
            InterfaceKind::Hyperplane { point, normal } if point.len() == 2 => {
                Ok([point[0] - s * normal[1], point[1] + s * normal[0]])
            }
            InterfaceKind::Circle { center, radius } => {
                let th = s / radius;
                Ok([center[0] + radius * th.cos(), center[1] + radius * th.sin()])
            }
            InterfaceKind::Curve { gamma, .. } => Ok(gamma(s)),
            _ => Err(Error::InvalidParameter("parametrization needs a planar interface".into())),
        }
    }

    /// Derivative of the parametrization (unit for lines and circles).
    pub fn derivative(&self, s: f64) -> Result<P2> {
        match &self.kind {
            InterfaceKind::Hyperplane { point, normal } if point.len() == 2 => Ok([-normal[1], normal[0]]),
            InterfaceKind::Circle { radius, .. } => {
                let th = s / radius;
                Ok([-th.sin(), th.cos()])
            }
            InterfaceKind::Curve { dgamma, .. } => Ok(dgamma(s)),
            _ => Err(Error::InvalidParameter("parametrization needs a planar interface".into())),
        }
    }

    /// Unit normal at parameter `s`.
    pub fn normal(&self, s: f64) -> Result<P2> {
        if let InterfaceKind::Hyperplane { normal, .. } = &self.kind {
            if normal.len() == 2 {
                return Ok([self.orientation_sign * normal[0], self.orientation_sign * normal[1]]);
            }
        }
        let d = self.derivative(s)?;
        let l = d[0].hypot(d[1]);
        Ok([self.orientation_sign * d[1] / l, -self.orientation_sign * d[0] / l])
    }

    /// Parameter of the nearest point and the distance to `S`.
    pub fn project(&self, x: &[f64]) -> Result<(f64, f64)> {
        match &self.kind {
            InterfaceKind::Hyperplane { point, normal } => {
                let d: f64 = x.iter().zip(point).zip(normal).map(|((a, p), n)| (a - p) * n).sum();
                let s = if point.len() == 2 {
                    (x[0] - point[0]) * -normal[1] + (x[1] - point[1]) * normal[0]
                } else {
                    0.0
                };
                Ok((s, d.abs()))
            }
            InterfaceKind::Circle { center, radius } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let th = dy.atan2(dx);
                Ok((radius * th, (dx.hypot(dy) - radius).abs()))
            }
            InterfaceKind::Curve { gamma, s0, s1, .. } => {
                let m = 4096;
                let d2 = |s: f64| {
                    let p = gamma(s);
                    (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)
                };
                let h = (s1 - s0) / m as f64;
                let best = (0..=m)
                    .map(|k| s0 + h * k as f64)
                    .min_by(|a, b| d2(*a).total_cmp(&d2(*b)))
                    .unwrap_or(*s0);
                let (s, neg) = golden_max(|s| -d2(s), (best - h).max(*s0), (best + h).min(*s1), 1e-14);
                Ok((s, (-neg).max(0.0).sqrt()))
            }
        }
    }

    /// `nu_S(x0)` for `x0` on `S`.
    pub fn normal_at(&self, x0: &[f64]) -> Result<Vec<f64>> {
        if x0.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x0.len(),
            });
        }
        let (s, d) = self.project(x0)?;
        if d > ON_INTERFACE_TOL {
            return Err(Error::NotOnInterface {
                point: x0.to_vec(),
                distance: d,
            });
        }
        match &self.kind {
            InterfaceKind::Hyperplane { normal, .. } => {
                Ok(normal.iter().map(|v| self.orientation_sign * v).collect())
            }
            _ => Ok(self.normal(s)?.to_vec()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normals_are_unit_and_orthogonal() {
        let ifs = [
            OrientedInterface::x_axis_down(),
            OrientedInterface::circle([0.5, -0.2], 2.0).unwrap(),
            OrientedInterface::curve(|s| [s, s * s], |s| [1.0, 2.0 * s], -1.0, 1.0)
                .unwrap()
                .reversed(),
        ];
        for s in &ifs {
            for k in 0..50 {
                let t = -0.9 + 0.036 * k as f64;
                let n = s.normal(t).unwrap();
                let d = s.derivative(t).unwrap();
                assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
                assert!((n[0] * d[0] + n[1] * d[1]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn circle_normal_points_out() {
        let c = OrientedInterface::circle([0.0, 0.0], 1.0).unwrap();
        let n = c.normal_at(&[1.0, 0.0]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-15 && n[1].abs() < 1e-15);
        assert!(matches!(c.normal_at(&[1.1, 0.0]), Err(Error::NotOnInterface { .. })));
    }

    #[test]
    fn curve_projection() {
        let c = OrientedInterface::curve(|s| [s, s * s], |s| [1.0, 2.0 * s], -1.0, 1.0).unwrap();
        let (s, d) = c.project(&[0.3, 0.09]).unwrap();
        assert!((s - 0.3).abs() < 1e-6 && d < 1e-10);
    }
}
