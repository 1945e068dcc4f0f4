//! Concrete vector fields, scalar gauges and cylindrical potentials.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{Domain, Exclusion};
use crate::{Error, Result};

pub mod capillary;
pub mod counterexample;
pub mod phi;
pub mod potential;
pub mod registry;
pub mod stream;
pub mod twisting;

pub use capillary::make_capillary_field;
pub use counterexample::{make_counterexample_field, Gamma};
pub use phi::PhiFunction;
pub use potential::{field_to_potential, potential_to_field, CylindricalPotential};
pub use registry::field_from_registry;
pub use stream::{bump_stream_field, make_stream_field, make_stream_field_3d, RadialBump};
pub use twisting::{make_twisting_field, standard_profile};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Row-major `n x n` Jacobian, entry `(i, j) = d field_i / d x_j`.
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A ball outside of whose union a field (and its divergence) vanishes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Piece {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Dimension-tagged evaluable field with optional closed-form derivatives.
#[derive(Clone)]
pub struct VectorField {
    pub id: String,
    pub dim: usize,
    eval: EvalFn,
    analytic_div: Option<ScalarFn>,
    analytic_jacobian: Option<JacobianFn>,
    /// Certified bound on the essential sup of `|field|`.
    pub sup_bound: f64,
    pub exclusions: Vec<Exclusion>,
    pub domain: Domain,
    pub pieces: Option<Arc<Vec<Piece>>>,
    /// Planar stream function `psi` with `field = (-d2 psi, d1 psi)`, when known.
    stream: Option<ScalarFn>,
    pub notes: Vec<String>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("sup_bound", &self.sup_bound)
            .field("analytic_div", &self.analytic_div.is_some())
            .field("analytic_jacobian", &self.analytic_jacobian.is_some())
            .field("exclusions", &self.exclusions)
            .field("domain", &self.domain)
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(id: impl Into<String>, dim: usize, sup_bound: f64, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            dim,
            eval: Arc::new(eval),
            analytic_div: None,
            analytic_jacobian: None,
            sup_bound,
            exclusions: Vec::new(),
            domain: Domain::Whole,
            pieces: None,
            stream: None,
            notes: Vec::new(),
        }
    }

    pub fn with_divergence<F>(mut self, div: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.analytic_div = Some(Arc::new(div));
        self
    }

    pub fn with_jacobian<F>(mut self, jac: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.analytic_jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_exclusion(mut self, e: Exclusion) -> Self {
        self.exclusions.push(e);
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_pieces(mut self, pieces: Vec<Piece>) -> Self {
        self.pieces = Some(Arc::new(pieces));
        self
    }

    pub fn with_stream_function<F>(mut self, psi: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.stream = Some(Arc::new(psi));
        self
    }

    pub fn stream_function(&self, x: &[f64]) -> Option<f64> {
        self.stream.as_ref().map(|p| p(x))
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn has_divergence(&self) -> bool {
        self.analytic_div.is_some()
    }

    pub fn has_jacobian(&self) -> bool {
        self.analytic_jacobian.is_some()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain {
                field: self.id.clone(),
                point: x.to_vec(),
            });
        }
        (self.eval)(x)
    }

    /// Evaluation with the field extended by zero outside its domain.
    pub fn eval_or_zero(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if !self.domain.contains(x) {
            return Ok(vec![0.0; self.dim]);
        }
        (self.eval)(x)
    }

    pub fn analytic_div(&self, x: &[f64]) -> Option<f64> {
        if !self.domain.contains(x) {
            return self.analytic_div.as_ref().map(|_| 0.0);
        }
        self.analytic_div.as_ref().map(|d| d(x))
    }

    pub fn analytic_jacobian(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.analytic_jacobian.as_ref().map(|j| j(x))
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(&vec![0.0; dim]).renamed(format!("zero:n={dim}"))
    }

    pub fn constant(c: &[f64]) -> Self {
        let c = c.to_vec();
        let dim = c.len();
        let sup = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let id = format!(
            "constant:c={}",
            c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        );
        let value = c.clone();
        Self::new(id, dim, sup, move |_| Ok(value.clone()))
            .with_divergence(|_| 0.0)
            .with_jacobian(move |_| vec![0.0; dim * dim])
    }

    /// The identity map `x -> x` (unbounded; `sup_bound` is infinite).
    pub fn identity(dim: usize) -> Self {
        Self::new(format!("identity:n={dim}"), dim, f64::INFINITY, |x| Ok(x.to_vec()))
            .with_divergence(move |_| dim as f64)
            .with_jacobian(move |_| {
                let mut m = vec![0.0; dim * dim];
                for i in 0..dim {
                    m[i * dim + i] = 1.0;
                }
                m
            })
    }

    pub fn renamed(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// `X = field + c` for a constant vector `c`.
    pub fn plus_constant(&self, c: &[f64]) -> VectorField {
        let base = self.clone();
        let cv = c.to_vec();
        let cn = cv.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut out = self.clone();
        out.id = format!("{}+const", self.id);
        out.sup_bound = self.sup_bound + cn;
        out.pieces = None;
        out.stream = None;
        out.eval = Arc::new(move |x| {
            let mut v = (base.eval)(x)?;
            for (a, b) in v.iter_mut().zip(&cv) {
                *a += b;
            }
            Ok(v)
        });
        out
    }

    /// `y -> field(y - shift)`.
    pub fn translated(&self, shift: &[f64]) -> VectorField {
        let neg: Vec<f64> = shift.iter().map(|s| -s).collect();
        let mut out = self.rescaled(&neg, 1.0);
        out.id = format!("{}@shift{:?}", self.id, shift);
        out
    }

    /// `y -> field(x0 + r y)`; divergence and Jacobian pick up a factor `r`.
    pub fn rescaled(&self, x0: &[f64], r: f64) -> VectorField {
        let map = {
            let x0 = x0.to_vec();
            move |y: &[f64]| -> Vec<f64> { x0.iter().zip(y).map(|(a, b)| a + r * b).collect() }
        };
        let base_eval = self.eval.clone();
        let m = map.clone();
        let eval: EvalFn = Arc::new(move |y| base_eval(&m(y)));
        let analytic_div = self.analytic_div.clone().map(|d| {
            let m = map.clone();
            Arc::new(move |y: &[f64]| r * d(&m(y))) as ScalarFn
        });
        let analytic_jacobian = self.analytic_jacobian.clone().map(|j| {
            let m = map.clone();
            Arc::new(move |y: &[f64]| j(&m(y)).into_iter().map(|v| r * v).collect::<Vec<_>>())
                as JacobianFn
        });
        let pieces = self.pieces.as_ref().map(|ps| {
            Arc::new(
                ps.iter()
                    .map(|p| Piece {
                        center: p.center.iter().zip(x0).map(|(c, x)| (c - x) / r).collect(),
                        radius: p.radius / r,
                    })
                    .collect::<Vec<_>>(),
            )
        });
        let stream = self.stream.clone().map(|p| {
            let m = map.clone();
            Arc::new(move |y: &[f64]| p(&m(y)) / r) as ScalarFn
        });
        VectorField {
            id: format!("{}@x0={:?},r={}", self.id, x0, r),
            dim: self.dim,
            eval,
            analytic_div,
            analytic_jacobian,
            sup_bound: self.sup_bound,
            exclusions: self.exclusions.iter().map(|e| e.rescaled(x0, r)).collect(),
            domain: self.domain.rescaled(x0, r),
            pieces,
            stream,
            notes: self.notes.clone(),
        }
    }

    /// `a * self + b * other`, defined on the intersection of the domains
    /// (the result uses zero extension of each term).
    pub fn combine(&self, a: f64, other: &VectorField, b: f64) -> Result<VectorField> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (f, g) = (self.clone(), other.clone());
        let mut out = VectorField::new(
            format!("{a}*{}+{b}*{}", self.id, other.id),
            self.dim,
            a.abs() * self.sup_bound + b.abs() * other.sup_bound,
            move |x| {
                let u = f.eval_or_zero(x)?;
                let v = g.eval_or_zero(x)?;
                Ok(u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect())
            },
        );
        if let (Some(d1), Some(d2)) = (self.analytic_div.clone(), other.analytic_div.clone()) {
            if self.domain == Domain::Whole && other.domain == Domain::Whole {
                out = out.with_divergence(move |x| a * d1(x) + b * d2(x));
            }
        }
        if let (Some(p), Some(q)) = (&self.pieces, &other.pieces) {
            let mut all = p.as_ref().clone();
            all.extend(q.iter().cloned());
            out.pieces = Some(Arc::new(all));
        }
        if self.domain == other.domain {
            out.domain = self.domain.clone();
        }
        out.exclusions = self.exclusions.clone();
        out.exclusions.extend(other.exclusions.iter().cloned());
        Ok(out)
    }

    pub(crate) fn from_parts(
        template: &VectorField,
        id: String,
        eval: EvalFn,
        analytic_div: Option<ScalarFn>,
        analytic_jacobian: Option<JacobianFn>,
    ) -> VectorField {
        VectorField {
            id,
            dim: template.dim,
            eval,
            analytic_div,
            analytic_jacobian,
            sup_bound: template.sup_bound,
            exclusions: template.exclusions.clone(),
            domain: template.domain.clone(),
            pieces: None,
            stream: None,
            notes: template.notes.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_zero() {
        let c = VectorField::constant(&[1.0, -2.0]);
        assert_eq!(c.eval(&[5.0, 7.0]).unwrap(), vec![1.0, -2.0]);
        assert!((c.sup_bound - 5f64.sqrt()).abs() < 1e-15);
        let z = VectorField::zero(3);
        assert_eq!(z.eval(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            z.eval(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn rescale_composition() {
        let f = VectorField::new("sq", 2, f64::INFINITY, |x| Ok(vec![x[0] * x[0], x[0] * x[1]]));
        let x0 = [0.3, -0.2];
        let a = f.rescaled(&x0, 0.5).rescaled(&[0.0, 0.0], 0.25);
        let b = f.rescaled(&x0, 0.125);
        for y in [[1.0, 2.0], [-0.7, 0.1]] {
            let (u, v) = (a.eval(&y).unwrap(), b.eval(&y).unwrap());
            assert!((u[0] - v[0]).abs() < 1e-15 && (u[1] - v[1]).abs() < 1e-15);
        }
    }
}
