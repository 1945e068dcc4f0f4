use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Uniform,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn uniform(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            lo,
            hi,
            points,
            spacing: Spacing::Uniform,
        }
    }

    pub fn log(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            lo,
            hi,
            points,
            spacing: Spacing::Log,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let m = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let t = k as f64 / m;
                match self.spacing {
                    Spacing::Uniform => self.lo + t * (self.hi - self.lo),
                    Spacing::Log => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Tensor grid over an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        for (k, a) in axes.iter().enumerate() {
            if a.points < 2 {
                return Err(Error::InvalidParameter(format!("axis {k}: resolution must be >= 2")));
            }
            if !(a.lo < a.hi) {
                return Err(Error::InvalidParameter(format!("axis {k}: need lo < hi")));
            }
            if a.spacing == Spacing::Log && a.lo <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "axis {k}: logarithmic axes need positive bounds"
                )));
            }
        }
        if axes.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    /// Uniform grid with the same resolution on every axis.
    pub fn uniform_box(lo: &[f64], hi: &[f64], points: usize) -> Result<Self> {
        Self::new(
            lo.iter()
                .zip(hi)
                .map(|(&a, &b)| Axis::uniform(a, b, points))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All nodes, first axis varying slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let nodes: Vec<Vec<f64>> = self.axes.iter().map(Axis::nodes).collect();
        let mut out = vec![Vec::with_capacity(self.dim())];
        for axis in &nodes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}
