//! Averages `int f z_k` of a blow-up sequence against probability densities.

use rayon::prelude::*;
use serde::Serialize;

use super::sequence::BlowupSequence;
use crate::calculus::MollifierKernel;
use crate::report::{Check, VerificationReport};
use crate::trace::extrapolate;
use crate::{Error, Result};

/// Allowed deviation of a test density's mass from one.
pub const UNIT_MASS_TOL: f64 = 1e-8;
/// Slack for the discrete Jensen inequality.
pub const JENSEN_SLACK: f64 = 1e-9;

/// A nonnegative unit-mass density represented by a positive quadrature rule.
#[derive(Debug, Clone, Serialize)]
pub struct TestDensity {
    pub label: String,
    #[serde(skip)]
    pub nodes: Vec<(Vec<f64>, f64)>,
}

impl TestDensity {
    /// Smooth compactly supported bump on `B(center, radius)`.
    pub fn bump(center: &[f64], radius: f64) -> Result<Self> {
        let k = MollifierKernel::new(center.len(), radius)?;
        let nodes = k
            .rule()
            .iter()
            .map(|(y, w)| (y.iter().zip(center).map(|(a, c)| a + c).collect(), *w))
            .collect();
        Self::from_nodes(format!("bump:c={center:?}:r={radius}"), nodes)
    }

    /// Audits nonnegativity and unit mass.
    pub fn from_nodes(label: impl Into<String>, nodes: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if nodes.iter().any(|(_, w)| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("test density weights must be nonnegative".into()));
        }
        let mass: f64 = nodes.iter().map(|(_, w)| w).sum();
        if (mass - 1.0).abs() > UNIT_MASS_TOL {
            return Err(Error::NotUnitMass { mass });
        }
        Ok(Self {
            label: label.into(),
            nodes,
        })
    }

    pub fn mass(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakStarProbe {
    pub densities: Vec<TestDensity>,
    pub radii: Vec<f64>,
    /// `averages[j][k] = int f_j z_k`.
    pub averages: Vec<Vec<Vec<f64>>>,
    /// `energies[j][k] = int f_j |z_k|^2`.
    pub energies: Vec<Vec<f64>>,
    /// `int f |z_k|^2 - |int f z_k|^2`, nonnegative by Jensen.
    pub jensen_margins: Vec<Vec<f64>>,
    /// Componentwise extrapolation of the averages to `r = 0`, per density.
    pub limits: Vec<Vec<f64>>,
}

impl WeakStarProbe {
    pub fn min_jensen_margin(&self) -> f64 {
        self.jensen_margins
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn report(&self) -> VerificationReport {
        let mut rep = VerificationReport::new("weak_star_average");
        rep.insert("probe", self);
        rep.push(Check::at_least("min_jensen_margin", self.min_jensen_margin(), -JENSEN_SLACK));
        rep
    }
}

pub fn weak_star_average(seq: &BlowupSequence, family: &[TestDensity]) -> Result<WeakStarProbe> {
    let n = seq.base.dim;
    for f in family {
        let m = f.mass();
        if (m - 1.0).abs() > UNIT_MASS_TOL {
            return Err(Error::NotUnitMass { mass: m });
        }
        if let Some((y, _)) = f.nodes.iter().find(|(y, _)| y.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
    }
    type Row = (Vec<Vec<f64>>, Vec<f64>);
    let rows: Vec<Row> = family
        .par_iter()
        .map(|f| -> Result<Row> {
            let mut avgs = Vec::with_capacity(seq.len());
            let mut energies = Vec::with_capacity(seq.len());
            for z in &seq.fields {
                let mut a = vec![0.0; n];
                let mut e = 0.0;
                for (y, w) in &f.nodes {
                    let v = z.eval(y)?;
                    for i in 0..n {
                        a[i] += w * v[i];
                    }
                    e += w * v.iter().map(|c| c * c).sum::<f64>();
                }
                avgs.push(a);
                energies.push(e);
            }
            Ok((avgs, energies))
        })
        .collect::<Result<_>>()?;
    let (averages, energies): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let jensen_margins = averages
        .iter()
        .zip(&energies)
        .map(|(a, e): (&Vec<Vec<f64>>, &Vec<f64>)| {
            a.iter()
                .zip(e)
                .map(|(v, e)| e - v.iter().map(|c| c * c).sum::<f64>())
                .collect()
        })
        .collect();
    let limits = averages
        .iter()
        .map(|a: &Vec<Vec<f64>>| {
            (0..n)
                .map(|i| {
                    let comp: Vec<f64> = a.iter().map(|v| v[i]).collect();
                    extrapolate(&seq.radii, &comp).0
                })
                .collect()
        })
        .collect();
    Ok(WeakStarProbe {
        densities: family.to_vec(),
        radii: seq.radii.clone(),
        averages,
        energies,
        jensen_margins,
        limits,
    })
}
