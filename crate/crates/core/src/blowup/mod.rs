//! Rescaling analysis at interface points: blow-up sequences, weak-star
//! averages, deviation densities and trace consistency of the blow-ups.

pub mod consistency;
pub mod nalpha;
pub mod sequence;
pub mod weakstar;

pub use consistency::{
    blowup_consistency_series, blowup_trace_consistency, default_psi_family, ConsistencySeries, DefectRow,
    BLOWUP_DEFECT_TOL,
};
pub use nalpha::{nalpha_density, quadratic_inequality_check, quadratic_inequality_random, quadratic_margin, NAlphaProbe};
pub use sequence::{rescale, rescale_interface, BlowupSequence};
pub use weakstar::{weak_star_average, TestDensity, WeakStarProbe};
