//! Numerical laboratory for bounded divergence-free and divergence-measure
//! vector fields.

pub mod blowup;
pub mod calculus;
pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod ode;
pub mod quad;
pub mod report;
pub mod rigidity;
pub mod trace;

pub use error::{Error, Result};
