//! Differential and integral kernels: mollification, finite-difference
//! divergence, Gauss–Green pairings and the Jensen audit.

pub mod divergence;
pub mod gauss_green;
pub mod grid;
pub mod jensen;
pub mod mollify;
pub mod testfn;

pub use divergence::{numeric_divergence, DEFAULT_STEP};
pub use gauss_green::{gauss_green_residual, gauss_green_residual_with, GaussGreen, Omega};
pub use grid::{Axis, GridSpec, Spacing};
pub use jensen::jensen_check;
pub use mollify::{mollify, MollifierKernel};
pub use testfn::TestFunction;
