//! Weak normal traces on oriented interfaces and measure-theoretic densities.

pub mod density;
pub mod interface;
pub mod methods;
pub mod probe;

pub use density::{density, deviation_density, one_sided_ap_lim, ApLimVerdict, DensityOptions, DensityProbe, EPS_DENSITY};
pub use interface::{InterfaceKind, OrientedInterface};
pub use methods::{
    weak_trace_ball_average, weak_trace_curvilinear, weak_trace_pairing, weak_trace_pairing_probe,
    weak_trace_sphere_flux,
};
pub use probe::{extrapolate, TraceMethod, TraceProbe};
