//! Checks of the rigidity arguments: flow tubes, the strip identity,
//! certification of the cylindrical counterexample and the separable obstruction.

pub mod certify;
pub mod flow;
pub mod separable;
pub mod strip;

pub use crate::fields::counterexample::gamma_bounds;
pub use certify::{
    certify_potential, default_certification_grid, CertificateVerdict, ConditionMargin, RigidityCertificate,
    Witness,
};
pub use flow::{
    build_flow_tube, flow_tube_epsilon_trend, integrate_flow, integrate_flow_with, FlowState, FlowTube,
    TubeOptions,
};
pub use separable::separable_demo;
pub use strip::strip_identity_2d;
