use thiserror::Error;

/// Errors raised by field construction, evaluation and the verification probes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point:?} lies outside the domain of field `{field}`")]
    OutOfDomain { field: String, point: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gamma = {gamma} exceeds the {bound_name} bound {bound}")]
    GammaTooLarge {
        gamma: f64,
        bound_name: &'static str,
        bound: f64,
    },

    #[error("point {point:?} is within {distance:.3e} of the exclusion set {set} (need > {required:.3e})")]
    NearExclusion {
        set: String,
        point: Vec<f64>,
        distance: f64,
        required: f64,
    },

    #[error("no divergence information for field `{field}` over a region meeting {set}")]
    MissingDivergence { field: String, set: String },

    #[error("potential `{0}` has no gradient")]
    MissingGradient(String),

    #[error("field is not cylindrically symmetric: defect {defect:.3e} exceeds {tolerance:.3e}")]
    NotCylindrical { defect: f64, tolerance: f64 },

    #[error("balls {first} and {second} of the twisting construction overlap")]
    OverlappingBalls { first: String, second: String },

    #[error("MONOTONICITY_VIOLATION: X_n = {value:.3e} at {point:?}")]
    MonotonicityViolation { value: f64, point: Vec<f64> },

    #[error("STIFF_FAILURE: step size underflow at t = {t} (h = {step:.3e})")]
    StiffFailure { t: f64, step: f64 },

    #[error("point {point:?} is not on the interface (distance {distance:.3e})")]
    NotOnInterface { point: Vec<f64>, distance: f64 },

    #[error("curvilinear rectangle does not embed: {0}")]
    NonEmbedding(String),

    #[error("test density has mass {mass}, expected 1")]
    NotUnitMass { mass: f64 },

    #[error("field sup norm {sup} is not normalized to 1")]
    NotNormalized { sup: f64 },

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("region is unbounded")]
    UnboundedRegion,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
