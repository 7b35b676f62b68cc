use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs at least 8 nodes, got {0}")]
    GridTooSmall(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("form has non-positive mass {0}")]
    FormMass(f64),
    #[error("node {node} outside grid of size {n}")]
    Node { node: usize, n: usize },
    #[error("invalid pole masses: {0}")]
    PoleMass(String),
    #[error("mass mismatch: measure {measure}, form {form}")]
    MassMismatch { measure: f64, form: f64 },
    #[error("negative measure density {value} at node {node}")]
    NegativeMeasure { node: usize, value: f64 },
    #[error("cone violation {violation:e} at node {node}")]
    Cone { node: usize, violation: f64 },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("periodic solve residual {0:e} too large")]
    Singular(f64),
    #[error("envelope is bottom (infeasible pole demand)")]
    Bottom,
    #[error("envelope_singularity diverged: last change {0:e}")]
    SingularityDiverged(f64),
    #[error("energy is -inf")]
    InfiniteEnergy,
    #[error("potential must be pole-free: {0}")]
    PoleNotAllowed(&'static str),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Divergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("all entries of the test curve are bottom")]
    AllBottom,
    #[error("T too small: {0}")]
    TTooSmall(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
