use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("direction vector has zero or non-finite length")]
    ZeroVector,
    #[error("directions are not orthogonal (|u·v| = {dot:e})")]
    NonOrthogonal { dot: f64 },
    #[error("angle is degenerate: {0}")]
    DegenerateAngle(String),
    #[error("phi = {phi_deg}° lies outside the K = {k} window")]
    InfeasiblePhi { k: usize, phi_deg: f64 },
    #[error("theta = {0}° is outside (0°, 90°)")]
    OutOfRangeTheta(f64),
    #[error("invalid ladder specification: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("conditioning event has probability {0:e}")]
    ZeroConditioningProbability(f64),
    #[error("events on the same particle are not compatible")]
    IncompatibleGivens,
    #[error("state is not maximally entangled (Schmidt coefficients {0:?})")]
    NotMaximallyEntangled(Vec<f64>),
    #[error("angle pattern is inconsistent: {0}")]
    InconsistentPattern(String),
    #[error("table has not passed verification")]
    UnverifiedTable,
    #[error("{count} observables exceed the enumeration bound of {limit}")]
    TooManyObservables { count: usize, limit: usize },
    #[error("malformed graph: {0}")]
    MalformedGraph(String),
}
