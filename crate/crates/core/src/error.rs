use thiserror::Error;

/// Errors produced by the estimators, fitters and generators.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
#[allow(missing_docs)]
pub enum Error {
    #[error("series needs at least 2 samples, got {0}")]
    EmptySeries(usize),
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("sampling interval must be positive and finite, got {0}")]
    InvalidDt(f64),
    #[error("rescale factor must be positive and finite, got {0}")]
    InvalidFactor(f64),
    #[error("noise amplitude must be non-negative and finite, got {0}")]
    NegativeEta(f64),
    #[error("invalid embedding: m={m}, tau={tau}")]
    InvalidEmbedding { m: usize, tau: usize },
    #[error("series of length {len} too short: need at least {needed} samples")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("too few points: {0}")]
    TooFewPoints(usize),
    #[error("epsilon grid is empty")]
    EmptyGrid,
    #[error("invalid epsilon grid: {0}")]
    InvalidGrid(&'static str),
    #[error("curve family has no order {0}")]
    MissingOrder(usize),
    #[error("curve families are defined on different grids")]
    GridMismatch,
    #[error("grid with {points} points too small for a difference step of {steps}")]
    GridTooSmall { points: usize, steps: usize },
    #[error("point clouds are not aligned")]
    MisalignedClouds,
    #[error("curve has {defined} defined points, need {needed}")]
    CurveTooShort { defined: usize, needed: usize },
    #[error("need at least 4 candidate fits, got {0}")]
    TooFewFits(usize),
    #[error("window holds {0} grid points, need at least 3")]
    WindowTooSmall(usize),
    #[error("no plateau fit found")]
    NoPlateau,
    #[error("no unit-slope fit found")]
    NoUnitSlopeRange,
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
    #[error("AR(2) coefficients a1={a1}, a2={a2} violate stationarity")]
    NonStationaryParams { a1: f64, a2: f64 },
    #[error("numerical blow-up at step {0}")]
    NumericalBlowup(usize),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Crate result alias.
pub type Result<T> = core::result::Result<T, Error>;
