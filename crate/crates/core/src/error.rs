use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed sample: {0}")]
    MalformedSample(String),

    #[error("radius {radius} exceeds 1/2 on the torus (n = {n}); use a larger n")]
    RadiusTooLarge { radius: f64, n: usize },

    #[error("ϖ puts mass {mass} on colour {colour}, which has μ₁ = 0")]
    MassOnEmptyColour { colour: usize, mass: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
