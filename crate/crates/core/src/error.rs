use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameters out of range: {0}")]
    InvalidParams(String),

    #[error("quadrature failed ({what}); achieved error estimate {achieved:e}")]
    Quadrature { achieved: f64, what: &'static str },

    #[error("mesh at level {level} would need about {bytes} bytes (budget {budget})")]
    MeshTooLarge { level: usize, bytes: usize, budget: usize },

    #[error("degenerate element {index}")]
    DegenerateElement { index: usize },

    #[error("non-finite stiffness contribution from a {category} pair")]
    NonFinite { category: &'static str },

    #[error("function and form live on different meshes")]
    MeshMismatch,

    #[error("zero function where a nonzero one is required")]
    ZeroFunction,

    #[error("non-finite sample at node {node}")]
    NonFiniteSample { node: usize },

    #[error("matrix not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("point at radius {radius} too close to the unit sphere")]
    DivergenceGuard { radius: f64 },

    #[error("rate fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("rate fit requires positive values; got {value} at h = {h}")]
    NonPositiveValue { h: f64, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
