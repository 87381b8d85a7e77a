use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("pole hit: {0}")]
    PoleHit(String),

    #[error("intertwiner space has dimension {dim} (expected 1); singular value gap {gap:e}")]
    DegenerateIntertwiner { dim: usize, gap: f64 },

    #[error("normalizing component vanishes at z = {0}")]
    ResonantPoint(String),

    #[error("contour infeasible: {0}")]
    Infeasible(String),

    #[error("pole of order {order} at {location} (only simple poles are expanded here)")]
    NonSimplePole { order: i32, location: String },

    #[error("quadrature did not settle: |I(2Q) - I(Q)| = {diff:e} exceeds {limit:e}")]
    QuadratureDivergence { diff: f64, limit: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
