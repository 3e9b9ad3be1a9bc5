use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("coincident points: |x - y| = {distance:e} is below the singularity tolerance")]
    Coincident { distance: f64 },

    #[error("evaluation point lies inside the source region (distance {distance:e} m)")]
    InsideSource { distance: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("grid coverage violated: {0}")]
    Coverage(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate direction: {0}")]
    Degenerate(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
