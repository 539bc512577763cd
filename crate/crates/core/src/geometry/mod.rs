//! Curved-squeezing geometry around a round sphere.
//!
//! The limit manifold is `S^{n-1}(r) ⊂ ℝⁿ`. The shell `Ω` around it is described by
//! radial offsets (see [`ThicknessProfile`]) so every normal section is a radial segment.

mod profile;
mod quadrature;
mod sphere;

pub use profile::{ThicknessProfile, DEFAULT_PROFILE_SAMPLES};
pub use quadrature::{
    coarea_check, gauss_legendre, lift, CoareaResult, FormValues, LiftedFunction, ShellGrid,
};
pub use sphere::{SphereGeometry, TangentFrame};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ambient dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("sphere radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("projection undefined at the origin")]
    ZeroVector,
    #[error("squeeze parameter must lie in ]0, 1], got {0}")]
    InvalidEpsilon(f64),
    #[error("squeeze map is not a bijection at eps = {eps}: offsets reach {reach}, radius {radius}")]
    NotBijective { eps: f64, reach: f64, radius: f64 },
    #[error("section measure d - c must be positive: mu = {mu} at theta = {theta}")]
    InvalidProfile { theta: f64, mu: f64 },
    #[error("non-finite integrand sample at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("grid mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Unsupported(String),
}
