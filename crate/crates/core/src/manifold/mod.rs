//! Inertial-manifold reduction of `u̇ + A u = Ĝ(u)` over the first `ν` eigenmodes.
//!
//! The reaction term is truncated outside a `b`-norm ball, the graph `Λ` of the manifold
//! over the slow modes is evaluated pointwise by Lyapunov–Perron iteration in a Galerkin
//! truncation of `J` modes, and the reduced field `v(ξ) = −A₁ξ + P₁g(Eξ + Λ(ξ))` is formed
//! from it. The same routine runs on the limit operator and on thin domains.

mod basis;
mod compare;
mod cut;
pub mod galerkin;
mod lp;
mod prepare;

pub use basis::ModalBasis;
pub use compare::{
    align_thin_basis, compare_reduced_fields, thin_model, AlignmentReport, CompareOptions, ComparisonReport,
    FieldDiscrepancy,
};
pub use cut::{choose_cut, gap_threshold, snap_to_cluster_boundary, CutChoice};
pub use lp::{
    field_jacobian, integrate_reduced, invariance_residual, jacobian_check, lp_graph_eval, reduced_field,
    FieldValue, GraphPoint, JacobianCheck, LpParams, ReducedModel, ReducedTrajectory, ResidualSeries,
};
pub use prepare::{cutoff_ramp, prepare_nonlinearity, sample_lipschitz, Nonlinearity, NonlinearityReport, PrepareOptions};

use crate::spectral::SpectralError;
use crate::thin::ThinError;
use thiserror::Error;

/// Default fast truncation `J = max(4ν, 32)`, before snapping to a cluster boundary.
pub fn default_truncation(nu: usize) -> usize {
    (4 * nu).max(32)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("dissipativity fails: G(s)/s = {ratio} at s = {s}, required <= {bound}")]
    NotDissipative { s: f64, ratio: f64, bound: f64 },
    #[error("growth bound fails: |G'(s)|/(1+|s|^{beta}) = {ratio} at s = {s} exceeds twice C = {constant}")]
    GrowthExceeded { s: f64, ratio: f64, constant: f64, beta: f64 },
    #[error("no cut satisfies the gap condition among {resolved} resolved eigenvalues; compute more eigenpairs")]
    NoAdmissibleCut { resolved: usize },
    #[error("cut nu = {nu} is not usable with {available} modes")]
    InvalidCut { nu: usize, available: usize },
    #[error("Picard iteration diverged (deltas {deltas:?}); the gap at the cut is too small for the reaction term")]
    Diverged { deltas: Vec<f64> },
    #[error("Galerkin trajectory blew up at t = {t}: norm = {norm}")]
    GalerkinBlowUp { t: f64, norm: f64 },
    #[error("eigenvalue group {group:?} straddles the cut nu = {nu}")]
    ClusterAmbiguity { nu: usize, group: (usize, usize) },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Thin(#[from] ThinError),
}
