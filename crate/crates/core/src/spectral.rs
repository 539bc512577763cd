//! The weighted limit operator `A_μ = −(1/μ)(μ u′)′` on the circle `S¹(r)`.
//!
//! `A_μ` is generated by the pair of forms `a_μ(v, w) = ∫ μ v′ w′ ds` and
//! `b_μ(v, w) = ∫ μ v w ds`, discretized with periodic piecewise-linear elements on a
//! uniform arc-length grid.

use crate::geometry::{GeometryError, SphereGeometry, ThicknessProfile};
use crate::linalg::{generalized_eigen, LinalgError};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

/// Relative spacing below which neighbouring eigenvalues are reported as one cluster.
pub const CLUSTER_RTOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid needs at least {min} nodes, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("thickness is not positive at theta = {theta}: mu = {mu}")]
    InvalidProfile { theta: f64, mu: f64 },
    #[error("requested {requested} eigenpairs from a problem of size {size}")]
    CountTooLarge { requested: usize, size: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("factorization failed: {0}")]
    Linalg(#[from] LinalgError),
}

/// Assembled stiffness `K` (from `a_μ`) and mass `M` (from `b_μ`).
#[derive(Debug, Clone)]
pub struct WeightedOperator {
    nodes: usize,
    radius: f64,
    profile: ThicknessProfile,
    mu_nodes: Vec<f64>,
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
}

pub fn assemble_circle_operator(
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    nodes: usize,
) -> Result<WeightedOperator, SpectralError> {
    if geom.ambient_dim() != 2 {
        return Err(GeometryError::Unsupported("A_mu is assembled on the circle only".into()).into());
    }
    if nodes < 16 {
        return Err(SpectralError::GridTooSmall { min: 16, got: nodes });
    }
    let r = geom.radius();
    let dtheta = 2.0 * PI / nodes as f64;
    let h = r * dtheta;
    let (gx, gw) = crate::geometry::gauss_legendre(2);

    let mut k = DMatrix::zeros(nodes, nodes);
    let mut m = DMatrix::zeros(nodes, nodes);
    for e in 0..nodes {
        let (a, b) = (e, (e + 1) % nodes);
        let mut mu_avg = 0.0;
        let mut me = [[0.0; 2]; 2];
        for (x, w) in gx.iter().zip(gw) {
            let theta = (e as f64 + x) * dtheta;
            let mu = profile.mu(theta);
            if mu <= 0.0 {
                return Err(SpectralError::InvalidProfile { theta, mu });
            }
            mu_avg += w * mu;
            let phi = [1.0 - x, *x];
            for i in 0..2 {
                for j in 0..2 {
                    me[i][j] += h * w * mu * phi[i] * phi[j];
                }
            }
        }
        let ke = mu_avg / h;
        let idx = [a, b];
        for i in 0..2 {
            for j in 0..2 {
                let sign = if i == j { 1.0 } else { -1.0 };
                k[(idx[i], idx[j])] += sign * ke;
                m[(idx[i], idx[j])] += me[i][j];
            }
        }
    }
    let mu_nodes = (0..nodes).map(|i| profile.mu(i as f64 * dtheta)).collect();
    Ok(WeightedOperator { nodes, radius: r, profile: profile.clone(), mu_nodes, stiffness: k, mass: m })
}

impl WeightedOperator {
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Arc-length spacing.
    pub fn spacing(&self) -> f64 {
        2.0 * PI * self.radius / self.nodes as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| 2.0 * PI * i as f64 / self.nodes as f64).collect()
    }

    /// Arc-length coordinates of the nodes.
    pub fn arc_lengths(&self) -> Vec<f64> {
        self.angles().into_iter().map(|t| t * self.radius).collect()
    }

    pub fn profile(&self) -> &ThicknessProfile {
        &self.profile
    }

    pub fn mu_nodes(&self) -> &[f64] {
        &self.mu_nodes
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }
}

/// Grid description carried alongside a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    pub nodes: usize,
    pub radius: f64,
}

/// Ascending eigenvalues of `K v = λ M v` with `M`-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Option<DMatrix<f64>>,
    cluster_ids: Vec<usize>,
    grid: GridInfo,
}

impl SpectralDecomposition {
    pub fn new(eigenvalues: Vec<f64>, mut eigenvectors: Option<DMatrix<f64>>, grid: GridInfo) -> Self {
        if let Some(v) = eigenvectors.as_mut() {
            fix_signs(v);
        }
        let cluster_ids = cluster_ids(&eigenvalues, CLUSTER_RTOL);
        Self { eigenvalues, eigenvectors, cluster_ids, grid }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> Option<&DMatrix<f64>> {
        self.eigenvectors.as_ref()
    }

    pub fn cluster_ids(&self) -> &[usize] {
        &self.cluster_ids
    }

    pub fn grid(&self) -> GridInfo {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Sizes of consecutive clusters, in order.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = Vec::new();
        for (j, &id) in self.cluster_ids.iter().enumerate() {
            if j == 0 || id != self.cluster_ids[j - 1] {
                sizes.push(1);
            } else if let Some(last) = sizes.last_mut() {
                *last += 1;
            }
        }
        sizes
    }

    /// CSV with columns `j, lambda, cluster_id` (1-based `j`, 17 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,lambda,cluster_id\n");
        for (j, (lam, id)) in self.eigenvalues.iter().zip(&self.cluster_ids).enumerate() {
            let _ = writeln!(out, "{},{:.16e},{}", j + 1, lam, id);
        }
        out
    }
}

/// Cluster labels for an ascending sequence; neighbours within `rtol` share a label.
pub fn cluster_ids(values: &[f64], rtol: f64) -> Vec<usize> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut ids = Vec::with_capacity(values.len());
    let mut id = 0;
    for (j, &v) in values.iter().enumerate() {
        if j > 0 {
            let prev = values[j - 1];
            let tol = (rtol * prev.abs().max(v.abs())).max(floor);
            if v - prev > tol {
                id += 1;
            }
        }
        ids.push(id);
    }
    ids
}

/// First component above round-off is made positive in every column.
pub fn fix_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let amax = col.amax();
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-8 * amax) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// First `count` eigenpairs of the assembled operator.
pub fn eigendecompose(op: &WeightedOperator, count: usize) -> Result<SpectralDecomposition, SpectralError> {
    decompose(op, count, true)
}

/// First `count` eigenvalues only; skips the eigenvector accumulation.
pub fn eigenvalues(op: &WeightedOperator, count: usize) -> Result<SpectralDecomposition, SpectralError> {
    decompose(op, count, false)
}

fn decompose(op: &WeightedOperator, count: usize, vectors: bool) -> Result<SpectralDecomposition, SpectralError> {
    if count > op.nodes {
        return Err(SpectralError::CountTooLarge { requested: count, size: op.nodes });
    }
    let eig = generalized_eigen(&op.stiffness, &op.mass, vectors.then_some(count))?;
    let values = eig.values[..count].to_vec();
    Ok(SpectralDecomposition::new(values, eig.vectors, GridInfo { nodes: op.nodes, radius: op.radius }))
}

/// Central-difference evaluation of `−(1/μ)(μ u′)′` in arc length, with `μ` taken at
/// nodes and cell midpoints from the operator's profile.
pub fn strong_form_apply(u: &[f64], op: &WeightedOperator) -> Vec<f64> {
    let n = op.nodes;
    assert_eq!(u.len(), n, "grid function must live on the operator grid");
    let h = op.spacing();
    let dtheta = 2.0 * PI / n as f64;
    let flux: Vec<f64> = (0..n)
        .map(|i| {
            let mid = op.profile.mu((i as f64 + 0.5) * dtheta);
            mid * (u[(i + 1) % n] - u[i]) / h
        })
        .collect();
    (0..n)
        .map(|i| -(flux[i] - flux[(i + n - 1) % n]) / (h * op.mu_nodes[i]))
        .collect()
}
