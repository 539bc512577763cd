use super::ManifoldError;
use crate::spectral::{cluster_ids, CLUSTER_RTOL};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutChoice {
    /// Number of slow modes.
    pub nu: usize,
    /// `λ_{ν+1} − λ_ν`.
    pub gap: f64,
    /// `K_gap·L·(λ_ν^{1/2} + λ_{ν+1}^{1/2} + 1)`.
    pub threshold: f64,
}

fn root(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

/// Gap threshold at the cut between `λ_ν` and `λ_{ν+1}`.
pub fn gap_threshold(lambda_nu: f64, lambda_next: f64, lipschitz: f64, k_gap: f64) -> f64 {
    k_gap * lipschitz * (root(lambda_nu) + root(lambda_next) + 1.0)
}

/// Smallest `ν` at a cluster boundary with `λ_{ν+1} − λ_ν > K_gap·L·(λ_ν^{1/2} + λ_{ν+1}^{1/2} + 1)`.
pub fn choose_cut(values: &[f64], lipschitz: f64, k_gap: f64) -> Result<CutChoice, ManifoldError> {
    let ids = cluster_ids(values, CLUSTER_RTOL);
    for nu in 1..values.len() {
        if ids[nu] == ids[nu - 1] {
            continue;
        }
        let (lo, hi) = (values[nu - 1], values[nu]);
        let threshold = gap_threshold(lo, hi, lipschitz, k_gap);
        if hi - lo > threshold {
            return Ok(CutChoice { nu, gap: hi - lo, threshold });
        }
    }
    Err(ManifoldError::NoAdmissibleCut { resolved: values.len() })
}

/// Moves a cut that splits a cluster down to the cluster's lower boundary, or up to its
/// upper boundary when the cluster starts at the first mode.
pub fn snap_to_cluster_boundary(values: &[f64], nu: usize) -> usize {
    let ids = cluster_ids(values, CLUSTER_RTOL);
    if nu == 0 || nu >= values.len() || ids[nu] != ids[nu - 1] {
        return nu;
    }
    let mut down = nu;
    while down > 0 && ids[down] == ids[down - 1] {
        down -= 1;
    }
    if down > 0 {
        return down;
    }
    let mut up = nu;
    while up < values.len() && ids[up] == ids[up - 1] {
        up += 1;
    }
    up
}
