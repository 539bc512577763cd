use super::{field_jacobian, reduced_field, ManifoldError, ModalBasis, Nonlinearity, ReducedModel};
use crate::geometry::{SphereGeometry, ThicknessProfile};
use crate::thin::{assemble_thin_operator, ThinDomainOperator, ThinGrid};
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    /// Thin grid; its angular resolution must equal the limit grid.
    pub n_s: usize,
    /// Step of the central-difference Jacobians.
    pub fd_step: f64,
    /// Limit eigenvalues within this relative distance are matched as one group.
    pub group_rtol: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { n_s: 4, fd_step: 1e-3, group_rtol: 1e-2 }
    }
}

/// Identification of thin slow modes with limit slow modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    /// Half-open index ranges of the matched groups.
    pub groups: Vec<(usize, usize)>,
    /// Principal angles between the transversely averaged thin modes and the limit modes.
    pub subspace_angles: Vec<f64>,
    pub max_angle: f64,
}

/// Rotates the slow modes of `thin` group by group so that their transverse averages best
/// match the limit modes (orthogonal Procrustes in the limit `b`-inner product). Returns
/// the alignment report and the slow linear part `Rᵀ diag(λ^ε) R`.
pub fn align_thin_basis(
    thin_op: &ThinDomainOperator,
    thin: &mut ModalBasis,
    limit: &ModalBasis,
    nu: usize,
    group_rtol: f64,
) -> Result<(AlignmentReport, DMatrix<f64>), ManifoldError> {
    if thin_op.n_theta() != limit.nodes() {
        return Err(ManifoldError::Shape(format!(
            "thin grid has {} angles, limit grid {} nodes",
            thin_op.n_theta(),
            limit.nodes()
        )));
    }
    let count = nu.min(thin.len());
    let mut averaged = DMatrix::zeros(limit.nodes(), count);
    for j in 0..count {
        let col: Vec<f64> = thin.nodal().column(j).iter().copied().collect();
        let avg = thin_op.transverse_average(&col);
        averaged.column_mut(j).copy_from_slice(&avg);
    }
    // Coefficients of the averaged thin modes in all resolved limit modes.
    let coeffs = limit.projector() * averaged;

    let values = limit.values();
    let mut groups = Vec::new();
    let mut start = 0;
    for j in 1..=values.len() {
        if j == values.len() || (values[j] - values[start]).abs() > group_rtol * values[start].abs().max(1.0) {
            if start < nu && j > nu {
                return Err(ManifoldError::ClusterAmbiguity { nu, group: (start, j) });
            }
            if start < nu {
                groups.push((start, j));
            }
            start = j;
        }
    }

    let mut slow_linear = DMatrix::zeros(nu, nu);
    let mut angles = Vec::new();
    for &(s, e) in &groups {
        let len = e - s;
        let block = coeffs.view((s, s), (len, len)).into_owned();
        let svd = block.clone().svd(true, true);
        let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let rotation = v_t.transpose() * u.transpose();
        // Principal angles need the averaged modes orthonormalized first.
        let cols = coeffs.columns(s, len);
        let gram = cols.transpose() * cols;
        let eig = gram.symmetric_eigen();
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt()))
            * eig.eigenvectors.transpose();
        let cosines = (block * inv_sqrt).singular_values();
        angles.extend(cosines.iter().map(|c| c.clamp(-1.0, 1.0).acos()));
        thin.rotate(s..e, &rotation);
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&thin.values()[s..e]));
        let part = rotation.transpose() * lam * &rotation;
        slow_linear.view_mut((s, s), (len, len)).copy_from(&part);
    }
    let max_angle = angles.iter().copied().fold(0.0, f64::max);
    Ok((AlignmentReport { groups, subspace_angles: angles, max_angle }, slow_linear))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldDiscrepancy {
    pub xi: Vec<f64>,
    pub field_eps: Vec<f64>,
    pub field_limit: Vec<f64>,
    /// `|v_ε(ξ) − v_0(ξ)|`.
    pub discrepancy: f64,
    /// `Σ_j |∂_j v_ε(ξ) − ∂_j v_0(ξ)|`.
    pub jacobian_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub eps: f64,
    pub alignment: AlignmentReport,
    /// `λ_j^ε − λ_j^0` for the slow modes.
    pub slow_shift: Vec<f64>,
    pub rows: Vec<FieldDiscrepancy>,
}

impl ComparisonReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max)
    }
}

/// Thin-domain reduced model at `eps`, aligned with the limit model.
pub fn thin_model(
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    limit: &ReducedModel,
    eps: f64,
    opts: CompareOptions,
) -> Result<(ReducedModel, AlignmentReport), ManifoldError> {
    let grid = ThinGrid { n_theta: limit.basis().nodes(), n_s: opts.n_s };
    let op = assemble_thin_operator(profile, geom, eps, grid.n_theta, grid.n_s)?;
    let mut basis = ModalBasis::from_thin(&op, limit.basis().len())?;
    let (report, slow_linear) = align_thin_basis(&op, &mut basis, limit.basis(), limit.nu(), opts.group_rtol)?;
    let model = ReducedModel::new(basis, limit.nu(), Some(limit.params()))?.with_slow_linear(slow_linear)?;
    Ok((model, report))
}

/// Compares the reduced vector field on `Ω_ε` with the limit field at each sample `ξ`.
pub fn compare_reduced_fields(
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    nl: &Nonlinearity,
    limit: &ReducedModel,
    eps: f64,
    samples: &[Vec<f64>],
    opts: CompareOptions,
) -> Result<ComparisonReport, ManifoldError> {
    let (thin, alignment) = thin_model(profile, geom, limit, eps, opts)?;
    let nu = limit.nu();
    let slow_shift = (0..nu).map(|j| thin.basis().values()[j] - limit.basis().values()[j]).collect();
    let mut rows = Vec::with_capacity(samples.len());
    for xi in samples {
        let field_eps = reduced_field(xi, &thin, nl)?.value;
        let field_limit = reduced_field(xi, limit, nl)?.value;
        let discrepancy = field_eps.iter().zip(&field_limit).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let je = field_jacobian(xi, &thin, nl, opts.fd_step)?;
        let j0 = field_jacobian(xi, limit, nl, opts.fd_step)?;
        let jacobian_discrepancy = (0..nu).map(|j| (je.column(j) - j0.column(j)).norm()).sum();
        rows.push(FieldDiscrepancy { xi: xi.clone(), field_eps, field_limit, discrepancy, jacobian_discrepancy });
    }
    Ok(ComparisonReport { eps, alignment, slow_shift, rows })
}
