use super::ManifoldError;
use crate::nonlinearity::ScalarNonlinearity;
use crate::spectral::{self, WeightedOperator};
use crate::thin::{self, ThinDomainOperator};
use nalgebra::{DMatrix, DVector};

/// First `J` eigenpairs of a discretized operator, with the maps between coefficient
/// space and nodal values.
///
/// Coefficients are taken in a `b`-orthonormal eigenbasis, so the Euclidean norm of a
/// coefficient vector is the `b`-norm of the function it represents.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    values: Vec<f64>,
    /// Nodal values of the basis functions, one column per mode.
    nodal: DMatrix<f64>,
    /// `VᵀB`: projection of nodal data onto the modes.
    project: DMatrix<f64>,
    /// `b(1, 1)`, the total measure.
    measure: f64,
}

impl ModalBasis {
    /// Builds a basis from eigenpairs `(values, vectors)` that are orthonormal for `mass`.
    pub fn from_eigenpairs(values: Vec<f64>, vectors: DMatrix<f64>, mass: &DMatrix<f64>) -> Result<Self, ManifoldError> {
        if vectors.ncols() != values.len() || vectors.nrows() != mass.nrows() {
            return Err(ManifoldError::Shape(format!(
                "{} values, vectors {:?}, mass {:?}",
                values.len(),
                vectors.shape(),
                mass.shape()
            )));
        }
        let project = vectors.transpose() * mass;
        let measure = mass.sum();
        Ok(Self { values, nodal: vectors, project, measure })
    }

    /// First `count` modes of the limit operator `A_μ`.
    pub fn from_limit(op: &WeightedOperator, count: usize) -> Result<Self, ManifoldError> {
        let dec = spectral::eigendecompose(op, count)?;
        let v = dec.eigenvectors().expect("eigenvectors requested").clone();
        Self::from_eigenpairs(dec.eigenvalues().to_vec(), v, op.mass())
    }

    /// First `count` modes of the Neumann Laplacian on `Ω_ε`, normalized for the rescaled
    /// mass `M_ε/ε` so that coefficients are comparable with the limit problem.
    pub fn from_thin(op: &ThinDomainOperator, count: usize) -> Result<Self, ManifoldError> {
        let dec = thin::thin_spectrum(op, count)?;
        let v = dec.eigenvectors().expect("eigenvectors requested") * op.eps().sqrt();
        Self::from_eigenpairs(dec.eigenvalues().to_vec(), v, &(op.mass() / op.eps()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodal(&self) -> &DMatrix<f64> {
        &self.nodal
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.project
    }

    pub fn nodes(&self) -> usize {
        self.nodal.nrows()
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Nodal values `Σ a_k w_k`.
    pub fn synthesize(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.nodal * a
    }

    /// Mode coefficients of the Nemitski image `P Ĝ(Σ a_k w_k)`.
    pub fn project_nemitski(&self, g: &dyn ScalarNonlinearity, a: &DVector<f64>) -> DVector<f64> {
        let u = self.synthesize(a);
        let mut gu = DVector::zeros(u.len());
        g.nemitski(u.as_slice(), gu.as_mut_slice());
        &self.project * gu
    }

    /// Replaces the columns `cols` by `V[:, cols]·rotation`.
    pub(crate) fn rotate(&mut self, cols: std::ops::Range<usize>, rotation: &DMatrix<f64>) {
        let block = self.nodal.columns(cols.start, cols.len()) * rotation;
        self.nodal.columns_mut(cols.start, cols.len()).copy_from(&block);
        let pblock = rotation.transpose() * self.project.rows(cols.start, cols.len());
        self.project.rows_mut(cols.start, cols.len()).copy_from(&pblock);
    }
}
