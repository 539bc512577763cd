use super::{ManifoldError, ModalBasis};
use nalgebra::DVector;

/// Norm above which a Galerkin trajectory is reported as blown up.
pub const GALERKIN_BLOW_UP: f64 = 1e8;

/// Integrating-factor RK4 (Lawson) for `ȧ = −Λa + N(a)` in the modal coefficients of
/// `basis`, with `Λ = diag(values)` handled exactly. `observe` sees `(t, a)` after each
/// step, starting with the initial state.
pub fn integrate(
    basis: &ModalBasis,
    rhs: impl Fn(&DVector<f64>) -> DVector<f64>,
    a0: &DVector<f64>,
    t_end: f64,
    dt: f64,
    mut observe: impl FnMut(f64, &DVector<f64>),
) -> Result<DVector<f64>, ManifoldError> {
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let half = DVector::from_iterator(basis.len(), basis.values().iter().map(|l| (-l * h / 2.0).exp()));
    let full = half.component_mul(&half);
    let mut a = a0.clone();
    observe(0.0, &a);
    for step in 1..=steps {
        let k1 = rhs(&a);
        let k2 = rhs(&(&a + &k1 * (h / 2.0)).component_mul(&half));
        let k3 = rhs(&(a.component_mul(&half) + &k2 * (h / 2.0)));
        let k4 = rhs(&(a.component_mul(&full) + (k3.component_mul(&half)) * h));
        let combo = k1.component_mul(&full) + (k2 + k3).component_mul(&half) * 2.0 + k4;
        a = a.component_mul(&full) + combo * (h / 6.0);
        let norm = a.norm();
        let t = step as f64 * h;
        if !norm.is_finite() || norm > GALERKIN_BLOW_UP {
            return Err(ManifoldError::GalerkinBlowUp { t, norm });
        }
        observe(t, &a);
    }
    Ok(a)
}
