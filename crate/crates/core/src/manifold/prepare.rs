use super::{galerkin, ManifoldError, ModalBasis};
use crate::nonlinearity::ScalarNonlinearity;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Largest `|s|` probed when looking for the energy radius.
const ENERGY_SCAN_MAX: f64 = 1e4;

/// `C^∞` ramp: `1` on `[0, 1]`, `0` on `[2, ∞)`.
pub fn cutoff_ramp(x: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let (a, b) = (psi(2.0 - x), psi(x - 1.0));
        a / (a + b)
    }
}

/// A dissipative reaction term prepared for the Lyapunov–Perron construction: the
/// truncated operator `g(u) = θ(‖u‖_b/R)·Ĝ(u)` together with its diagnostics.
#[derive(Clone)]
pub struct Nonlinearity {
    g: Arc<dyn ScalarNonlinearity>,
    delta0: f64,
    beta: f64,
    radius: f64,
    energy_radius: f64,
    absorbing_radius: f64,
    growth_constant: f64,
    lipschitz: f64,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity").field("g", &self.g.name()).field("report", &self.report()).finish()
    }
}

/// Serializable summary of a prepared nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearityReport {
    pub name: String,
    pub delta0: f64,
    pub beta: f64,
    /// Cutoff radius `R` in the `b`-norm.
    pub radius: f64,
    /// `sup{|s| : G(s)/s ≥ −δ₀/2}·b(1,1)^{1/2}`.
    pub energy_radius: f64,
    /// Largest late-time `b`-norm over the seeded Galerkin runs.
    pub absorbing_radius: f64,
    pub growth_constant: f64,
    pub lipschitz: f64,
}

impl Nonlinearity {
    /// Truncation at a given radius without any checks; diagnostics are left at zero.
    pub fn with_radius(g: Arc<dyn ScalarNonlinearity>, radius: f64) -> Self {
        Self {
            g,
            delta0: 0.0,
            beta: 0.0,
            radius,
            energy_radius: 0.0,
            absorbing_radius: 0.0,
            growth_constant: 0.0,
            lipschitz: 0.0,
        }
    }

    pub fn scalar(&self) -> &dyn ScalarNonlinearity {
        self.g.as_ref()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Replaces the sampled Lipschitz bound, e.g. after sampling on a different basis.
    pub fn set_lipschitz(&mut self, lipschitz: f64) {
        self.lipschitz = lipschitz;
    }

    /// `P g(Σ a_k w_k)` in the modal coefficients of `basis`.
    pub fn truncated(&self, basis: &ModalBasis, a: &DVector<f64>) -> DVector<f64> {
        let theta = cutoff_ramp(a.norm() / self.radius);
        if theta == 0.0 {
            return DVector::zeros(a.len());
        }
        basis.project_nemitski(self.g.as_ref(), a) * theta
    }

    pub fn report(&self) -> NonlinearityReport {
        NonlinearityReport {
            name: self.g.name(),
            delta0: self.delta0,
            beta: self.beta,
            radius: self.radius,
            energy_radius: self.energy_radius,
            absorbing_radius: self.absorbing_radius,
            growth_constant: self.growth_constant,
            lipschitz: self.lipschitz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepareOptions {
    pub seed: u64,
    /// Seeded point pairs for the Lipschitz estimate.
    pub lipschitz_pairs: usize,
    /// Seeded Galerkin runs for the absorbing radius.
    pub absorbing_runs: usize,
    pub absorbing_horizon: f64,
    pub dt: f64,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self { seed: 0, lipschitz_pairs: 256, absorbing_runs: 4, absorbing_horizon: 20.0, dt: 0.005 }
    }
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

/// Checks dissipativity and growth of `G`, measures the absorbing radius on `basis`, sets
/// the cutoff radius `R` to twice that radius, and samples the Lipschitz bound of `g`.
pub fn prepare_nonlinearity(
    g: Arc<dyn ScalarNonlinearity>,
    delta0: f64,
    beta: f64,
    basis: &ModalBasis,
    opts: PrepareOptions,
) -> Result<Nonlinearity, ManifoldError> {
    if !(delta0 > 0.0 && beta >= 0.0) {
        return Err(ManifoldError::InvalidParameter(format!("delta0 = {delta0}, beta = {beta}")));
    }
    let bound = -delta0 / 2.0;
    // Energy radius: the last sampled |s| with G(s)/s ≥ −δ₀/2.
    let mut s_star: f64 = 0.0;
    let mut s = 1e-3;
    while s <= ENERGY_SCAN_MAX {
        for x in [s, -s] {
            let ratio = g.value(x) / x;
            if !ratio.is_finite() || ratio >= bound {
                s_star = s;
                if s * 1.01 > ENERGY_SCAN_MAX {
                    return Err(ManifoldError::NotDissipative { s: x, ratio, bound });
                }
            }
        }
        s *= 1.01;
    }
    let energy_radius = s_star * basis.measure().sqrt();

    // Absorbing radius from seeded untruncated runs, started at twice the energy radius.
    // Growth is checked first so that the runs only see admissible reaction terms.
    let start = 2.0 * energy_radius.max(1.0);
    growth_constant(g.as_ref(), beta, start)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut absorbing: f64 = 0.0;
    for _ in 0..opts.absorbing_runs {
        let a0 = random_direction(&mut rng, basis.len()) * start;
        let late = opts.absorbing_horizon / 2.0;
        galerkin::integrate(
            basis,
            |a| basis.project_nemitski(g.as_ref(), a),
            &a0,
            opts.absorbing_horizon,
            opts.dt,
            |t, a| {
                if t >= late {
                    absorbing = absorbing.max(a.norm());
                }
            },
        )?;
    }
    // A trivial attractor gives no scale; fall back on the initial amplitude.
    let radius = if absorbing > 1e-3 * start { 2.0 * absorbing } else { start };

    // Dissipativity proxy far out.
    for x in [10.0 * radius, -10.0 * radius] {
        let ratio = g.value(x) / x;
        if !(ratio <= bound) {
            return Err(ManifoldError::NotDissipative { s: x, ratio, bound });
        }
    }

    let growth_constant = growth_constant(g.as_ref(), beta, radius)?;

    let mut nl = Nonlinearity {
        g,
        delta0,
        beta,
        radius,
        energy_radius,
        absorbing_radius: absorbing,
        growth_constant,
        lipschitz: 0.0,
    };
    nl.lipschitz = sample_lipschitz(&nl, basis, opts.lipschitz_pairs, &mut rng);
    Ok(nl)
}

/// `C = max |G′(s)|/(1 + |s|^β)` over `[−10R, 10R]`; fails if the quotient at `±100R`
/// exceeds `2C`.
fn growth_constant(g: &dyn ScalarNonlinearity, beta: f64, radius: f64) -> Result<f64, ManifoldError> {
    let growth = |x: f64| g.derivative(x).abs() / (1.0 + x.abs().powf(beta));
    let samples = 2001;
    let constant = (0..samples)
        .map(|i| growth(-10.0 * radius + 20.0 * radius * i as f64 / (samples - 1) as f64))
        .fold(0.0, f64::max);
    for x in [100.0 * radius, -100.0 * radius] {
        if !(growth(x) <= 2.0 * constant) {
            return Err(ManifoldError::GrowthExceeded { s: x, ratio: growth(x), constant, beta });
        }
    }
    Ok(constant)
}

/// Largest difference quotient of `g` over seeded pairs in the ball of radius `2.5R`, at
/// separations spread over three decades.
pub fn sample_lipschitz(nl: &Nonlinearity, basis: &ModalBasis, pairs: usize, rng: &mut ChaCha8Rng) -> f64 {
    let dim = basis.len();
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let a = random_direction(rng, dim) * (2.5 * nl.radius * rng.random_range(0.0..1.0));
        let step = nl.radius * 10f64.powf(rng.random_range(-3.0..0.0));
        let b = &a + random_direction(rng, dim) * step;
        let diff = (nl.truncated(basis, &a) - nl.truncated(basis, &b)).norm();
        best = best.max(diff / (&a - &b).norm());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SphereGeometry, ThicknessProfile};
    use crate::nonlinearity::{ChafeeInfante, Cubic, FnNonlinearity, LinearDamping};
    use crate::spectral::assemble_circle_operator;

    fn basis(count: usize) -> ModalBasis {
        let prof = ThicknessProfile::constant(0.0, 1.0).unwrap();
        let op = assemble_circle_operator(&prof, &SphereGeometry::new(2, 1.0).unwrap(), 64).unwrap();
        ModalBasis::from_limit(&op, count).unwrap()
    }

    #[test]
    fn ramp_shape() {
        assert_eq!(cutoff_ramp(0.0), 1.0);
        assert_eq!(cutoff_ramp(1.0), 1.0);
        assert_eq!(cutoff_ramp(2.0), 0.0);
        assert_eq!(cutoff_ramp(7.0), 0.0);
        assert!((cutoff_ramp(1.5) - 0.5).abs() < 1e-15);
        let xs: Vec<f64> = (0..=100).map(|i| 1.0 + i as f64 / 100.0).collect();
        assert!(xs.windows(2).all(|w| cutoff_ramp(w[1]) <= cutoff_ramp(w[0])));
        // Flat at both ends: one-sided differences vanish to round-off.
        let h = 1e-3;
        assert!((1.0 - cutoff_ramp(1.0 + h)) / h < 1e-100);
        assert!(cutoff_ramp(2.0 - h) / h < 1e-100);
    }

    #[test]
    fn chafee_infante_is_accepted() {
        let b = basis(9);
        let opts = PrepareOptions { absorbing_horizon: 10.0, ..Default::default() };
        let nl = prepare_nonlinearity(Arc::new(ChafeeInfante { lambda: 2.0 }), 1.0, 2.0, &b, opts).unwrap();
        let rep = nl.report();
        // The attractor's largest state is the constant √2, whose b-norm is √2·(2π)^{1/2}.
        let top = 2f64.sqrt() * (2.0 * std::f64::consts::PI).sqrt();
        assert!((rep.absorbing_radius - top).abs() < 1e-2 * top, "{rep:?}");
        assert!((rep.radius - 2.0 * rep.absorbing_radius).abs() < 1e-12);
        assert!((rep.energy_radius - 2.5f64.sqrt() * (2.0 * std::f64::consts::PI).sqrt()).abs() < 0.05);
        assert!((rep.growth_constant - 3.0).abs() < 0.1);
        assert!(rep.lipschitz > 0.0 && rep.lipschitz.is_finite());
    }

    #[test]
    fn cubic_is_rejected() {
        let b = basis(5);
        let err = prepare_nonlinearity(Arc::new(Cubic), 1.0, 2.0, &b, PrepareOptions::default()).unwrap_err();
        assert!(matches!(err, ManifoldError::NotDissipative { .. }), "{err}");
    }

    #[test]
    fn fast_growth_is_rejected() {
        let b = basis(5);
        let g = FnNonlinearity { g: |s: f64| s - s.powi(5), dg: |s: f64| 1.0 - 5.0 * s.powi(4), label: "quintic".into() };
        let opts = PrepareOptions { absorbing_horizon: 4.0, absorbing_runs: 1, ..Default::default() };
        let err = prepare_nonlinearity(Arc::new(g), 1.0, 2.0, &b, opts).unwrap_err();
        assert!(matches!(err, ManifoldError::GrowthExceeded { .. }), "{err}");
    }

    #[test]
    fn truncation_matches_nemitski_inside_and_vanishes_outside() {
        let b = basis(5);
        let g = Arc::new(ChafeeInfante { lambda: 2.0 });
        let nl = Nonlinearity::with_radius(g.clone(), 3.0);
        let inside = DVector::from_vec(vec![1.0, 0.5, -0.5, 0.2, 0.1]);
        assert_eq!(nl.truncated(&b, &inside), b.project_nemitski(g.as_ref(), &inside));
        let outside = &inside * (6.0 / inside.norm());
        assert_eq!(nl.truncated(&b, &outside).amax(), 0.0);
    }

    #[test]
    fn trivial_attractor_uses_initial_amplitude() {
        let b = basis(5);
        let nl = prepare_nonlinearity(Arc::new(LinearDamping { kappa: 1.0 }), 1.0, 0.0, &b, PrepareOptions::default())
            .unwrap();
        let rep = nl.report();
        assert_eq!(rep.energy_radius, 0.0);
        assert!(rep.absorbing_radius < 1e-3);
        assert_eq!(rep.radius, 2.0);
        // The ramp adds its own slope on top of |G′| = 1.
        assert!(rep.lipschitz >= 1.0 - 1e-9 && rep.lipschitz < 10.0);
    }
}
