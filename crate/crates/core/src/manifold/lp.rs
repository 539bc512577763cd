use super::{galerkin, snap_to_cluster_boundary, ManifoldError, ModalBasis, Nonlinearity};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::fmt::Write as _;

/// Successive-difference level below which Picard ratios are not formed.
const DELTA_FLOOR: f64 = 1e-14;

/// Lyapunov–Perron discretization: horizon `T`, Picard iterations `M`, RK4 steps on `[−T, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpParams {
    pub horizon: f64,
    pub picard: usize,
    pub steps: usize,
}

impl LpParams {
    /// `T = 8/λ_{ν+1}`, `M = 6`, `dt = T/400`.
    pub fn defaults(lambda_next: f64) -> Self {
        Self { horizon: 8.0 / lambda_next, picard: 6, steps: 400 }
    }
}

/// Slow/fast splitting of a modal basis at a cut `ν`, ready for graph evaluations.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    basis: ModalBasis,
    nu: usize,
    requested_nu: usize,
    slow_linear: DMatrix<f64>,
    params: LpParams,
}

impl ReducedModel {
    /// A cut inside an eigenvalue cluster is moved to the cluster boundary; `params`
    /// defaults to [`LpParams::defaults`].
    pub fn new(basis: ModalBasis, nu: usize, params: Option<LpParams>) -> Result<Self, ManifoldError> {
        let values = basis.values();
        if nu == 0 || nu >= values.len() {
            return Err(ManifoldError::InvalidCut { nu, available: values.len() });
        }
        let snapped = snap_to_cluster_boundary(values, nu);
        if snapped >= values.len() || !(values[snapped] > values[snapped - 1]) {
            return Err(ManifoldError::InvalidCut { nu, available: values.len() });
        }
        let params = params.unwrap_or_else(|| LpParams::defaults(values[snapped]));
        if !(params.horizon > 0.0 && params.steps > 0) {
            return Err(ManifoldError::InvalidParameter(format!("{params:?}")));
        }
        let slow_linear = DMatrix::from_diagonal(&DVector::from_column_slice(&values[..snapped]));
        Ok(Self { basis, nu: snapped, requested_nu: nu, slow_linear, params })
    }

    /// Replaces the slow linear part `A₁` (a symmetric `ν×ν` matrix).
    pub fn with_slow_linear(mut self, slow_linear: DMatrix<f64>) -> Result<Self, ManifoldError> {
        if slow_linear.shape() != (self.nu, self.nu) {
            return Err(ManifoldError::Shape(format!("slow part {:?} for nu = {}", slow_linear.shape(), self.nu)));
        }
        self.slow_linear = slow_linear;
        Ok(self)
    }

    pub fn basis(&self) -> &ModalBasis {
        &self.basis
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn requested_nu(&self) -> usize {
        self.requested_nu
    }

    pub fn params(&self) -> LpParams {
        self.params
    }

    pub fn slow_linear(&self) -> &DMatrix<f64> {
        &self.slow_linear
    }

    /// `λ_{ν+1} − λ_ν`.
    pub fn gap(&self) -> f64 {
        self.basis.values()[self.nu] - self.basis.values()[self.nu - 1]
    }

    pub fn fast_len(&self) -> usize {
        self.basis.len() - self.nu
    }

    fn fast_values(&self) -> &[f64] {
        &self.basis.values()[self.nu..]
    }

    fn join(&self, xi: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut a = DVector::zeros(self.basis.len());
        a.rows_mut(0, self.nu).copy_from(xi);
        a.rows_mut(self.nu, self.fast_len()).copy_from(w);
        a
    }

    fn check_xi(&self, xi: &[f64]) -> Result<DVector<f64>, ManifoldError> {
        if xi.len() != self.nu {
            return Err(ManifoldError::Shape(format!("xi has {} entries, nu = {}", xi.len(), self.nu)));
        }
        Ok(DVector::from_column_slice(xi))
    }
}

/// `Λ(ξ)` split into its slow coefficients (equal to `ξ`) and fast coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphPoint {
    pub xi: Vec<f64>,
    pub fast: Vec<f64>,
    /// `sup_s |w_{m+1}(s) − w_m(s)|` for each Picard step.
    pub deltas: Vec<f64>,
    /// `deltas[m+1]/deltas[m]` above the round-off floor.
    pub ratios: Vec<f64>,
}

impl GraphPoint {
    /// All modal coefficients `(ξ, w(0))`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.xi.iter().chain(&self.fast).copied().collect()
    }

    /// Largest Picard ratio, zero if none was formed.
    pub fn contraction(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// `(1 − e^{−z})/z` and `(1 − e^{−z}(1 + z))/z²`.
fn phi_weights(z: f64) -> (f64, f64) {
    if z.abs() < 1e-4 {
        let phi1 = 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
        let psi = 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
        (phi1, psi)
    } else {
        let e = (-z).exp();
        ((1.0 - e) / z, (1.0 - e * (1.0 + z)) / (z * z))
    }
}

/// Pointwise evaluation of the inertial-manifold graph by Picard iteration of the
/// truncated Lyapunov–Perron map on `[−T, 0]`.
///
/// Each sweep integrates the slow equation `ξ̇ = −A₁ξ + P₁g(Eξ + w_m)` backward from
/// `ξ(0) = ξ` with RK4 (`w_m` linearly interpolated at half steps), then integrates the fast
/// equation forward from `w(−T) = 0` with the exact exponential rule for forcing that is
/// linear on each step.
pub fn lp_graph_eval(xi: &[f64], model: &ReducedModel, nl: &Nonlinearity) -> Result<GraphPoint, ManifoldError> {
    let xi0 = model.check_xi(xi)?;
    let (nu, nf) = (model.nu, model.fast_len());
    let steps = model.params.steps;
    let h = model.params.horizon / steps as f64;
    let basis = &model.basis;
    let weights: Vec<(f64, f64, f64)> = model
        .fast_values()
        .iter()
        .map(|l| {
            let z = l * h;
            let (phi1, psi) = phi_weights(z);
            ((-z).exp(), psi, phi1 - psi)
        })
        .collect();

    let slow_rhs = |x: &DVector<f64>, w: &DVector<f64>| -> DVector<f64> {
        let g = nl.truncated(basis, &model.join(x, w));
        -(&model.slow_linear * x) + g.rows(0, nu)
    };

    let mut w: Vec<DVector<f64>> = vec![DVector::zeros(nf); steps + 1];
    let mut slow: Vec<DVector<f64>> = vec![DVector::zeros(nu); steps + 1];
    let mut deltas = Vec::with_capacity(model.params.picard);
    for _ in 0..model.params.picard {
        slow[steps] = xi0.clone();
        for k in (1..=steps).rev() {
            let x = &slow[k];
            let mid = (&w[k] + &w[k - 1]) * 0.5;
            let k1 = slow_rhs(x, &w[k]);
            let k2 = slow_rhs(&(x - &k1 * (h / 2.0)), &mid);
            let k3 = slow_rhs(&(x - &k2 * (h / 2.0)), &mid);
            let k4 = slow_rhs(&(x - &k3 * h), &w[k - 1]);
            slow[k - 1] = x - (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        }
        let forcing: Vec<DVector<f64>> = (0..=steps)
            .map(|k| nl.truncated(basis, &model.join(&slow[k], &w[k])).rows(nu, nf).into_owned())
            .collect();
        let mut next = vec![DVector::zeros(nf); steps + 1];
        for k in 0..steps {
            let mut step = DVector::zeros(nf);
            for (i, &(decay, c0, c1)) in weights.iter().enumerate() {
                step[i] = decay * next[k][i] + h * (c0 * forcing[k][i] + c1 * forcing[k + 1][i]);
            }
            next[k + 1] = step;
        }
        let delta = next.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if !delta.is_finite() {
            return Err(ManifoldError::Diverged { deltas });
        }
        deltas.push(delta);
        w = next;
    }

    let scale = w.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let ratios: Vec<f64> = deltas
        .windows(2)
        .filter(|d| d[0] > DELTA_FLOOR * scale)
        .map(|d| d[1] / d[0])
        .collect();
    let last_two_grow = deltas.len() >= 3 && ratios.last().is_some_and(|r| *r >= 1.0);
    if last_two_grow && deltas[deltas.len() - 1] > 1e3 * DELTA_FLOOR * scale {
        return Err(ManifoldError::Diverged { deltas });
    }
    Ok(GraphPoint { xi: xi.to_vec(), fast: w[steps].iter().copied().collect(), deltas, ratios })
}

/// `v(ξ) = −A₁ξ + P₁g(Eξ + Λ(ξ))` with the graph point used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldValue {
    pub value: Vec<f64>,
    pub graph: GraphPoint,
}

pub fn reduced_field(xi: &[f64], model: &ReducedModel, nl: &Nonlinearity) -> Result<FieldValue, ManifoldError> {
    let graph = lp_graph_eval(xi, model, nl)?;
    let x = DVector::from_column_slice(xi);
    let a = DVector::from_vec(graph.coefficients());
    let g = nl.truncated(&model.basis, &a);
    let v = -(&model.slow_linear * &x) + g.rows(0, model.nu);
    Ok(FieldValue { value: v.iter().copied().collect(), graph })
}

/// Central-difference Jacobian `∂v/∂ξ_j` with step `h`.
pub fn field_jacobian(xi: &[f64], model: &ReducedModel, nl: &Nonlinearity, h: f64) -> Result<DMatrix<f64>, ManifoldError> {
    let nu = model.nu;
    let mut jac = DMatrix::zeros(nu, nu);
    for j in 0..nu {
        let mut plus = xi.to_vec();
        let mut minus = xi.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let (fp, fm) = (reduced_field(&plus, model, nl)?.value, reduced_field(&minus, model, nl)?.value);
        for i in 0..nu {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Self-consistency of the difference Jacobian across step sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianCheck {
    /// `|J_{4h} − J_{2h}| / |J_{2h} − J_h|`, near 4 for a smooth field.
    pub richardson_ratio: f64,
    /// `|J_h − J_{h/10}| / |J_{h/10}|`.
    pub step_agreement: f64,
}

pub fn jacobian_check(xi: &[f64], model: &ReducedModel, nl: &Nonlinearity, h: f64) -> Result<JacobianCheck, ManifoldError> {
    let j1 = field_jacobian(xi, model, nl, h)?;
    let j2 = field_jacobian(xi, model, nl, 2.0 * h)?;
    let j4 = field_jacobian(xi, model, nl, 4.0 * h)?;
    let j_small = field_jacobian(xi, model, nl, h / 10.0)?;
    Ok(JacobianCheck {
        richardson_ratio: (&j4 - &j2).norm() / (&j2 - &j1).norm(),
        step_agreement: (&j1 - &j_small).norm() / j_small.norm(),
    })
}

/// `‖P₂u(t) − Λ(P₁u(t))‖_b` along a full Galerkin trajectory started on the graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSeries {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ResidualSeries {
    pub fn max_after(&self, t0: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.residuals)
            .filter(|(t, _)| **t >= t0)
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    }
}

/// Integrates all `J` modes (integrating-factor RK4, step `dt`) from `(ξ₀, Λ(ξ₀))` and
/// measures the distance to the graph at `samples` equally spaced times in `[0, horizon]`.
/// The linear part is the diagonal of basis eigenvalues.
pub fn invariance_residual(
    model: &ReducedModel,
    nl: &Nonlinearity,
    xi0: &[f64],
    horizon: f64,
    samples: usize,
    dt: f64,
) -> Result<ResidualSeries, ManifoldError> {
    let samples = samples.max(2);
    let start = lp_graph_eval(xi0, model, nl)?;
    let a0 = DVector::from_vec(start.coefficients());
    let sample_dt = horizon / (samples - 1) as f64;
    let sub = (sample_dt / dt).round().max(1.0) as usize;
    let step = sample_dt / sub as f64;
    let basis = &model.basis;
    let mut states = Vec::with_capacity(samples);
    let mut count = 0usize;
    galerkin::integrate(basis, |a| nl.truncated(basis, a), &a0, horizon, step, |_, a| {
        if count % sub == 0 {
            states.push(a.clone());
        }
        count += 1;
    })?;
    let mut times = Vec::with_capacity(samples);
    let mut residuals = Vec::with_capacity(samples);
    for (i, a) in states.iter().enumerate() {
        let xi: Vec<f64> = a.rows(0, model.nu).iter().copied().collect();
        let graph = lp_graph_eval(&xi, model, nl)?;
        let fast = a.rows(model.nu, model.fast_len());
        let diff: f64 = fast.iter().zip(&graph.fast).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        times.push(i as f64 * sample_dt);
        residuals.push(diff);
    }
    Ok(ResidualSeries { times, residuals })
}

/// Reduced trajectory `ξ̇ = v(ξ)` by classical RK4.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl ReducedTrajectory {
    /// CSV with columns `t, xi_1 .. xi_nu`.
    pub fn to_csv(&self) -> String {
        let nu = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for j in 1..=nu {
            write!(out, ",xi_{j}").expect("writing to a string");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.12e}").expect("writing to a string");
            for x in s {
                write!(out, ",{x:.16e}").expect("writing to a string");
            }
            out.push('\n');
        }
        out
    }
}

pub fn integrate_reduced(
    model: &ReducedModel,
    nl: &Nonlinearity,
    xi0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<ReducedTrajectory, ManifoldError> {
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let f = |x: &DVector<f64>| -> Result<DVector<f64>, ManifoldError> {
        Ok(DVector::from_vec(reduced_field(x.as_slice(), model, nl)?.value))
    };
    let mut x = DVector::from_column_slice(xi0);
    let mut times = vec![0.0];
    let mut states = vec![xi0.to_vec()];
    for step in 1..=steps {
        let k1 = f(&x)?;
        let k2 = f(&(&x + &k1 * (h / 2.0)))?;
        let k3 = f(&(&x + &k2 * (h / 2.0)))?;
        let k4 = f(&(&x + &k3 * h))?;
        x += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        times.push(step as f64 * h);
        states.push(x.iter().copied().collect());
    }
    Ok(ReducedTrajectory { times, states })
}
