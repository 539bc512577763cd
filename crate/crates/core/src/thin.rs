//! The Neumann Laplacian on the thin annulus
//! `Ω_ε = {ρ(θ, t)(cos θ, sin θ) : ρ = r + ε(c(θ) + t·μ(θ)), t ∈ [0, 1]}`.
//!
//! The form `∫_{Ω_ε} ∇u·∇v dx` is pulled back to the periodic logical rectangle
//! `(θ, t) ∈ [0, 2π) × [0, 1]` and discretized with bilinear elements. Nodes are ordered
//! angle-major, `index = i·(N_s + 1) + j`, so the matrices are banded up to the periodic wrap.

use crate::geometry::{gauss_legendre, GeometryError, SphereGeometry, ThicknessProfile};
use crate::linalg::{generalized_eigen, EnvelopeCholesky, LinalgError};
use crate::nonlinearity::ScalarNonlinearity;
use crate::spectral::{self, GridInfo, SpectralDecomposition, SpectralError};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

/// Largest system handled by the dense eigensolver.
pub const MAX_DENSE_UNKNOWNS: usize = 8192;
/// Trajectories whose mass norm exceeds this value are treated as blown up.
pub const BLOW_UP_NORM: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThinError {
    #[error("grid needs N_theta >= 64 and N_s >= 2, got N_theta = {n_theta}, N_s = {n_s}")]
    GridTooSmall { n_theta: usize, n_s: usize },
    #[error("{size} unknowns exceed the dense limit {max}")]
    TooLarge { size: usize, max: usize },
    #[error("requested {requested} eigenpairs from a problem of size {size}")]
    CountTooLarge { requested: usize, size: usize },
    #[error("thin domains are built around the circle only, got n = {0}")]
    NotCircle(usize),
    #[error("epsilon list must be strictly decreasing and positive")]
    EpsNotDescending,
    #[error("time step and horizon must be positive and finite: dt = {dt}, T = {t_end}")]
    InvalidTimeStep { dt: f64, t_end: f64 },
    #[error("initial data has {got} values, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("integration blew up at t = {t}: norm = {norm}")]
    BlowUp { t: f64, norm: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("factorization failed: {0}")]
    Linalg(#[from] LinalgError),
}

/// Stiffness and mass of the Neumann problem on `Ω_ε`.
#[derive(Debug, Clone)]
pub struct ThinDomainOperator {
    eps: f64,
    n_theta: usize,
    n_s: usize,
    radius: f64,
    profile: ThicknessProfile,
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
}

/// Coordinates of a node of the logical grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinNode {
    pub theta: f64,
    pub t: f64,
    pub rho: f64,
}

impl ThinDomainOperator {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn profile(&self) -> &ThicknessProfile {
        &self.profile
    }

    /// Number of unknowns `N_θ·(N_s + 1)`.
    pub fn size(&self) -> usize {
        self.n_theta * (self.n_s + 1)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.n_s + 1) + j
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn node(&self, i: usize, j: usize) -> ThinNode {
        let theta = 2.0 * PI * i as f64 / self.n_theta as f64;
        let t = j as f64 / self.n_s as f64;
        let rho = self.radius + self.eps * (self.profile.c(theta) + t * self.profile.mu(theta));
        ThinNode { theta, t, rho }
    }

    /// `ρ`-weighted trapezoid mean over `t` of a nodal function, one value per angle.
    pub fn transverse_average(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.size(), "nodal function has the wrong length");
        (0..self.n_theta)
            .map(|i| {
                let (mut num, mut den) = (0.0, 0.0);
                for j in 0..=self.n_s {
                    let w = if j == 0 || j == self.n_s { 0.5 } else { 1.0 };
                    let rho = self.node(i, j).rho;
                    num += w * rho * u[self.index(i, j)];
                    den += w * rho;
                }
                num / den
            })
            .collect()
    }
}

pub fn assemble_thin_operator(
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    eps: f64,
    n_theta: usize,
    n_s: usize,
) -> Result<ThinDomainOperator, ThinError> {
    if geom.ambient_dim() != 2 {
        return Err(ThinError::NotCircle(geom.ambient_dim()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(GeometryError::InvalidEpsilon(eps).into());
    }
    let r = geom.radius();
    let (max_c, max_d) = profile.max_offsets();
    let reach = eps * (max_c + max_d);
    if reach >= 0.5 * r {
        return Err(GeometryError::NotBijective { eps, reach, radius: r }.into());
    }
    if n_theta < 64 || n_s < 2 {
        return Err(ThinError::GridTooSmall { n_theta, n_s });
    }
    let size = n_theta * (n_s + 1);
    if size > MAX_DENSE_UNKNOWNS {
        return Err(ThinError::TooLarge { size, max: MAX_DENSE_UNKNOWNS });
    }

    let (gx, gw) = gauss_legendre(2);
    let dtheta = 2.0 * PI / n_theta as f64;
    let dt = 1.0 / n_s as f64;
    let (inner, mu) = (profile.inner(), profile.thickness());
    let mut k = DMatrix::zeros(size, size);
    let mut m = DMatrix::zeros(size, size);
    let idx = |i: usize, j: usize| (i % n_theta) * (n_s + 1) + j;

    for i in 0..n_theta {
        // Angular data depend only on the Gauss abscissa in θ.
        let ang: Vec<[f64; 4]> = gx
            .iter()
            .map(|x| {
                let th = (i as f64 + x) * dtheta;
                [inner.eval(th), mu.eval(th), inner.derivative(1, th), mu.derivative(1, th)]
            })
            .collect();
        for j in 0..n_s {
            let nodes = [idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)];
            let mut ke = [[0.0; 4]; 4];
            let mut me = [[0.0; 4]; 4];
            for (a, (xa, wa)) in gx.iter().zip(gw).enumerate() {
                let [c, mu_v, dc, dmu] = ang[a];
                for (yb, wb) in gx.iter().zip(gw) {
                    let t = (j as f64 + yb) * dt;
                    let rho = r + eps * (c + t * mu_v);
                    let rho_th = eps * (dc + t * dmu);
                    let rho_t = eps * mu_v;
                    let det = rho * rho_t;
                    let inv_g = 1.0 / (rho * rho);
                    // G⁻¹ for the metric JᵀJ = [[ρ_θ² + ρ², ρ_θρ_t], [ρ_θρ_t, ρ_t²]].
                    let g_tt = inv_g;
                    let g_ts = -rho_th / (rho_t * rho * rho);
                    let g_ss = (rho_th * rho_th + rho * rho) / (rho_t * rho_t * rho * rho);
                    let w = wa * wb * dtheta * dt * det;
                    let shape = [(1.0 - xa) * (1.0 - yb), xa * (1.0 - yb), (1.0 - xa) * yb, xa * yb];
                    let d_th = [-(1.0 - yb) / dtheta, (1.0 - yb) / dtheta, -yb / dtheta, yb / dtheta];
                    let d_s = [-(1.0 - xa) / dt, -xa / dt, (1.0 - xa) / dt, xa / dt];
                    for p in 0..4 {
                        for q in 0..4 {
                            let grad = g_tt * d_th[p] * d_th[q]
                                + g_ts * (d_th[p] * d_s[q] + d_s[p] * d_th[q])
                                + g_ss * d_s[p] * d_s[q];
                            ke[p][q] += w * grad;
                            me[p][q] += w * shape[p] * shape[q];
                        }
                    }
                }
            }
            for p in 0..4 {
                for q in 0..4 {
                    k[(nodes[p], nodes[q])] += ke[p][q];
                    m[(nodes[p], nodes[q])] += me[p][q];
                }
            }
        }
    }
    Ok(ThinDomainOperator { eps, n_theta, n_s, radius: r, profile: profile.clone(), stiffness: k, mass: m })
}

fn thin_decompose(op: &ThinDomainOperator, count: usize, vectors: bool) -> Result<SpectralDecomposition, ThinError> {
    if count > op.size() {
        return Err(ThinError::CountTooLarge { requested: count, size: op.size() });
    }
    let eig = generalized_eigen(&op.stiffness, &op.mass, vectors.then_some(count))?;
    let values = eig.values[..count].to_vec();
    Ok(SpectralDecomposition::new(values, eig.vectors, GridInfo { nodes: op.size(), radius: op.radius }))
}

/// First `count` eigenpairs `λ_j^ε`, eigenvectors `M_ε`-orthonormal.
pub fn thin_spectrum(op: &ThinDomainOperator, count: usize) -> Result<SpectralDecomposition, ThinError> {
    thin_decompose(op, count, true)
}

/// First `count` eigenvalues only.
pub fn thin_eigenvalues(op: &ThinDomainOperator, count: usize) -> Result<Vec<f64>, ThinError> {
    Ok(thin_decompose(op, count, false)?.eigenvalues().to_vec())
}

/// Angular and transverse resolution of the thin grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThinGrid {
    pub n_theta: usize,
    pub n_s: usize,
}

impl Default for ThinGrid {
    fn default() -> Self {
        Self { n_theta: 128, n_s: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// One-based eigenvalue index.
    pub j: usize,
    pub lambda_eps: f64,
    pub lambda_limit: f64,
    /// `|λ_j^ε − λ_j^0|/λ_j^0`; absolute difference when `λ_j^0` vanishes.
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Errors for index `j` in the order of the epsilon list.
    pub fn errors(&self, j: usize) -> Vec<f64> {
        self.rows.iter().filter(|row| row.j == j).map(|row| row.rel_err).collect()
    }

    /// Whether the errors of index `j` never grow by more than `noise` as ε decreases.
    pub fn is_monotone(&self, j: usize, noise: f64) -> bool {
        self.errors(j).windows(2).all(|w| w[1] <= w[0] + noise)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,j,lambda_eps,lambda_limit,rel_err\n");
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e}",
                row.eps, row.j, row.lambda_eps, row.lambda_limit, row.rel_err
            )
            .expect("writing to a string");
        }
        out
    }
}

/// Limit eigenvalues `λ_j^0` on the same angular grid as the thin problem, so that the
/// angular discretization error is shared.
pub fn limit_eigenvalues(
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    grid: ThinGrid,
    j_max: usize,
) -> Result<Vec<f64>, ThinError> {
    let op = spectral::assemble_circle_operator(profile, geom, grid.n_theta)?;
    Ok(spectral::eigenvalues(&op, j_max)?.eigenvalues().to_vec())
}

/// Rows of the convergence table for one value of ε.
pub fn convergence_rows(
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    eps: f64,
    grid: ThinGrid,
    limit: &[f64],
) -> Result<Vec<ConvergenceRow>, ThinError> {
    let op = assemble_thin_operator(profile, geom, eps, grid.n_theta, grid.n_s)?;
    let thin = thin_eigenvalues(&op, limit.len())?;
    let scale = limit.last().copied().unwrap_or(1.0).abs().max(1.0);
    Ok(thin
        .iter()
        .zip(limit)
        .enumerate()
        .map(|(j, (&lambda_eps, &lambda_limit))| {
            let diff = (lambda_eps - lambda_limit).abs();
            let rel_err = if lambda_limit.abs() > 1e-10 * scale { diff / lambda_limit.abs() } else { diff };
            ConvergenceRow { eps, j: j + 1, lambda_eps, lambda_limit, rel_err }
        })
        .collect())
}

/// Relative eigenvalue errors of `Ω_ε` against the limit operator for `j = 1..=j_max`.
pub fn convergence_study(
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    eps_list: &[f64],
    j_max: usize,
    grid: ThinGrid,
) -> Result<ConvergenceTable, ThinError> {
    check_eps_list(eps_list)?;
    let limit = limit_eigenvalues(profile, geom, grid, j_max)?;
    let mut rows = Vec::new();
    for &eps in eps_list {
        rows.extend(convergence_rows(profile, geom, eps, grid, &limit)?);
    }
    Ok(ConvergenceTable { rows })
}

pub fn check_eps_list(eps_list: &[f64]) -> Result<(), ThinError> {
    let positive = eps_list.iter().all(|e| *e > 0.0);
    if eps_list.is_empty() || !positive || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ThinError::EpsNotDescending);
    }
    Ok(())
}

/// Compressed rows of a dense matrix, for repeated products.
#[derive(Debug, Clone)]
struct SparseRows {
    ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut ptr = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            ptr.push(cols.len());
        }
        Self { ptr, cols, vals }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.ptr[i]..self.ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Record a sample every this many steps (and at the final step).
    pub sample_every: usize,
    /// Times at which the full nodal field is stored.
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    /// `(uᵀ M_ε u)^{1/2}`.
    pub norm: f64,
    pub min: f64,
    pub max: f64,
    /// `uᵀ K_ε u`.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub final_state: Vec<f64>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm,min,max\n");
        for s in &self.samples {
            writeln!(out, "{:.12e},{:.16e},{:.16e},{:.16e}", s.t, s.norm, s.min, s.max).expect("writing to a string");
        }
        out
    }

    /// Long-format snapshot table `t,theta,s,u`.
    pub fn snapshots_csv(&self, op: &ThinDomainOperator) -> String {
        let mut out = String::from("t,theta,s,u\n");
        for (t, u) in &self.snapshots {
            for i in 0..op.n_theta() {
                for j in 0..=op.n_s() {
                    let node = op.node(i, j);
                    writeln!(out, "{t:.12e},{:.16e},{:.16e},{:.16e}", node.theta, node.t, u[op.index(i, j)])
                        .expect("writing to a string");
                }
            }
        }
        out
    }
}

/// Semi-implicit Euler for `M u̇ + K u = M G(u)`:
/// `(M + dt·K) u^{n+1} = M (u^n + dt·G(u^n))`, with one factorization per run.
pub fn simulate(
    op: &ThinDomainOperator,
    g: &dyn ScalarNonlinearity,
    u0: &[f64],
    cfg: &SimulationConfig,
) -> Result<Trajectory, ThinError> {
    let n = op.size();
    if u0.len() != n {
        return Err(ThinError::ShapeMismatch { expected: n, got: u0.len() });
    }
    if !(cfg.dt > 0.0 && cfg.t_end > 0.0 && cfg.dt.is_finite() && cfg.t_end.is_finite()) {
        return Err(ThinError::InvalidTimeStep { dt: cfg.dt, t_end: cfg.t_end });
    }
    let steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let every = cfg.sample_every.max(1);
    let system = op.mass() + op.stiffness() * cfg.dt;
    let chol = EnvelopeCholesky::factor(&system)?;
    let mass = SparseRows::from_dense(op.mass());
    let stiff = SparseRows::from_dense(op.stiffness());
    let snap_steps: Vec<usize> = cfg.snapshot_times.iter().map(|t| (t / cfg.dt).round() as usize).collect();

    let mut u = u0.to_vec();
    let mut buf = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut samples = Vec::new();
    let mut snapshots = Vec::new();
    let mut record = |u: &[f64], step: usize, buf: &mut [f64]| -> Result<(), ThinError> {
        let t = step as f64 * cfg.dt;
        mass.apply(u, buf);
        let norm = dot(u, buf).max(0.0).sqrt();
        if !norm.is_finite() || norm > BLOW_UP_NORM {
            return Err(ThinError::BlowUp { t, norm });
        }
        stiff.apply(u, buf);
        let energy = dot(u, buf);
        let min = u.iter().copied().fold(f64::INFINITY, f64::min);
        let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        samples.push(TrajectorySample { t, norm, min, max, energy });
        Ok(())
    };
    record(&u, 0, &mut buf)?;
    if snap_steps.contains(&0) {
        snapshots.push((0.0, u.clone()));
    }
    for step in 1..=steps {
        g.nemitski(&u, &mut buf);
        for (b, x) in buf.iter_mut().zip(&u) {
            *b = x + cfg.dt * *b;
        }
        mass.apply(&buf, &mut rhs);
        u = chol.solve(&rhs);
        if step % every == 0 || step == steps {
            record(&u, step, &mut buf)?;
        } else if u.iter().any(|x| !x.is_finite()) {
            return Err(ThinError::BlowUp { t: step as f64 * cfg.dt, norm: f64::NAN });
        }
        for (k, s) in snap_steps.iter().enumerate() {
            if *s == step {
                snapshots.push((cfg.snapshot_times[k], u.clone()));
            }
        }
    }
    Ok(Trajectory { samples, snapshots, final_state: u })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
