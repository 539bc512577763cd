//! Run configuration. Every section has defaults; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use squeeze_core::fourier::FourierSeries;
use squeeze_core::geometry::{SphereGeometry, ThicknessProfile};
use squeeze_core::nonlinearity::{ChafeeInfante, Cubic, LinearDamping, ScalarNonlinearity, Zero};
use squeeze_core::thin::check_eps_list;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub profile: ProfileConfig,
    pub discretization: DiscretizationConfig,
    pub nonlinearity: NonlinearityConfig,
    pub sweep: SweepConfig,
    pub manifold: ManifoldConfig,
    pub simulate: SimulateConfig,
    pub coarea: CoareaConfig,
    pub output: OutputConfig,
    /// Seed for every sampled diagnostic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            profile: ProfileConfig::default(),
            discretization: DiscretizationConfig::default(),
            nonlinearity: NonlinearityConfig::default(),
            sweep: SweepConfig::default(),
            manifold: ManifoldConfig::default(),
            simulate: SimulateConfig::default(),
            coarea: CoareaConfig::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }
}

/// Sphere `S^{n−1}(r) ⊂ ℝⁿ`; defaults to the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub n: usize,
    pub r: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { n: 2, r: 1.0 }
    }
}

/// Inner and outer offsets as Fourier coefficients `{"cos": [a0, a1, ..], "sin": [_, b1, ..]}`.
/// Defaults to `c ≡ 0`, `d ≡ 0.2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub c_coeffs: FourierSeries,
    pub d_coeffs: FourierSeries,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { c_coeffs: FourierSeries::constant(0.0), d_coeffs: FourierSeries::constant(0.2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationConfig {
    /// Nodes of the limit-operator grid (default 1024).
    #[serde(rename = "N")]
    pub n: usize,
    /// Angular nodes of the thin grid (default 128).
    #[serde(rename = "N_theta")]
    pub n_theta: usize,
    /// Transverse cells of the thin grid (default 8).
    #[serde(rename = "N_s")]
    pub n_s: usize,
    /// Eigenpairs reported by `spectrum` and compared by `converge` (default 21).
    pub eig_count: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self { n: 1024, n_theta: 128, n_s: 8, eig_count: 21 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    ChafeeInfante,
    Cubic,
    LinearDamping,
    Zero,
}

/// Reaction term; `lambda` is the Chafee–Infante parameter or the damping rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    pub kind: NonlinearityKind,
    pub lambda: f64,
    pub delta0: f64,
    pub beta: f64,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self { kind: NonlinearityKind::ChafeeInfante, lambda: 2.0, delta0: 1.0, beta: 2.0 }
    }
}

impl NonlinearityConfig {
    pub fn scalar(&self) -> Arc<dyn ScalarNonlinearity> {
        match self.kind {
            NonlinearityKind::ChafeeInfante => Arc::new(ChafeeInfante { lambda: self.lambda }),
            NonlinearityKind::Cubic => Arc::new(Cubic),
            NonlinearityKind::LinearDamping => Arc::new(LinearDamping { kappa: self.lambda }),
            NonlinearityKind::Zero => Arc::new(Zero),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Strictly decreasing squeeze parameters (default 0.2, 0.1, 0.05, 0.025).
    pub eps_list: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { eps_list: vec![0.2, 0.1, 0.05, 0.025] }
    }
}

/// Inertial-manifold run. The limit grid is `N_theta` nodes so that thin models can be
/// aligned with it node by node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldConfig {
    #[serde(rename = "K_gap")]
    pub k_gap: f64,
    /// Lyapunov–Perron horizon; `8/λ_{ν+1}` when absent.
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[serde(rename = "picard_M")]
    pub picard: usize,
    /// RK4 steps on `[−T, 0]`.
    pub steps: usize,
    /// Galerkin truncation; `max(4ν, 32)` when absent.
    #[serde(rename = "J")]
    pub modes: Option<usize>,
    /// Cut index; chosen from the gap condition when absent.
    pub nu: Option<usize>,
    /// Sample points `ξ`; when absent, five seeded points inside half the absorbing radius.
    pub samples: Option<Vec<Vec<f64>>>,
    pub residual_horizon: f64,
    pub residual_samples: usize,
    pub residual_dt: f64,
    /// Reduced trajectory length and step.
    pub trajectory_t: f64,
    pub trajectory_dt: f64,
    /// Squeeze parameters for the reduced-field comparison.
    pub compare_eps: Vec<f64>,
    pub compare_n_s: usize,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self {
            k_gap: 2.0,
            horizon: None,
            picard: 6,
            steps: 400,
            modes: None,
            nu: Some(3),
            samples: None,
            residual_horizon: 10.0,
            residual_samples: 21,
            residual_dt: 0.005,
            trajectory_t: 2.0,
            trajectory_dt: 0.02,
            compare_eps: vec![0.1, 0.05],
            compare_n_s: 4,
        }
    }
}

/// Thin-domain time integration from seeded random initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub eps: f64,
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub snapshot_times: Vec<f64>,
    /// Initial data is uniform on `[−amplitude, amplitude]` at every node.
    pub amplitude: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { eps: 0.05, t_end: 5.0, dt: 0.01, sample_every: 10, snapshot_times: Vec::new(), amplitude: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoareaConfig {
    /// Angular nodes of the shell grid.
    pub n_theta: usize,
    /// Radial cells, each with a 4-point Gauss rule.
    pub n_cells: usize,
}

impl Default for CoareaConfig {
    fn default() -> Self {
        Self { n_theta: 512, n_cells: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec![Format::Json, Format::Csv] }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Geometry and profile built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub geom: SphereGeometry,
    pub profile: ThicknessProfile,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn problem(&self) -> Result<Problem, String> {
        let geom = SphereGeometry::new(self.geometry.n, self.geometry.r).map_err(|e| format!("geometry: {e}"))?;
        let profile = ThicknessProfile::new(self.profile.c_coeffs.clone(), self.profile.d_coeffs.clone())
            .map_err(|e| format!("profile: {e}"))?;
        if geom.ambient_dim() > 2 && !profile.is_constant() {
            return Err("profile: offsets must be constant for n > 2".into());
        }
        Ok(Problem { geom, profile })
    }

    /// Checks every invariant that can be checked without running a computation.
    pub fn validate(&self) -> Result<(), String> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite, got {x}"))
            }
        };
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive, got {x}"))
            }
        };
        let all_coeffs = self.profile.c_coeffs.cos.iter().chain(&self.profile.c_coeffs.sin);
        for &a in all_coeffs.chain(self.profile.d_coeffs.cos.iter()).chain(&self.profile.d_coeffs.sin) {
            finite("profile coefficient", a)?;
        }
        self.problem()?;

        let d = &self.discretization;
        if d.n < 16 {
            return Err(format!("discretization.N must be at least 16, got {}", d.n));
        }
        if d.n_theta < 64 || d.n_s < 2 {
            return Err(format!("discretization needs N_theta >= 64 and N_s >= 2, got {} and {}", d.n_theta, d.n_s));
        }
        if d.eig_count == 0 || d.eig_count > d.n.min(d.n_theta) {
            return Err(format!("discretization.eig_count must lie in 1..={}, got {}", d.n.min(d.n_theta), d.eig_count));
        }

        let nl = &self.nonlinearity;
        finite("nonlinearity.lambda", nl.lambda)?;
        positive("nonlinearity.delta0", nl.delta0)?;
        if !(nl.beta >= 0.0 && nl.beta.is_finite()) {
            return Err(format!("nonlinearity.beta must be non-negative, got {}", nl.beta));
        }

        check_eps_list(&self.sweep.eps_list).map_err(|e| format!("sweep.eps_list: {e}"))?;
        if self.sweep.eps_list.iter().any(|&e| e > 1.0) {
            return Err("sweep.eps_list: values must lie in ]0, 1]".into());
        }

        let m = &self.manifold;
        positive("manifold.K_gap", m.k_gap)?;
        if let Some(t) = m.horizon {
            positive("manifold.T", t)?;
        }
        if m.picard < 2 || m.steps == 0 {
            return Err(format!("manifold needs picard_M >= 2 and steps >= 1, got {} and {}", m.picard, m.steps));
        }
        if let Some(j) = m.modes {
            if j < 2 || j > d.n_theta {
                return Err(format!("manifold.J must lie in 2..={}, got {j}", d.n_theta));
            }
        }
        if m.nu == Some(0) {
            return Err("manifold.nu must be positive".into());
        }
        if let (Some(nu), Some(samples)) = (m.nu, &m.samples) {
            if let Some(bad) = samples.iter().find(|s| s.len() != nu) {
                return Err(format!("manifold.samples: point {bad:?} does not have nu = {nu} entries"));
            }
        }
        positive("manifold.residual_horizon", m.residual_horizon)?;
        positive("manifold.residual_dt", m.residual_dt)?;
        positive("manifold.trajectory_t", m.trajectory_t)?;
        positive("manifold.trajectory_dt", m.trajectory_dt)?;
        if m.residual_samples < 2 {
            return Err("manifold.residual_samples must be at least 2".into());
        }
        check_eps_list(&m.compare_eps).map_err(|e| format!("manifold.compare_eps: {e}"))?;
        if m.compare_n_s < 2 {
            return Err("manifold.compare_n_s must be at least 2".into());
        }

        let s = &self.simulate;
        positive("simulate.eps", s.eps)?;
        positive("simulate.t_end", s.t_end)?;
        positive("simulate.dt", s.dt)?;
        finite("simulate.amplitude", s.amplitude)?;
        if s.sample_every == 0 {
            return Err("simulate.sample_every must be positive".into());
        }
        if let Some(t) = s.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= s.t_end)) {
            return Err(format!("simulate.snapshot_times: {t} outside [0, t_end]"));
        }

        if self.coarea.n_theta < 16 || self.coarea.n_cells == 0 {
            return Err("coarea needs n_theta >= 16 and n_cells >= 1".into());
        }
        if self.output.dir.is_empty() {
            return Err("output.dir must not be empty".into());
        }
        if self.output.formats.is_empty() {
            return Err("output.formats must name at least one format".into());
        }
        Ok(())
    }
}
