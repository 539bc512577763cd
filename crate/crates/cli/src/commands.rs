use crate::config::{Format, RunConfig};
use crate::output::OutputDir;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use squeeze_core::gap::{certify, repeated_spectrum, CertifyOptions, GapError, NumericalSpectrum};
use squeeze_core::geometry::{coarea_check, lift, ShellGrid};
use squeeze_core::manifold::{
    choose_cut, compare_reduced_fields, default_truncation, integrate_reduced, invariance_residual, lp_graph_eval,
    prepare_nonlinearity, snap_to_cluster_boundary, CompareOptions, ComparisonReport, CutChoice, LpParams, ModalBasis,
    NonlinearityReport, PrepareOptions, ReducedModel, ResidualSeries,
};
use squeeze_core::spectral::{assemble_circle_operator, eigendecompose, eigenvalues};
use squeeze_core::thin::{
    assemble_thin_operator, convergence_rows, limit_eigenvalues, simulate, ConvergenceTable, SimulationConfig, ThinGrid,
};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Spectrum,
    Certify,
    Converge,
    Simulate,
    Manifold,
    CoareaCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Certify => "certify",
            Command::Converge => "converge",
            Command::Simulate => "simulate",
            Command::Manifold => "manifold",
            Command::CoareaCheck => "coarea-check",
        }
    }
}

/// Failure classes, mapped to exit codes 2 (config), 3 (numerical) and 1 (I/O).
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Io(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(e) => write!(f, "i/o error: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Io(e)
    }
}

fn numerical(e: impl fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

fn need_circle(cfg: &RunConfig, what: &str) -> Result<(), RunError> {
    if cfg.geometry.n != 2 {
        return Err(RunError::Config(format!("{what} is implemented for n = 2 only, got n = {}", cfg.geometry.n)));
    }
    Ok(())
}

pub fn execute(command: Command, cfg: &RunConfig, out: &mut OutputDir) -> Result<(), RunError> {
    match command {
        Command::Spectrum => spectrum(cfg, out),
        Command::Certify => certify_cmd(cfg, out),
        Command::Converge => converge(cfg, out),
        Command::Simulate => simulate_cmd(cfg, out),
        Command::Manifold => manifold(cfg, out),
        Command::CoareaCheck => coarea(cfg, out),
    }
}

#[derive(Serialize)]
struct SpectrumReport {
    source: &'static str,
    n: usize,
    r: f64,
    nodes: Option<usize>,
    eigenvalues: Vec<f64>,
    cluster_sizes: Vec<usize>,
}

fn spectrum(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), RunError> {
    let p = cfg.problem().map_err(RunError::Config)?;
    let count = cfg.discretization.eig_count;
    let report = if cfg.geometry.n == 2 {
        let op = assemble_circle_operator(&p.profile, &p.geom, cfg.discretization.n).map_err(numerical)?;
        let dec = eigendecompose(&op, count).map_err(numerical)?;
        if cfg.output.wants(Format::Csv) {
            out.write("spectrum.csv", dec.to_csv().as_bytes())?;
        }
        SpectrumReport {
            source: "finite_elements",
            n: 2,
            r: cfg.geometry.r,
            nodes: Some(cfg.discretization.n),
            eigenvalues: dec.eigenvalues().to_vec(),
            cluster_sizes: dec.cluster_sizes(),
        }
    } else {
        // Only constant profiles are accepted here, for which A_μ is the Laplacian.
        let values = repeated_spectrum(cfg.geometry.n, cfg.geometry.r, count);
        let ids = squeeze_core::spectral::cluster_ids(&values, squeeze_core::spectral::CLUSTER_RTOL);
        let mut sizes = vec![0; ids.last().map_or(0, |i| i + 1)];
        for id in &ids {
            sizes[*id] += 1;
        }
        if cfg.output.wants(Format::Csv) {
            let mut csv = String::from("j,lambda,cluster_id\n");
            for (j, (l, id)) in values.iter().zip(&ids).enumerate() {
                csv.push_str(&format!("{},{:.16e},{}\n", j + 1, l, id));
            }
            out.write("spectrum.csv", csv.as_bytes())?;
        }
        SpectrumReport {
            source: "closed_form",
            n: cfg.geometry.n,
            r: cfg.geometry.r,
            nodes: None,
            eigenvalues: values,
            cluster_sizes: sizes,
        }
    };
    if cfg.output.wants(Format::Json) {
        out.write_json("spectrum.json", &report)?;
    }
    Ok(())
}

fn certify_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), RunError> {
    let p = cfg.problem().map_err(RunError::Config)?;
    let opts = CertifyOptions::default();
    let spectrum = if cfg.geometry.n == 2 {
        let fine_n = cfg.discretization.n;
        // Eigenvalues up to the last checked interval, with a margin of one cluster.
        let count = (2 * opts.exclusion_nu_max + 5).min(fine_n / 2);
        let (fine, coarse) = rayon::join(
            || {
                assemble_circle_operator(&p.profile, &p.geom, fine_n)
                    .and_then(|op| eigenvalues(&op, count))
            },
            || {
                assemble_circle_operator(&p.profile, &p.geom, fine_n / 2)
                    .and_then(|op| eigenvalues(&op, count))
            },
        );
        Some(NumericalSpectrum::from_refinement(&fine.map_err(numerical)?, &coarse.map_err(numerical)?, 2).map_err(numerical)?)
    } else {
        None
    };
    let cert = match certify(&p.profile, &p.geom, spectrum.as_ref(), opts) {
        Ok(c) => c,
        Err(e @ GapError::ExclusionViolated { .. }) => return Err(numerical(e)),
        Err(e) => return Err(numerical(e)),
    };
    if !cert.admissible {
        log::warn!("C_mu = {} exceeds the admissibility threshold; exclusion is not guaranteed", cert.c_mu);
    }
    if cfg.output.wants(Format::Json) {
        out.write("certificate.json", format!("{}\n", cert.to_json()).as_bytes())?;
    }
    if cfg.output.wants(Format::Csv) {
        let mut csv = String::from("nu,lo,hi,ratio\n");
        for (iv, ratio) in cert.intervals.iter().zip(&cert.ratios) {
            csv.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", iv.nu, iv.lo, iv.hi, ratio));
        }
        out.write("intervals.csv", csv.as_bytes())?;
    }
    Ok(())
}

fn converge(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), RunError> {
    need_circle(cfg, "converge")?;
    let p = cfg.problem().map_err(RunError::Config)?;
    let grid = ThinGrid { n_theta: cfg.discretization.n_theta, n_s: cfg.discretization.n_s };
    let limit = limit_eigenvalues(&p.profile, &p.geom, grid, cfg.discretization.eig_count).map_err(numerical)?;
    let per_eps: Vec<_> = cfg
        .sweep
        .eps_list
        .par_iter()
        .map(|&eps| convergence_rows(&p.profile, &p.geom, eps, grid, &limit))
        .collect();
    let mut rows = Vec::new();
    for r in per_eps {
        rows.extend(r.map_err(numerical)?);
    }
    let table = ConvergenceTable { rows };
    if cfg.output.wants(Format::Csv) {
        out.write("convergence.csv", table.to_csv().as_bytes())?;
    }
    if cfg.output.wants(Format::Json) {
        out.write_json("convergence.json", &table)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport {
    eps: f64,
    steps: usize,
    final_norm: f64,
    final_min: f64,
    final_max: f64,
    samples: usize,
}

fn simulate_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), RunError> {
    need_circle(cfg, "simulate")?;
    let p = cfg.problem().map_err(RunError::Config)?;
    let s = &cfg.simulate;
    let op = assemble_thin_operator(&p.profile, &p.geom, s.eps, cfg.discretization.n_theta, cfg.discretization.n_s)
        .map_err(numerical)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u0: Vec<f64> = (0..op.size()).map(|_| s.amplitude * rng.random_range(-1.0..=1.0)).collect();
    let g = cfg.nonlinearity.scalar();
    let sim = SimulationConfig {
        t_end: s.t_end,
        dt: s.dt,
        sample_every: s.sample_every,
        snapshot_times: s.snapshot_times.clone(),
    };
    let traj = simulate(&op, g.as_ref(), &u0, &sim).map_err(numerical)?;
    if cfg.output.wants(Format::Csv) {
        out.write("trajectory.csv", traj.to_csv().as_bytes())?;
        if !traj.snapshots.is_empty() {
            out.write("snapshots.csv", traj.snapshots_csv(&op).as_bytes())?;
        }
    }
    if cfg.output.wants(Format::Json) {
        let last = traj.samples.last().expect("at least the initial sample");
        out.write_json(
            "simulate.json",
            &SimulateReport {
                eps: s.eps,
                steps: (s.t_end / s.dt).round() as usize,
                final_norm: last.norm,
                final_min: last.min,
                final_max: last.max,
                samples: traj.samples.len(),
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CutReport {
    choice: Option<CutChoice>,
    error: Option<String>,
    k_gap: f64,
}

#[derive(Serialize)]
struct ManifoldReport {
    nu: usize,
    requested_nu: usize,
    modes: usize,
    gap: f64,
    #[serde(rename = "L")]
    lipschitz: f64,
    cut: CutReport,
    nonlinearity: NonlinearityReport,
    lp: LpParams,
    samples: Vec<Vec<f64>>,
    /// Picard ratios per sample.
    contraction_ratios: Vec<Vec<f64>>,
    max_contraction: f64,
    tangency_exact: bool,
    residual_series: ResidualSeries,
    field_discrepancies: Vec<ComparisonReport>,
}

fn manifold(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), RunError> {
    need_circle(cfg, "manifold")?;
    let p = cfg.problem().map_err(RunError::Config)?;
    let m = &cfg.manifold;
    let nodes = cfg.discretization.n_theta;
    let op = assemble_circle_operator(&p.profile, &p.geom, nodes).map_err(numerical)?;
    let requested_modes = m.modes.unwrap_or_else(|| default_truncation(m.nu.unwrap_or(3))).min(nodes - 1);
    let probe = eigenvalues(&op, requested_modes + 1).map_err(numerical)?;
    let modes = snap_to_cluster_boundary(probe.eigenvalues(), requested_modes);
    let basis = ModalBasis::from_limit(&op, modes).map_err(numerical)?;

    let prep = PrepareOptions { seed: cfg.seed, ..PrepareOptions::default() };
    let nl = prepare_nonlinearity(cfg.nonlinearity.scalar(), cfg.nonlinearity.delta0, cfg.nonlinearity.beta, &basis, prep)
        .map_err(numerical)?;
    let cut = choose_cut(basis.values(), nl.lipschitz(), m.k_gap);
    let nu = match (m.nu, &cut) {
        (Some(nu), _) => nu,
        (None, Ok(c)) => c.nu,
        (None, Err(e)) => return Err(numerical(e)),
    };
    let cut_report = match cut {
        Ok(c) => CutReport { choice: Some(c), error: None, k_gap: m.k_gap },
        Err(e) => CutReport { choice: None, error: Some(e.to_string()), k_gap: m.k_gap },
    };
    let values = basis.values().to_vec();
    let snapped = snap_to_cluster_boundary(&values, nu);
    if snapped == 0 || snapped >= values.len() {
        return Err(RunError::Config(format!("manifold.nu = {nu} leaves no fast modes among {} modes", values.len())));
    }
    let params = LpParams {
        horizon: m.horizon.unwrap_or(8.0 / values[snapped]),
        picard: m.picard,
        steps: m.steps,
    };
    let model = ReducedModel::new(basis, nu, Some(params)).map_err(numerical)?;
    let nu = model.nu();

    let samples = match &m.samples {
        Some(s) if s.iter().all(|x| x.len() == nu) => s.clone(),
        Some(_) => {
            return Err(RunError::Config(format!("manifold.samples must have nu = {nu} entries after cluster snapping")))
        }
        None => {
            // Seeded points inside half the absorbing ball, where the attractor lives.
            let report = nl.report();
            let scale = if report.absorbing_radius > 0.0 { 0.5 * report.absorbing_radius } else { 0.25 * nl.radius() };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..5)
                .map(|_| {
                    let dir: Vec<f64> = (0..nu).map(|_| rng.random_range(-1.0..=1.0)).collect();
                    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    let radius = scale * rng.random_range(0.2..=1.0);
                    dir.iter().map(|x| x * radius / norm).collect()
                })
                .collect()
        }
    };

    let points: Vec<_> = samples.par_iter().map(|xi| lp_graph_eval(xi, &model, &nl)).collect();
    let mut contraction_ratios = Vec::new();
    let mut tangency_exact = true;
    for (pt, xi) in points.into_iter().zip(&samples) {
        let pt = pt.map_err(numerical)?;
        tangency_exact &= pt.coefficients()[..nu] == xi[..];
        contraction_ratios.push(pt.ratios);
    }
    let max_contraction = contraction_ratios.iter().flatten().copied().fold(0.0, f64::max);

    let opts = CompareOptions { n_s: m.compare_n_s, ..CompareOptions::default() };
    let ((residual, trajectory), comparisons) = rayon::join(
        || {
            rayon::join(
                || invariance_residual(&model, &nl, &samples[0], m.residual_horizon, m.residual_samples, m.residual_dt),
                || integrate_reduced(&model, &nl, &samples[0], m.trajectory_t, m.trajectory_dt),
            )
        },
        || {
            m.compare_eps
                .par_iter()
                .map(|&eps| compare_reduced_fields(&p.profile, &p.geom, &nl, &model, eps, &samples, opts))
                .collect::<Vec<_>>()
        },
    );
    let residual_series = residual.map_err(numerical)?;
    let trajectory = trajectory.map_err(numerical)?;
    let field_discrepancies = comparisons.into_iter().collect::<Result<Vec<_>, _>>().map_err(numerical)?;

    let report = ManifoldReport {
        nu,
        requested_nu: model.requested_nu(),
        modes: model.basis().len(),
        gap: model.gap(),
        lipschitz: nl.lipschitz(),
        cut: cut_report,
        nonlinearity: nl.report(),
        lp: model.params(),
        samples,
        contraction_ratios,
        max_contraction,
        tangency_exact,
        residual_series,
        field_discrepancies,
    };
    if cfg.output.wants(Format::Json) {
        out.write_json("manifold.json", &report)?;
    }
    if cfg.output.wants(Format::Csv) {
        out.write("reduced_trajectory.csv", trajectory.to_csv().as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CoareaRow {
    integrand: &'static str,
    lhs: f64,
    rhs: f64,
    diff: f64,
}

#[derive(Serialize)]
struct IsometryRow {
    function: &'static str,
    b0: f64,
    b_mu: f64,
    a0: f64,
    a_mu: f64,
}

#[derive(Serialize)]
struct CoareaReport {
    n_theta: usize,
    n_cells: usize,
    coarea: Vec<CoareaRow>,
    isometry: Vec<IsometryRow>,
}

type Integrand = (&'static str, fn(&[f64], f64) -> f64);
type TestFunction = (&'static str, fn(f64) -> f64);

fn coarea(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), RunError> {
    need_circle(cfg, "coarea-check")?;
    let p = cfg.problem().map_err(RunError::Config)?;
    let grid = ShellGrid::new(cfg.coarea.n_theta, cfg.coarea.n_cells);
    let integrands: [Integrand; 4] = [
        ("one", |_, _| 1.0),
        ("radial_offset", |x, r| (x[0] * x[0] + x[1] * x[1]).sqrt() - r),
        ("cubic_polynomial", |x, _| x[0] * x[0] - 0.5 * x[0] * x[1] + x[1].powi(3)),
        ("exponential", |x, _| (x[0] + 0.5 * x[1]).exp()),
    ];
    let r = cfg.geometry.r;
    let mut rows = Vec::new();
    for (name, g) in integrands {
        let res = coarea_check(|x| g(x, r), &p.profile, &p.geom, grid).map_err(numerical)?;
        rows.push(CoareaRow { integrand: name, lhs: res.lhs, rhs: res.rhs, diff: res.diff });
    }
    let functions: [TestFunction; 5] = [
        ("cos", |t| t.cos()),
        ("shifted_sin3", |t| 0.5 + (3.0 * t).sin()),
        ("exp_cos", |t| t.cos().exp()),
        ("rational", |t| 1.0 / (1.5 + t.sin())),
        ("cos2_sin", |t| (2.0 * t).cos() * t.sin()),
    ];
    let mut iso = Vec::new();
    for (name, v) in functions {
        let samples: Vec<f64> = grid.angles().into_iter().map(v).collect();
        let f = lift(&samples, grid, &p.geom).map_err(numerical)?.forms(&p.profile, &p.geom);
        iso.push(IsometryRow { function: name, b0: f.b0, b_mu: f.b_mu, a0: f.a0, a_mu: f.a_mu });
    }
    if cfg.output.wants(Format::Csv) {
        let mut csv = String::from("integrand,lhs,rhs,diff\n");
        for row in &rows {
            csv.push_str(&format!("{},{:.16e},{:.16e},{:.3e}\n", row.integrand, row.lhs, row.rhs, row.diff));
        }
        out.write("coarea.csv", csv.as_bytes())?;
    }
    if cfg.output.wants(Format::Json) {
        out.write_json(
            "coarea.json",
            &CoareaReport { n_theta: grid.n_theta, n_cells: grid.n_cells, coarea: rows, isometry: iso },
        )?;
    }
    Ok(())
}
