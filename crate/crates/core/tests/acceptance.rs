//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits
//! non-zero if any failed.

use squeeze_core::fourier::FourierSeries;
use squeeze_core::gap::{
    certify, exact_eigenvalue, find_nu0, gap_interval, sufficient_condition, width_bound_holds, CertifyOptions,
    GapError, NumericalSpectrum,
};
use squeeze_core::geometry::{coarea_check, lift, ShellGrid, SphereGeometry, ThicknessProfile};
use squeeze_core::manifold::{
    compare_reduced_fields, invariance_residual, lp_graph_eval, prepare_nonlinearity, CompareOptions, ManifoldError,
    ModalBasis, PrepareOptions, ReducedModel,
};
use squeeze_core::nonlinearity::{ChafeeInfante, Cubic};
use squeeze_core::spectral::{assemble_circle_operator, eigenvalues};
use squeeze_core::thin::{convergence_study, ThinGrid};
use nalgebra::DVector;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn circle() -> SphereGeometry {
    SphereGeometry::new(2, 1.0).unwrap()
}

fn exact_sphere_spectrum() -> Outcome {
    let prof = ThicknessProfile::constant(0.0, 1.0).unwrap();
    let mut worst = Vec::new();
    let mut multiplicity_ok = true;
    for n in [128, 256, 512, 1024] {
        let op = assemble_circle_operator(&prof, &circle(), n).map_err(|e| e.to_string())?;
        let spec = eigenvalues(&op, 21).map_err(|e| e.to_string())?;
        let vals = spec.eigenvalues();
        let sizes = spec.cluster_sizes();
        multiplicity_ok &= sizes.len() == 11 && sizes[0] == 1 && sizes[1..].iter().all(|&s| s == 2);
        let err = (1..=10)
            .flat_map(|nu| [2 * nu - 1, 2 * nu].map(|j| (vals[j] - (nu * nu) as f64).abs() / (nu * nu) as f64))
            .fold(0.0, f64::max);
        worst.push(err);
    }
    let ratios: Vec<f64> = worst.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = multiplicity_ok && worst[3] <= 1e-3 && ratios.iter().all(|r| (3.5..=4.5).contains(r));
    check(ok, format!("rel err at N=1024 {:.3e}, Richardson ratios {:.3?}, multiplicity 2: {multiplicity_ok}", worst[3], ratios))
}

fn gap_asymptotics() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [2, 3] {
        for r in [0.5, 1.0, 2.0] {
            let (lo, hi) = (exact_eigenvalue(100, n, r), exact_eigenvalue(101, n, r));
            let ratio = (hi - lo) / lo.sqrt();
            worst = worst.max((ratio - 2.0 / r).abs() / (2.0 / r));
        }
    }
    check(worst <= 0.02, format!("largest relative deviation from 2/r at nu=100: {worst:.3e}"))
}

fn interval_certification() -> Outcome {
    let (n, r) = (2, 1.0);
    let nu0 = find_nu0(n, r, 200).map_err(|e| e.to_string())?.nu0;
    let mut failures = Vec::new();
    for nu in 1..=50 {
        let Some(iv) = gap_interval(nu, n, r) else {
            failures.push(format!("I_{nu} empty"));
            continue;
        };
        let (below, above) = (exact_eigenvalue(nu, n, r), exact_eigenvalue(nu + 1, n, r));
        let bad = iv.partition(101).into_iter().filter(|&l| !sufficient_condition(l, (l - below).min(above - l), r)).count();
        if bad > 0 {
            failures.push(format!("I_{nu}: {bad} partition points fail"));
        }
        if nu >= nu0 && !width_bound_holds(nu, n, r) {
            failures.push(format!("I_{nu} narrower than a third of the gap"));
        }
    }
    let ok = failures.is_empty() && nu0 <= 5;
    check(ok, format!("nu0 = {nu0}, failures: {failures:?}"))
}

fn exclusion_property() -> Outcome {
    let geom = circle();
    let prof = ThicknessProfile::from_thickness(|s| (0.05 * s.sin()).exp(), 16).map_err(|e| e.to_string())?;
    let count = 70;
    let fine = eigenvalues(&assemble_circle_operator(&prof, &geom, 1024).map_err(|e| e.to_string())?, count)
        .map_err(|e| e.to_string())?;
    let coarse = eigenvalues(&assemble_circle_operator(&prof, &geom, 512).map_err(|e| e.to_string())?, count)
        .map_err(|e| e.to_string())?;
    let spec = NumericalSpectrum::from_refinement(&fine, &coarse, 2).map_err(|e| e.to_string())?;
    let cert = match certify(&prof, &geom, Some(&spec), CertifyOptions::default()) {
        Ok(c) => c,
        Err(e @ GapError::ExclusionViolated { .. }) => return Err(e.to_string()),
        Err(e) => return Err(e.to_string()),
    };
    let ex = cert.exclusion.as_ref().expect("spectrum supplied");
    let target = 0.95 * 2.0 / 3.0;
    let ok = cert.admissible
        && (cert.c_mu - 0.05).abs() < 1e-6
        && ex.violations.is_empty()
        && ex.nu_max == 30
        && ex.ratio_proxy > target;
    check(
        ok,
        format!(
            "C_mu {:.6}, nu {}..{}, violations {}, min margin {:.3}, ratio proxy {:.4} (target {:.4})",
            cert.c_mu,
            ex.nu_min,
            ex.nu_max,
            ex.violations.len(),
            ex.min_margin,
            ex.ratio_proxy,
            target
        ),
    )
}

fn profiles() -> Vec<ThicknessProfile> {
    vec![
        ThicknessProfile::constant(-0.1, 0.1).unwrap(),
        ThicknessProfile::from_thickness(|t| 0.2 + 0.05 * t.cos(), 4).unwrap(),
        ThicknessProfile::new(
            FourierSeries::new(vec![-0.05], vec![0.0, 0.0, 0.02]),
            FourierSeries::new(vec![0.1, 0.03], vec![0.0, 0.01]),
        )
        .unwrap(),
    ]
}

fn test_functions() -> Vec<fn(f64) -> f64> {
    vec![
        |t| t.cos(),
        |t| 0.5 + (3.0 * t).sin(),
        |t| t.cos().exp(),
        |t| 1.0 / (1.5 + t.sin()),
        |t| (2.0 * t).cos() * t.sin(),
    ]
}

/// Errors halve per doubling, or already sit at the round-off floor.
fn halving(errs: &[f64]) -> bool {
    errs.windows(2).all(|w| w[1] <= (w[0] / 2.0).max(1e-12))
}

fn isometry() -> Outcome {
    let geom = circle();
    let levels = [32usize, 64, 128, 256, 512];
    let (mut worst_b, mut worst_a) = (0.0f64, 0.0f64);
    let mut orders_ok = true;
    for prof in profiles() {
        for v in test_functions() {
            let forms = |n: usize| {
                let grid = ShellGrid::new(n, 2);
                let samples: Vec<f64> = grid.angles().into_iter().map(v).collect();
                lift(&samples, grid, &geom).unwrap().forms(&prof, &geom)
            };
            let reference = forms(4096);
            let (mut eb, mut ea) = (Vec::new(), Vec::new());
            for &n in &levels {
                let f = forms(n);
                eb.push((f.b0 - reference.b_mu).abs());
                ea.push((f.a0 - reference.a_mu).abs());
                if n == 512 {
                    worst_b = worst_b.max((f.b0 - f.b_mu).abs());
                    worst_a = worst_a.max((f.a0 - f.a_mu).abs());
                }
            }
            orders_ok &= halving(&eb) && halving(&ea);
        }
    }
    let ok = worst_b <= 1e-6 && worst_a <= 1e-5 && orders_ok;
    check(ok, format!("|b0 - b_mu| {worst_b:.2e}, |a0 - a_mu| {worst_a:.2e} at 512 points, halving per doubling: {orders_ok}"))
}

fn coarea_identity() -> Outcome {
    let geom = circle();
    let annulus = ThicknessProfile::constant(0.0, 0.2).unwrap();
    let grid = ShellGrid::new(256, 2);
    let one = coarea_check(|_| 1.0, &annulus, &geom, grid).map_err(|e| e.to_string())?;
    let radial = coarea_check(|x| (x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0, &annulus, &geom, grid)
        .map_err(|e| e.to_string())?;
    // Closed forms on r ≤ |x| ≤ r + 0.2: 2π·0.2 and 2π·0.02.
    let analytic_ok = one.diff <= 1e-8
        && (one.lhs - 0.4 * PI).abs() <= 1e-8
        && radial.diff <= 1e-8
        && (radial.lhs - 0.04 * PI).abs() <= 1e-8;

    // Band-limited integrand on a varying shell; the smooth exponential converges spectrally.
    let wavy = profiles().remove(2);
    let poly = |x: &[f64]| x[0] * x[0] - 0.5 * x[0] * x[1] + x[1].powi(3);
    let poly_res = coarea_check(poly, &wavy, &geom, ShellGrid::new(64, 2)).map_err(|e| e.to_string())?;
    let smooth = |x: &[f64]| (x[0] + 0.5 * x[1]).exp();
    let diffs: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&n| coarea_check(smooth, &wavy, &geom, ShellGrid::new(n, 2)).map(|r| r.diff))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let generic_ok = poly_res.diff <= 1e-12 && halving(&diffs);
    check(
        analytic_ok && generic_ok,
        format!(
            "g=1 diff {:.1e}, g=|x|-r diff {:.1e}, polynomial diff {:.1e}, exponential diffs {:?}",
            one.diff, radial.diff, poly_res.diff, diffs.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn thin_convergence() -> Outcome {
    let geom = circle();
    let eps = [0.2, 0.1, 0.05, 0.025];
    let cases = [
        ("constant", ThicknessProfile::constant(0.0, 0.2).unwrap()),
        ("cosine", ThicknessProfile::from_thickness(|t| 0.2 + 0.05 * t.cos(), 4).unwrap()),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, prof) in cases {
        let table = convergence_study(&prof, &geom, &eps, 10, ThinGrid::default()).map_err(|e| e.to_string())?;
        let mut last: f64 = 0.0;
        for j in 2..=10 {
            let errs = table.errors(j);
            ok &= errs.windows(2).all(|w| w[1] < w[0]);
            last = last.max(*errs.last().unwrap());
        }
        ok &= last <= 0.05;
        lines.push(format!("{name}: final max rel err {last:.3e}"));
    }
    check(ok, format!("{}, strictly decreasing: {ok}", lines.join("; ")))
}

fn manifold_properties() -> Outcome {
    let geom = circle();
    let prof = ThicknessProfile::constant(0.0, 1.0).unwrap();
    let op = assemble_circle_operator(&prof, &geom, 128).map_err(|e| e.to_string())?;
    let basis = ModalBasis::from_limit(&op, 31).map_err(|e| e.to_string())?;
    let nl = prepare_nonlinearity(Arc::new(ChafeeInfante { lambda: 2.0 }), 1.0, 2.0, &basis, PrepareOptions::default())
        .map_err(|e| e.to_string())?;
    let model = ReducedModel::new(basis, 3, None).map_err(|e| e.to_string())?;
    // Sample points where the gap dominates the local slope: |G'(Eξ)| < λ₄ − λ₃ pointwise.
    let samples = [
        vec![1.0, 0.0, 0.0],
        vec![2.0, 0.5, -0.25],
        vec![0.5, -1.0, 1.0],
        vec![-1.5, 0.3, 0.8],
        vec![0.2, 0.2, -1.8],
    ];
    let mut slope: f64 = 0.0;
    for xi in &samples {
        let mut a = DVector::zeros(model.basis().len());
        a.rows_mut(0, 3).copy_from_slice(xi);
        let u = model.basis().synthesize(&a);
        slope = u.iter().map(|&x| nl.scalar().derivative(x).abs()).fold(slope, f64::max);
    }
    if !(slope < model.gap()) {
        return Err(format!("sample slope {slope:.3} not below the gap {:.3}", model.gap()));
    }
    let mut tangent = true;
    let mut contraction: f64 = 0.0;
    for xi in &samples {
        let pt = lp_graph_eval(xi, &model, &nl).map_err(|e| e.to_string())?;
        tangent &= pt.coefficients()[..3] == xi[..];
        contraction = contraction.max(pt.contraction());
    }
    let transient = model.params().horizon;
    let series = invariance_residual(&model, &nl, &samples[1], 10.0, 21, 0.005).map_err(|e| e.to_string())?;
    let residual = series.max_after(transient);

    let opts = CompareOptions::default();
    let coarse = compare_reduced_fields(&prof, &geom, &nl, &model, 0.1, &samples, opts).map_err(|e| e.to_string())?;
    let fine = compare_reduced_fields(&prof, &geom, &nl, &model, 0.05, &samples, opts).map_err(|e| e.to_string())?;
    let factors: Vec<f64> = coarse.rows.iter().zip(&fine.rows).map(|(c, f)| c.discrepancy / f.discrepancy).collect();
    let factor = factors.iter().copied().fold(f64::INFINITY, f64::min);

    let ok = tangent && contraction < 0.9 && residual <= 1e-2 && factor >= 1.5;
    check(
        ok,
        format!(
            "tangency exact: {tangent}, contraction {contraction:.3}, residual after t={transient:.2} {residual:.2e}, \
             discrepancy factors {factors:.2?}, sample slope {slope:.2} < gap {:.2}, R {:.3}, L {:.3}",
            model.gap(),
            nl.radius(),
            nl.lipschitz()
        ),
    )
}

fn dissipativity_guard() -> Outcome {
    let prof = ThicknessProfile::constant(0.0, 1.0).unwrap();
    let op = assemble_circle_operator(&prof, &circle(), 64).map_err(|e| e.to_string())?;
    let basis = ModalBasis::from_limit(&op, 9).map_err(|e| e.to_string())?;
    let opts = PrepareOptions::default();
    let ci = prepare_nonlinearity(Arc::new(ChafeeInfante { lambda: 2.0 }), 1.0, 2.0, &basis, opts);
    let cubic = prepare_nonlinearity(Arc::new(Cubic), 1.0, 2.0, &basis, opts);
    let rejected = matches!(cubic, Err(ManifoldError::NotDissipative { .. }));
    let detail = match &cubic {
        Err(e) => e.to_string(),
        Ok(_) => "accepted".into(),
    };
    check(ci.is_ok() && rejected, format!("Chafee-Infante accepted: {}, u^3: {detail}", ci.is_ok()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact sphere spectrum", exact_sphere_spectrum),
        ("gap asymptotics", gap_asymptotics),
        ("interval certification", interval_certification),
        ("exclusion property", exclusion_property),
        ("isometry", isometry),
        ("coarea identity", coarea_identity),
        ("thin-domain spectral convergence", thin_convergence),
        ("inertial-manifold properties", manifold_properties),
        ("dissipativity guard", dissipativity_guard),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
