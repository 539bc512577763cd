//! Spectral gap certificate for `A_μ = −Δ − ⟨μ⁻¹∇μ, ∇·⟩` on round spheres.
//!
//! `A_μ` is a relatively bounded perturbation of the sphere Laplacian `−Δ`, whose spectrum
//! is known in closed form. The perturbation bound `C_μ = sup |∇μ|/μ` yields, through a
//! Neumann-series argument, intervals `I_ν` strictly between consecutive sphere eigenvalues
//! that contain no eigenvalue of `A_μ`. Those intervals force gaps of size comparable to
//! `λ^{1/2}` in the spectrum of `A_μ`.

use crate::geometry::{GeometryError, SphereGeometry, ThicknessProfile};
use crate::spectral::SpectralDecomposition;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Dense samples used for the supremum in `C_μ`.
pub const DEFAULT_C_MU_SAMPLES: usize = 8192;
/// Default finite horizon standing in for `limsup_{ν→∞}`.
pub const DEFAULT_HORIZON: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GapError {
    #[error("width bound never holds up to nu = {horizon}")]
    Nu0NotFound { horizon: usize },
    #[error("horizon must be at least 2, got {0}")]
    HorizonTooSmall(usize),
    #[error("eigenvalue {lambda} lies in certified interval I_{nu} = ]{lo}, {hi}[ beyond tolerance {tol}")]
    ExclusionViolated { nu: usize, lambda: f64, lo: f64, hi: f64, tol: f64 },
    #[error("numerical spectra are only available for n = 2, got n = {0}")]
    SpectrumDimension(usize),
    #[error("spectra of different lengths: {0} vs {1}")]
    SpectrumMismatch(usize, usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Distinct eigenvalue `λ̄_ν = ν(ν + n − 2)/r²` of `−Δ` on `S^{n−1}(r)`.
pub fn exact_eigenvalue(nu: usize, n: usize, r: f64) -> f64 {
    let nu = nu as f64;
    nu * (nu + n as f64 - 2.0) / (r * r)
}

fn binomial(top: i64, bottom: i64) -> u128 {
    if bottom < 0 || top < 0 || bottom > top {
        return 0;
    }
    let k = bottom.min(top - bottom) as u128;
    let top = top as u128;
    (0..k).fold(1u128, |acc, i| acc * (top - i) / (i + 1))
}

/// Dimension of the degree-`ν` spherical harmonics on `S^{n−1}`:
/// `C(ν+n−1, ν) − C(ν+n−3, ν−2)`.
pub fn multiplicity(nu: usize, n: usize) -> u128 {
    let (nu, n) = (nu as i64, n as i64);
    binomial(nu + n - 1, nu) - binomial(nu + n - 3, nu - 2)
}

/// First `count` entries of the repeated eigenvalue sequence of `−Δ` on `S^{n−1}(r)`.
pub fn repeated_spectrum(n: usize, r: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut nu = 0;
    while out.len() < count {
        let lam = exact_eigenvalue(nu, n, r);
        let mult = multiplicity(nu, n);
        for _ in 0..mult {
            if out.len() == count {
                break;
            }
            out.push(lam);
        }
        nu += 1;
    }
    out
}

/// Admissibility threshold `1/(4r)²` on `C_μ`.
pub fn admissibility_threshold(r: f64) -> f64 {
    1.0 / (16.0 * r * r)
}

/// `C_μ = sup |∇μ|/μ` together with the maximizing angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CMu {
    pub value: f64,
    pub argmax_theta: f64,
    pub threshold: f64,
    pub admissible: bool,
}

/// Supremum of `|μ′(s)|/μ(s)` over the circle by dense sampling plus one Newton step on
/// the sampled maximizer; zero for constant profiles on any sphere.
pub fn compute_c_mu(profile: &ThicknessProfile, geom: &SphereGeometry, samples: usize) -> Result<CMu, GeometryError> {
    let r = geom.radius();
    let threshold = admissibility_threshold(r);
    if profile.is_constant() {
        return Ok(CMu { value: 0.0, argmax_theta: 0.0, threshold, admissible: true });
    }
    if geom.ambient_dim() != 2 {
        return Err(GeometryError::Unsupported("C_mu for angle-dependent profiles needs n = 2".into()));
    }
    let mu = profile.thickness();
    // h(θ) = μ′/μ in the angle; |∇μ|/μ = |h|/r.
    let h = |t: f64| mu.derivative(1, t) / mu.eval(t);
    let (mut best_t, mut best) = (0.0, -1.0);
    for i in 0..samples.max(1) {
        let t = 2.0 * PI * i as f64 / samples.max(1) as f64;
        let v = h(t).abs();
        if v > best {
            best = v;
            best_t = t;
        }
    }
    // Newton on q = h² at the sampled maximizer.
    let (m0, m1, m2, m3) = (mu.eval(best_t), mu.derivative(1, best_t), mu.derivative(2, best_t), mu.derivative(3, best_t));
    let hv = m1 / m0;
    let h1 = m2 / m0 - hv * hv;
    let h2 = m3 / m0 - 3.0 * m1 * m2 / (m0 * m0) + 2.0 * hv * hv * hv;
    let q1 = 2.0 * hv * h1;
    let q2 = 2.0 * (h1 * h1 + hv * h2);
    if q2 < 0.0 {
        let step = -q1 / q2;
        let cand = best_t + step;
        if step.abs() < 2.0 * PI / samples.max(1) as f64 && h(cand).abs() > best {
            best = h(cand).abs();
            best_t = cand;
        }
    }
    let value = best / r;
    Ok(CMu { value, argmax_theta: best_t.rem_euclid(2.0 * PI), threshold, admissible: value <= threshold })
}

/// Resolvent bound: `δλ + C_μ²/(4δ) < (1 − δ)d`; false outside `λ > 0, d > 0, 0 < δ < 1`.
pub fn kato_invertibility(lambda: f64, dist: f64, c_mu: f64, delta: f64) -> bool {
    if !(lambda > 0.0 && dist > 0.0 && delta > 0.0 && delta < 1.0) {
        return false;
    }
    delta * lambda + c_mu * c_mu / (4.0 * delta) < (1.0 - delta) * dist
}

/// `λ > 1/(4r)²` and `d > λ^{1/2}/(2r)`.
pub fn sufficient_condition(lambda: f64, dist: f64, r: f64) -> bool {
    lambda > admissibility_threshold(r) && dist > lambda.sqrt() / (2.0 * r)
}

/// `δ = (8r)⁻¹ λ^{-1/2}`: with `C_μ ≤ 1/(4r)` this choice turns the sufficient condition
/// into the resolvent bound for every admissible `λ`.
pub fn default_delta(lambda: f64, r: f64) -> f64 {
    1.0 / (8.0 * r * lambda.sqrt())
}

fn root_term(lambda_bar: f64, r: f64) -> f64 {
    (1.0 / (64.0 * r.powi(4)) + lambda_bar / (4.0 * r * r)).sqrt()
}

/// Left margin `ξ_ν = 1/(8r²) + (1/(64r⁴) + λ̄_ν/(4r²))^{1/2}`.
pub fn xi(nu: usize, n: usize, r: f64) -> f64 {
    1.0 / (8.0 * r * r) + root_term(exact_eigenvalue(nu, n, r), r)
}

/// Right margin `η_ν = −1/(8r²) + (1/(64r⁴) + λ̄_ν/(4r²))^{1/2}`.
pub fn eta(nu: usize, n: usize, r: f64) -> f64 {
    -1.0 / (8.0 * r * r) + root_term(exact_eigenvalue(nu, n, r), r)
}

/// Open interval `I_ν = ]λ̄_ν + ξ_ν, λ̄_{ν+1} − η_{ν+1}[`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapInterval {
    pub nu: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GapInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Interior points `lo + (hi − lo)(i + 1)/(count + 1)`.
    pub fn partition(&self, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| self.lo + self.width() * (i + 1) as f64 / (count + 1) as f64)
            .collect()
    }
}

/// `I_ν` if nonempty. Requires `ν ≥ 1`.
pub fn gap_interval(nu: usize, n: usize, r: f64) -> Option<GapInterval> {
    assert!(nu >= 1, "gap intervals start at nu = 1");
    let lo = exact_eigenvalue(nu, n, r) + xi(nu, n, r);
    let hi = exact_eigenvalue(nu + 1, n, r) - eta(nu + 1, n, r);
    (lo < hi).then_some(GapInterval { nu, lo, hi })
}

/// Whether `|I_ν| ≥ (λ̄_{ν+1} − λ̄_ν)/3`.
pub fn width_bound_holds(nu: usize, n: usize, r: f64) -> bool {
    let width = exact_eigenvalue(nu + 1, n, r) - eta(nu + 1, n, r) - exact_eigenvalue(nu, n, r) - xi(nu, n, r);
    width >= (exact_eigenvalue(nu + 1, n, r) - exact_eigenvalue(nu, n, r)) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Nu0Report {
    pub nu0: usize,
    /// `(1/64r⁴ + λ̄_{ν+1}/4r²)^{1/2} − (1/64r⁴ + λ̄_ν/4r²)^{1/2}` at the horizon.
    pub limit_value: f64,
    /// Its limit `1/(2r²)`.
    pub limit_target: f64,
}

/// Smallest `ν₀ ≥ 1` such that the width bound holds for all `ν₀ ≤ ν ≤ horizon`.
pub fn find_nu0(n: usize, r: f64, horizon: usize) -> Result<Nu0Report, GapError> {
    if horizon < 2 {
        return Err(GapError::HorizonTooSmall(horizon));
    }
    let mut nu0 = None;
    for nu in (1..=horizon).rev() {
        if width_bound_holds(nu, n, r) {
            nu0 = Some(nu);
        } else {
            break;
        }
    }
    let nu0 = nu0.ok_or(GapError::Nu0NotFound { horizon })?;
    let limit_value = root_term(exact_eigenvalue(horizon + 1, n, r), r) - root_term(exact_eigenvalue(horizon, n, r), r);
    Ok(Nu0Report { nu0, limit_value, limit_target: 1.0 / (2.0 * r * r) })
}

/// Eigenvalues of a discretized `A_μ` with an absolute tolerance per eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalSpectrum {
    pub eigenvalues: Vec<f64>,
    pub tolerance: Vec<f64>,
}

impl NumericalSpectrum {
    /// Tolerance `3·e_j` where `e_j = |λ_j^fine − λ_j^coarse|/(2^order − 1)` estimates the
    /// discretization error of the fine spectrum after one grid halving.
    pub fn from_refinement(
        fine: &SpectralDecomposition,
        coarse: &SpectralDecomposition,
        order: i32,
    ) -> Result<Self, GapError> {
        let len = fine.len().min(coarse.len());
        if len == 0 {
            return Err(GapError::SpectrumMismatch(fine.len(), coarse.len()));
        }
        let factor = 2f64.powi(order) - 1.0;
        let eigenvalues = fine.eigenvalues()[..len].to_vec();
        let tolerance = fine.eigenvalues()[..len]
            .iter()
            .zip(coarse.eigenvalues())
            .map(|(f, c)| 3.0 * (f - c).abs() / factor)
            .collect();
        Ok(Self { eigenvalues, tolerance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Largest `ν` for which intervals are built.
    pub horizon: usize,
    pub c_mu_samples: usize,
    /// Intervals `ν₀ ≤ ν ≤ exclusion_nu_max` are checked against a numerical spectrum.
    pub exclusion_nu_max: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { horizon: DEFAULT_HORIZON, c_mu_samples: DEFAULT_C_MU_SAMPLES, exclusion_nu_max: 30 }
    }
}

/// Outcome of testing a numerical spectrum against the certified intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExclusionReport {
    pub nu_min: usize,
    pub nu_max: usize,
    /// `(ν, λ)` pairs found inside `I_ν` beyond tolerance.
    pub violations: Vec<(usize, f64)>,
    /// Smallest distance of a checked eigenvalue to the interior of an interval, minus its
    /// tolerance; negative values are violations.
    pub min_margin: f64,
    /// Tail maximum of `(λ_{j+1} − λ_j)/λ_j^{1/2}` over the checked eigenvalues.
    pub ratio_proxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCertificate {
    pub n: usize,
    pub r: f64,
    pub c_mu: f64,
    pub admissible: bool,
    pub nu0: usize,
    #[serde(serialize_with = "intervals_as_pairs")]
    pub intervals: Vec<GapInterval>,
    /// `|I_ν| / (λ̄_ν + ξ_ν)^{1/2}` for each stored interval.
    pub ratios: Vec<f64>,
    /// `2/(3r)`.
    pub ratio_bound: f64,
    /// Tail maximum of `ratios`.
    #[serde(skip)]
    pub ratio_proxy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<ExclusionReport>,
}

fn intervals_as_pairs<S: serde::Serializer>(v: &[GapInterval], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for iv in v {
        seq.serialize_element(&[iv.lo, iv.hi])?;
    }
    seq.end()
}

impl GapCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Maximum over the upper half of a sequence.
fn tail_max(values: &[f64]) -> f64 {
    values[values.len() / 2..].iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Builds the certificate; with a numerical spectrum (circle only) also checks that no
/// eigenvalue falls inside a certified interval.
pub fn certify(
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    spectrum: Option<&NumericalSpectrum>,
    opts: CertifyOptions,
) -> Result<GapCertificate, GapError> {
    let (n, r) = (geom.ambient_dim(), geom.radius());
    let c_mu = compute_c_mu(profile, geom, opts.c_mu_samples)?;
    let nu0 = find_nu0(n, r, opts.horizon)?.nu0;
    let mut intervals = Vec::new();
    let mut ratios = Vec::new();
    for nu in 1..=opts.horizon {
        if let Some(iv) = gap_interval(nu, n, r) {
            ratios.push(iv.width() / iv.lo.sqrt());
            intervals.push(iv);
        }
    }
    let ratio_proxy = if ratios.is_empty() { 0.0 } else { tail_max(&ratios) };

    let exclusion = match spectrum {
        None => None,
        Some(_) if n != 2 => return Err(GapError::SpectrumDimension(n)),
        Some(spec) => {
            let report = check_exclusion(&intervals, spec, nu0, opts.exclusion_nu_max);
            if c_mu.admissible {
                if let Some(&(nu, lambda)) = report.violations.first() {
                    let iv = intervals.iter().find(|iv| iv.nu == nu).expect("interval exists");
                    let j = spec.eigenvalues.iter().position(|&l| l == lambda).unwrap_or(0);
                    return Err(GapError::ExclusionViolated { nu, lambda, lo: iv.lo, hi: iv.hi, tol: spec.tolerance[j] });
                }
            }
            Some(report)
        }
    };

    Ok(GapCertificate {
        n,
        r,
        c_mu: c_mu.value,
        admissible: c_mu.admissible,
        nu0,
        intervals,
        ratios,
        ratio_bound: 2.0 / (3.0 * r),
        ratio_proxy,
        exclusion,
    })
}

fn check_exclusion(intervals: &[GapInterval], spec: &NumericalSpectrum, nu_min: usize, nu_max: usize) -> ExclusionReport {
    let checked: Vec<&GapInterval> = intervals.iter().filter(|iv| iv.nu >= nu_min && iv.nu <= nu_max).collect();
    let top = checked.last().map(|iv| iv.hi).unwrap_or(0.0);
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    for (lam, tol) in spec.eigenvalues.iter().zip(&spec.tolerance) {
        for iv in &checked {
            // Distance to the complement of the interval, minus the tolerance.
            let inside = (lam - iv.lo).min(iv.hi - lam);
            let margin = -inside - tol;
            if inside > 0.0 || margin < min_margin {
                min_margin = min_margin.min(margin);
            }
            if lam - tol > iv.lo && lam + tol < iv.hi {
                violations.push((iv.nu, *lam));
            }
        }
    }
    // Consecutive-gap ratios for the eigenvalues up to the last checked interval.
    let resolved: Vec<f64> = spec.eigenvalues.iter().copied().filter(|&l| l <= top).collect();
    let ratios: Vec<f64> = resolved
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| (w[1] - w[0]) / w[0].sqrt())
        .collect();
    let ratio_proxy = if ratios.is_empty() { 0.0 } else { tail_max(&ratios) };
    ExclusionReport { nu_min, nu_max, violations, min_margin, ratio_proxy }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_eigenvalue_examples() {
        assert_eq!(exact_eigenvalue(3, 2, 1.0), 9.0);
        assert_eq!(exact_eigenvalue(0, 5, 0.3), 0.0);
        assert_eq!(exact_eigenvalue(2, 3, 2.0), 1.5);
    }

    #[test]
    fn multiplicity_examples() {
        for n in 2..7 {
            assert_eq!(multiplicity(0, n), 1);
        }
        for nu in 1..20 {
            assert_eq!(multiplicity(nu, 2), 2);
            assert_eq!(multiplicity(nu, 3), 2 * nu as u128 + 1);
        }
        assert_eq!(multiplicity(4, 2), 2);
        assert_eq!(multiplicity(2, 3), 5);
        // S³: (ν + 1)²
        assert_eq!(multiplicity(3, 4), 16);
    }

    /// Dimension of harmonic homogeneous polynomials of degree `nu` in `n` variables, by
    /// the rank of the Laplacian map from degree-ν to degree-(ν−2) monomial coefficients.
    fn harmonic_dimension(nu: usize, n: usize) -> usize {
        fn monomials(deg: usize, n: usize) -> Vec<Vec<usize>> {
            if n == 1 {
                return vec![vec![deg]];
            }
            (0..=deg)
                .flat_map(|a| {
                    monomials(deg - a, n - 1).into_iter().map(move |mut rest| {
                        rest.insert(0, a);
                        rest
                    })
                })
                .collect()
        }
        let src = monomials(nu, n);
        if nu < 2 {
            return src.len();
        }
        let dst = monomials(nu - 2, n);
        let mut lap = nalgebra::DMatrix::<f64>::zeros(dst.len(), src.len());
        for (j, m) in src.iter().enumerate() {
            for var in 0..n {
                if m[var] >= 2 {
                    let mut t = m.clone();
                    t[var] -= 2;
                    let i = dst.iter().position(|d| *d == t).unwrap();
                    lap[(i, j)] += (m[var] * (m[var] - 1)) as f64;
                }
            }
        }
        src.len() - lap.rank(1e-9)
    }

    #[test]
    fn multiplicity_matches_harmonic_polynomial_count() {
        for n in 2..6 {
            for nu in 0..7 {
                assert_eq!(multiplicity(nu, n) as usize, harmonic_dimension(nu, n), "nu={nu} n={n}");
            }
        }
    }

    #[test]
    fn repeated_spectrum_examples() {
        assert_eq!(repeated_spectrum(2, 1.0, 5), vec![0.0, 1.0, 1.0, 4.0, 4.0]);
        assert_eq!(repeated_spectrum(3, 1.0, 5), vec![0.0, 2.0, 2.0, 2.0, 6.0]);
        assert_eq!(repeated_spectrum(4, 2.0, 1), vec![0.0]);
    }

    #[test]
    fn c_mu_examples() {
        let geom = SphereGeometry::new(2, 1.0).unwrap();
        let flat = ThicknessProfile::constant(-0.1, 0.1).unwrap();
        let c = compute_c_mu(&flat, &geom, 1024).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.admissible);

        for (a, admissible) in [(0.05, true), (0.1, false)] {
            let prof = ThicknessProfile::from_thickness(|t: f64| (a * t.sin()).exp(), 16).unwrap();
            let c = compute_c_mu(&prof, &geom, DEFAULT_C_MU_SAMPLES).unwrap();
            // |μ′/μ| = |a cos s|, sampled densely.
            let oracle = (0..100_000)
                .map(|i| (a * (2.0 * PI * i as f64 / 100_000.0).cos()).abs())
                .fold(0.0, f64::max);
            assert!((c.value - oracle).abs() < 1e-12, "a={a}: {} vs {oracle}", c.value);
            assert!((c.value - a).abs() < 1e-12);
            assert_eq!(c.admissible, admissible);
            assert_eq!(c.threshold, 0.0625);
        }
    }

    #[test]
    fn c_mu_scales_with_radius() {
        let geom = SphereGeometry::new(2, 2.0).unwrap();
        let prof = ThicknessProfile::from_thickness(|t: f64| (0.05 * t.sin()).exp(), 16).unwrap();
        let c = compute_c_mu(&prof, &geom, 4096).unwrap();
        assert!((c.value - 0.025).abs() < 1e-12);
    }

    #[test]
    fn kato_examples() {
        assert!(kato_invertibility(5.0, 1e-3, 0.0, 1e-9));
        assert!(sufficient_condition(12.25, 2.25, 1.0));
        assert!(!sufficient_condition(9.1, 0.1, 1.0));
        assert!(!sufficient_condition(0.05, 10.0, 1.0));
        assert!(!kato_invertibility(1.0, 1.0, 0.0, 1.5));
    }

    #[test]
    fn default_delta_realizes_the_sufficient_condition() {
        // Wherever the sufficient condition holds and C_μ ≤ 1/(4r)², the resolvent bound holds
        // with δ = (8r)⁻¹λ^{-1/2}.
        for r in [0.5, 1.0, 2.0] {
            let c = admissibility_threshold(r);
            for i in 1..200 {
                let lambda = admissibility_threshold(r) * (1.0 + 0.37 * i as f64).powi(2);
                let dist = lambda.sqrt() / (2.0 * r) * 1.0001;
                assert!(sufficient_condition(lambda, dist, r));
                assert!(kato_invertibility(lambda, dist, c, default_delta(lambda, r)), "r={r} lambda={lambda}");
            }
        }
        // The alternative δ = λ^{1/2}/(8r) leaves the bound unsatisfied at a sample point.
        let lambda = 12.25;
        assert!(!kato_invertibility(lambda, 2.25, 0.0625, lambda.sqrt() / 8.0));
        assert!(kato_invertibility(lambda, 2.25, 0.0625, default_delta(lambda, 1.0)));
    }

    #[test]
    fn interval_examples() {
        let i3 = gap_interval(3, 2, 1.0).unwrap();
        // ξ₃ = 1/8 + √(1/64 + 9/4), η₄ = −1/8 + √(1/64 + 4)
        let xi3 = 0.125 + (1.0f64 / 64.0 + 2.25).sqrt();
        let eta4 = -0.125 + (1.0f64 / 64.0 + 4.0).sqrt();
        assert!((xi(3, 2, 1.0) - xi3).abs() < 1e-15 && (xi3 - 1.63020).abs() < 1e-5);
        assert!((eta(4, 2, 1.0) - eta4).abs() < 1e-15 && (eta4 - 1.87890).abs() < 1e-5);
        assert!((i3.lo - 10.63020).abs() < 1e-5 && (i3.hi - 14.12110).abs() < 1e-5);
        let i1 = gap_interval(1, 2, 1.0).unwrap();
        assert!((i1.lo - 1.64039).abs() < 1e-5 && (i1.hi - 3.11722).abs() < 1e-5);
        // The endpoints sit exactly on the sufficient-condition boundary.
        assert!(!sufficient_condition(i3.lo - 1e-9, i3.lo - 1e-9 - 9.0, 1.0));
        for lam in i3.partition(101) {
            assert!(sufficient_condition(lam, (lam - 9.0).min(16.0 - lam), 1.0));
        }
    }

    #[test]
    fn intervals_widen_to_a_fixed_fraction_for_large_radius() {
        for r in [1.0, 4.0, 16.0] {
            let iv = gap_interval(5, 2, r).unwrap();
            let gap = exact_eigenvalue(6, 2, r) - exact_eigenvalue(5, 2, r);
            assert!(iv.width() >= gap / 3.0);
        }
    }

    #[test]
    fn nu0_examples() {
        let rep = find_nu0(2, 1.0, 200).unwrap();
        assert_eq!(rep.nu0, 1);
        let w1 = gap_interval(1, 2, 1.0).unwrap().width();
        assert!((w1 - 1.47683).abs() < 1e-5);
        assert!(((rep.limit_value - 0.5) / 0.5).abs() < 0.01);
        assert!(find_nu0(3, 1.0, 200).unwrap().nu0 <= 5);
        assert_eq!(find_nu0(2, 1.0, 1), Err(GapError::HorizonTooSmall(1)));
    }

    #[test]
    fn constant_profile_certificate() {
        let geom = SphereGeometry::new(3, 1.0).unwrap();
        let prof = ThicknessProfile::constant(0.0, 0.3).unwrap();
        let cert = certify(&prof, &geom, None, CertifyOptions::default()).unwrap();
        assert!(cert.admissible);
        assert_eq!(cert.c_mu, 0.0);
        assert!(cert.intervals.iter().all(|iv| iv.lo < iv.hi));
        for (iv, ratio) in cert.intervals.iter().zip(&cert.ratios) {
            if iv.nu >= cert.nu0 {
                let gap = exact_eigenvalue(iv.nu + 1, 3, 1.0) - exact_eigenvalue(iv.nu, 3, 1.0);
                assert!(*ratio >= gap / 3.0 / iv.lo.sqrt() - 1e-12);
            }
        }
        assert!(cert.ratio_proxy >= cert.ratio_bound);
        let json: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
        for key in ["n", "r", "c_mu", "admissible", "nu0", "intervals", "ratios", "ratio_bound"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["intervals"][0].as_array().unwrap().len(), 2);
    }

    #[test]
    fn inadmissible_profile_is_flagged() {
        let geom = SphereGeometry::new(2, 1.0).unwrap();
        let prof = ThicknessProfile::from_thickness(|t: f64| (0.5 * t.sin()).exp(), 24).unwrap();
        let cert = certify(&prof, &geom, None, CertifyOptions::default()).unwrap();
        assert!(!cert.admissible);
        assert!(!cert.intervals.is_empty());
    }

    #[test]
    fn exclusion_violation_is_reported() {
        let geom = SphereGeometry::new(2, 1.0).unwrap();
        let prof = ThicknessProfile::constant(0.0, 1.0).unwrap();
        let mid = gap_interval(3, 2, 1.0).map(|iv| 0.5 * (iv.lo + iv.hi)).unwrap();
        let spec = NumericalSpectrum { eigenvalues: vec![0.0, 1.0, 1.0, mid, 16.0], tolerance: vec![1e-3; 5] };
        let err = certify(&prof, &geom, Some(&spec), CertifyOptions::default()).unwrap_err();
        assert!(matches!(err, GapError::ExclusionViolated { nu: 3, .. }));
        let s3 = SphereGeometry::new(3, 1.0).unwrap();
        assert_eq!(certify(&prof, &s3, Some(&spec), CertifyOptions::default()), Err(GapError::SpectrumDimension(3)));
    }
}
