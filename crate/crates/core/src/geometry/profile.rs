use super::{GeometryError, SphereGeometry};
use crate::fourier::FourierSeries;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Number of angles used to bound `μ` from below.
pub const DEFAULT_PROFILE_SAMPLES: usize = 4096;

/// Radial offsets of the shell `Ω = {x : c(φ(x)) < |x| − r < d(φ(x))}`.
///
/// Both offsets are trigonometric polynomials in the polar angle of `φ(x)`. On spheres of
/// dimension ≥ 2 only angle-independent profiles are meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessProfile {
    inner: FourierSeries,
    outer: FourierSeries,
    mu: FourierSeries,
    mu_min: f64,
}

impl ThicknessProfile {
    pub fn new(inner: FourierSeries, outer: FourierSeries) -> Result<Self, GeometryError> {
        let mu = outer.sub(&inner);
        let (theta, mu_min) = (0..DEFAULT_PROFILE_SAMPLES)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / DEFAULT_PROFILE_SAMPLES as f64;
                (th, mu.eval(th))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty sample set");
        if !(mu_min > 0.0) {
            return Err(GeometryError::InvalidProfile { theta, mu: mu_min });
        }
        Ok(Self { inner, outer, mu, mu_min })
    }

    /// `c ≡ inner`, `d ≡ outer`.
    pub fn constant(inner: f64, outer: f64) -> Result<Self, GeometryError> {
        Self::new(FourierSeries::constant(inner), FourierSeries::constant(outer))
    }

    /// Shell `r ≤ |x| ≤ r + μ(θ)` for a given thickness function (interpolated on `modes` harmonics).
    pub fn from_thickness(mu: impl Fn(f64) -> f64, modes: usize) -> Result<Self, GeometryError> {
        Self::new(FourierSeries::constant(0.0), FourierSeries::from_fn(mu, modes))
    }

    pub fn inner(&self) -> &FourierSeries {
        &self.inner
    }

    pub fn outer(&self) -> &FourierSeries {
        &self.outer
    }

    /// `μ = d − c` as a series in the angle.
    pub fn thickness(&self) -> &FourierSeries {
        &self.mu
    }

    /// Sampled lower bound of `μ`.
    pub fn mu_min(&self) -> f64 {
        self.mu_min
    }

    pub fn is_constant(&self) -> bool {
        self.inner.is_constant() && self.outer.is_constant()
    }

    pub fn c(&self, theta: f64) -> f64 {
        self.inner.eval(theta)
    }

    pub fn d(&self, theta: f64) -> f64 {
        self.outer.eval(theta)
    }

    pub fn mu(&self, theta: f64) -> f64 {
        self.mu.eval(theta)
    }

    /// Largest `|c|` and `|d|` (bounds from the coefficients).
    pub fn max_offsets(&self) -> (f64, f64) {
        (self.inner.abs_bound(), self.outer.abs_bound())
    }

    /// Angle parameter of a point; errors on non-constant profiles above the circle.
    pub fn angle_of(&self, geom: &SphereGeometry, p: &[f64]) -> Result<f64, GeometryError> {
        if geom.ambient_dim() == 2 {
            Ok(p[1].atan2(p[0]))
        } else if self.is_constant() {
            Ok(0.0)
        } else {
            Err(GeometryError::Unsupported(
                "angle-dependent profiles are only defined over the circle".into(),
            ))
        }
    }

    /// Section measure `μ(p) = H¹(Ω_p) = d(p) − c(p)`.
    pub fn section_measure(&self, geom: &SphereGeometry, p: &[f64]) -> Result<f64, GeometryError> {
        let theta = self.angle_of(geom, p)?;
        let mu = self.mu(theta);
        if mu <= 0.0 {
            return Err(GeometryError::InvalidProfile { theta, mu });
        }
        Ok(mu)
    }

    /// Whether `x` lies strictly inside the shell.
    pub fn contains(&self, geom: &SphereGeometry, x: &[f64]) -> Result<bool, GeometryError> {
        let p = geom.project(x)?;
        let theta = self.angle_of(geom, &p)?;
        let rho: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let t = rho - geom.radius();
        Ok(self.c(theta) < t && t < self.d(theta))
    }
}
