use super::{GeometryError, SphereGeometry, ThicknessProfile};
use crate::fourier::spectral_derivative;
use nalgebra::DVector;
use std::f64::consts::PI;

/// Gauss–Legendre rule on `[0, 1]` with 2 or 4 points.
pub fn gauss_legendre(points: usize) -> (&'static [f64], &'static [f64]) {
    const X2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
    const W2: [f64; 2] = [0.5, 0.5];
    const X4: [f64; 4] = [
        0.069_431_844_202_973_71,
        0.330_009_478_207_571_9,
        0.669_990_521_792_428_1,
        0.930_568_155_797_026_3,
    ];
    const W4: [f64; 4] = [
        0.173_927_422_568_726_9,
        0.326_072_577_431_273_1,
        0.326_072_577_431_273_1,
        0.173_927_422_568_726_9,
    ];
    match points {
        2 => (&X2, &W2),
        4 => (&X4, &W4),
        _ => panic!("only 2- and 4-point Gauss rules are tabulated"),
    }
}

/// Tensor grid on a circular shell: `n_theta` uniform angles (trapezoid) times
/// `n_cells` radial cells carrying a 4-point Gauss rule each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellGrid {
    pub n_theta: usize,
    pub n_cells: usize,
}

impl ShellGrid {
    pub fn new(n_theta: usize, n_cells: usize) -> Self {
        assert!(n_theta >= 3 && n_cells >= 1);
        Self { n_theta, n_cells }
    }

    pub fn angle(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n_theta as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_theta).map(|i| self.angle(i)).collect()
    }

    /// Visit `(angle index, radius, weight)` for `∫ f(ρ, θ) dρ dθ` over the shell,
    /// where the weight already includes `dθ` and `dρ` but not the polar factor `ρ`.
    fn for_each_radial_node(
        &self,
        geom: &SphereGeometry,
        profile: &ThicknessProfile,
        mut f: impl FnMut(usize, f64, f64),
    ) {
        let (xs, ws) = gauss_legendre(4);
        let dtheta = 2.0 * PI / self.n_theta as f64;
        for i in 0..self.n_theta {
            let th = self.angle(i);
            let lo = geom.radius() + profile.c(th);
            let hi = geom.radius() + profile.d(th);
            let h = (hi - lo) / self.n_cells as f64;
            for cell in 0..self.n_cells {
                let a = lo + cell as f64 * h;
                for (x, w) in xs.iter().zip(ws) {
                    f(i, a + x * h, w * h * dtheta);
                }
            }
        }
    }
}

fn require_circle(geom: &SphereGeometry) -> Result<(), GeometryError> {
    if geom.ambient_dim() != 2 {
        return Err(GeometryError::Unsupported("shell quadrature is implemented for n = 2".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoareaResult {
    /// `∫_Ω J_0 g dx`.
    pub lhs: f64,
    /// `∫_M ∫_{Ω_p} g dH¹ dH¹(p)`.
    pub rhs: f64,
    pub diff: f64,
}

/// Evaluates both sides of the coarea identity for the shell over the circle.
///
/// The volume side integrates `J_0·g` in polar coordinates, with `J_0` taken from the
/// projection geometry; the manifold side integrates `g` along each radial fiber and then
/// over the circle in arc length.
pub fn coarea_check(
    g: impl Fn(&[f64]) -> f64,
    profile: &ThicknessProfile,
    geom: &SphereGeometry,
    grid: ShellGrid,
) -> Result<CoareaResult, GeometryError> {
    require_circle(geom)?;
    let mut lhs = 0.0;
    let mut err = None;
    grid.for_each_radial_node(geom, profile, |i, rho, w| {
        let x = geom.circle_point(grid.angle(i), rho);
        let j0 = geom.density_j0(&x).expect("shell avoids the origin");
        let val = g(&x);
        if !val.is_finite() && err.is_none() {
            err = Some(GeometryError::NonFinite(x.clone()));
        }
        lhs += w * rho * j0 * val;
    });
    if let Some(e) = err {
        return Err(e);
    }

    let (xs, ws) = gauss_legendre(4);
    let arc = 2.0 * PI * geom.radius() / grid.n_theta as f64;
    let mut rhs = 0.0;
    for i in 0..grid.n_theta {
        let th = grid.angle(i);
        let p = geom.circle_point(th, geom.radius());
        let normal: Vec<f64> = p.iter().map(|v| v / geom.radius()).collect();
        let (c, d) = (profile.c(th), profile.d(th));
        let h = (d - c) / grid.n_cells as f64;
        let mut fiber = 0.0;
        for cell in 0..grid.n_cells {
            for (x, w) in xs.iter().zip(ws) {
                let t = c + (cell as f64 + x) * h;
                let y: Vec<f64> = p.iter().zip(&normal).map(|(a, b)| a + t * b).collect();
                let val = g(&y);
                if !val.is_finite() {
                    return Err(GeometryError::NonFinite(y));
                }
                fiber += w * h * val;
            }
        }
        rhs += arc * fiber;
    }
    Ok(CoareaResult { lhs, rhs, diff: (lhs - rhs).abs() })
}

/// `u = v ∘ φ` for a function `v` sampled at the grid angles of the circle.
#[derive(Debug, Clone)]
pub struct LiftedFunction {
    grid: ShellGrid,
    values: Vec<f64>,
    /// Arc-length derivative of `v` at the grid angles.
    slope: Vec<f64>,
}

/// The four quadratic forms compared by the lift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValues {
    /// `∫_Ω J_0 u² dx`.
    pub b0: f64,
    /// `∫_Ω J_0 |S_0ᵀ∇u|² dx`.
    pub a0: f64,
    /// `∫ μ v² dH¹`.
    pub b_mu: f64,
    /// `∫ μ |∇v|² dH¹`.
    pub a_mu: f64,
}

pub fn lift(v: &[f64], grid: ShellGrid, geom: &SphereGeometry) -> Result<LiftedFunction, GeometryError> {
    require_circle(geom)?;
    if v.len() != grid.n_theta {
        return Err(GeometryError::ShapeMismatch { expected: grid.n_theta, got: v.len() });
    }
    let slope = spectral_derivative(v, 2.0 * PI * geom.radius());
    Ok(LiftedFunction { grid, values: v.to_vec(), slope })
}

impl LiftedFunction {
    /// `u(x)` at a shell point above angle index `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// `∇u(x) = Dφ(x)ᵀ ∇v(φ(x))` at a shell point above angle index `i`.
    pub fn gradient(&self, geom: &SphereGeometry, i: usize, x: &[f64]) -> DVector<f64> {
        let th = self.grid.angle(i);
        let tangent = DVector::from_vec(vec![-th.sin(), th.cos()]);
        let surface_grad = tangent * self.slope[i];
        geom.projection_jacobian(x).expect("shell avoids the origin").transpose() * surface_grad
    }

    pub fn forms(&self, profile: &ThicknessProfile, geom: &SphereGeometry) -> FormValues {
        let grid = self.grid;
        let (mut b0, mut a0) = (0.0, 0.0);
        grid.for_each_radial_node(geom, profile, |i, rho, w| {
            let x = geom.circle_point(grid.angle(i), rho);
            let j0 = geom.density_j0(&x).expect("shell avoids the origin");
            let u = self.value(i);
            let grad = self.gradient(geom, i, &x);
            let s0 = geom.s0_matrix(&x).expect("shell avoids the origin");
            let flux = s0.transpose() * grad;
            b0 += w * rho * j0 * u * u;
            a0 += w * rho * j0 * flux.norm_squared();
        });
        let arc = 2.0 * PI * geom.radius() / grid.n_theta as f64;
        let (mut b_mu, mut a_mu) = (0.0, 0.0);
        for i in 0..grid.n_theta {
            let mu = profile.mu(grid.angle(i));
            b_mu += arc * mu * self.values[i] * self.values[i];
            a_mu += arc * mu * self.slope[i] * self.slope[i];
        }
        FormValues { b0, a0, b_mu, a_mu }
    }
}
