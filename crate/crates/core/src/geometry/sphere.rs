use super::GeometryError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// The sphere `S^{n-1}(r)` centred at the origin of `ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereGeometry {
    n: usize,
    r: f64,
}

/// Orthonormal tangent basis and unit normal at a point of the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub base: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
    pub normal: Vec<f64>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl SphereGeometry {
    pub fn new(n: usize, r: f64) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::InvalidDimension(n));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(GeometryError::InvalidRadius(r));
        }
        Ok(Self { n, r })
    }

    /// Ambient dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Manifold dimension `k = n - 1`.
    pub fn manifold_dim(&self) -> usize {
        self.n - 1
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    fn radial(&self, x: &[f64]) -> Result<f64, GeometryError> {
        if x.len() != self.n {
            return Err(GeometryError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let rho = norm(x);
        if rho == 0.0 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(rho)
    }

    /// Nearest-point projection `φ(x) = r·x/|x|`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let rho = self.radial(x)?;
        Ok(x.iter().map(|v| self.r * v / rho).collect())
    }

    /// `Φ_ε(x) = φ(x) + ε(x − φ(x))`.
    pub fn squeeze(&self, x: &[f64], eps: f64) -> Result<Vec<f64>, GeometryError> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(GeometryError::InvalidEpsilon(eps));
        }
        let p = self.project(x)?;
        Ok(p.iter().zip(x).map(|(pi, xi)| pi + eps * (xi - pi)).collect())
    }

    /// Tangential Jacobian `J_0(x) = (r/|x|)^{n-1}`.
    pub fn density_j0(&self, x: &[f64]) -> Result<f64, GeometryError> {
        let rho = self.radial(x)?;
        Ok((self.r / rho).powi(self.manifold_dim() as i32))
    }

    /// Projector onto the normal line through `φ(x)`.
    pub fn normal_projector(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let rho = self.radial(x)?;
        let u = DVector::from_iterator(self.n, x.iter().map(|v| v / rho));
        Ok(&u * u.transpose())
    }

    /// Projector onto the tangent space at `φ(x)`.
    pub fn tangent_projector(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        Ok(DMatrix::identity(self.n, self.n) - self.normal_projector(x)?)
    }

    /// `Dφ(x) = (r/|x|)·Q(x)`.
    pub fn projection_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let rho = self.radial(x)?;
        Ok(self.tangent_projector(x)? * (self.r / rho))
    }

    /// Limit correction `S_0(x) = (|x|/r)·Q(x)`.
    pub fn s0_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let rho = self.radial(x)?;
        Ok(self.tangent_projector(x)? * (rho / self.r))
    }

    pub fn tangent_frame(&self, x: &[f64]) -> Result<TangentFrame, GeometryError> {
        let base = self.project(x)?;
        let normal: Vec<f64> = base.iter().map(|v| v / self.r).collect();
        // Gram-Schmidt over the coordinate axes, dropping the one closest to the normal.
        let skip = (0..self.n)
            .max_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs()))
            .unwrap_or(0);
        let mut basis: Vec<Vec<f64>> = vec![normal.clone()];
        for axis in (0..self.n).filter(|&a| a != skip) {
            let mut v = vec![0.0; self.n];
            v[axis] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                    v.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
                }
            }
            let len = norm(&v);
            v.iter_mut().for_each(|a| *a /= len);
            basis.push(v);
        }
        let tangents = basis.split_off(1);
        Ok(TangentFrame { base, tangents, normal })
    }

    /// Point `r(cos θ, sin θ)` on the circle (n = 2 only).
    pub fn circle_point(&self, theta: f64, radius: f64) -> Vec<f64> {
        debug_assert_eq!(self.n, 2);
        let (s, c) = theta.sin_cos();
        vec![radius * c, radius * s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle() -> SphereGeometry {
        SphereGeometry::new(2, 1.0).unwrap()
    }

    #[test]
    fn project_examples() {
        let g = circle();
        assert_eq!(g.project(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(g.project(&[0.0, 0.5]).unwrap(), vec![0.0, 1.0]);
        let g2 = SphereGeometry::new(2, 2.0).unwrap();
        let p = g2.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 1.2).abs() < 1e-15 && (p[1] - 1.6).abs() < 1e-15);
        assert_eq!(g.project(&[0.0, 0.0]), Err(GeometryError::ZeroVector));
    }

    #[test]
    fn squeeze_examples() {
        let g = circle();
        let x = [2.0, 0.0];
        assert_eq!(g.squeeze(&x, 1.0).unwrap(), x.to_vec());
        assert_eq!(g.squeeze(&x, 0.5).unwrap(), vec![1.5, 0.0]);
        let tiny = g.squeeze(&[0.3, 1.7], 1e-12).unwrap();
        let p = g.project(&[0.3, 1.7]).unwrap();
        assert!((tiny[0] - p[0]).abs() < 1e-11 && (tiny[1] - p[1]).abs() < 1e-11);
        assert!(matches!(g.squeeze(&x, 0.0), Err(GeometryError::InvalidEpsilon(_))));
        assert!(matches!(g.squeeze(&x, 1.5), Err(GeometryError::InvalidEpsilon(_))));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(SphereGeometry::new(1, 1.0).is_err());
        assert!(SphereGeometry::new(3, 0.0).is_err());
        assert!(SphereGeometry::new(3, f64::NAN).is_err());
    }

    #[test]
    fn s0_at_base_point_is_tangent_projector() {
        let g = SphereGeometry::new(3, 1.0).unwrap();
        let x = g.project(&[0.3, -0.2, 0.9]).unwrap();
        let s0 = g.s0_matrix(&x).unwrap();
        let q = g.tangent_projector(&x).unwrap();
        assert!((s0 - q).abs().max() < 1e-15);
    }

    /// Finite-difference Jacobian of φ along a tangent frame, then its determinant.
    fn j0_oracle(g: &SphereGeometry, x: &[f64]) -> f64 {
        let frame = g.tangent_frame(x).unwrap();
        let k = frame.tangents.len();
        let h = 1e-6;
        let mut m = DMatrix::zeros(k, k);
        for (j, t) in frame.tangents.iter().enumerate() {
            let plus: Vec<f64> = x.iter().zip(t).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = x.iter().zip(t).map(|(a, b)| a - h * b).collect();
            let (pp, pm) = (g.project(&plus).unwrap(), g.project(&minus).unwrap());
            let d: Vec<f64> = pp.iter().zip(&pm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            for (i, ti) in frame.tangents.iter().enumerate() {
                m[(i, j)] = d.iter().zip(ti).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        m.determinant().abs()
    }

    #[test]
    fn density_matches_finite_difference_oracle() {
        let g2 = circle();
        assert!((j0_oracle(&g2, &[2.0, 0.0]) - 0.5).abs() < 1e-8);
        assert!((g2.density_j0(&[2.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        let g3 = SphereGeometry::new(3, 1.0).unwrap();
        assert!((j0_oracle(&g3, &[0.0, 2.0, 0.0]) - 0.25).abs() < 1e-8);
        assert!((g3.density_j0(&[0.0, 2.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!((g3.density_j0(&[0.6, 0.0, 0.8]).unwrap() - 1.0).abs() < 1e-15);
        let x = [0.4, -1.1, 0.7];
        assert!((j0_oracle(&g3, &x) - g3.density_j0(&x).unwrap()).abs() < 1e-7);
    }

    /// `S_0` from the defining limit: fourth-order finite-difference `DΦ_ε`, invert,
    /// subtract `P/ε`, and Richardson-extrapolate over ε = 0.08·2^{-k}. The remainder is a
    /// power series in ε, so each level removes one order.
    fn s0_oracle(g: &SphereGeometry, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let p = g.normal_projector(x).unwrap();
        let quotient = |eps: f64| {
            let h = 1e-3;
            let mut d = DMatrix::zeros(n, n);
            for j in 0..n {
                let at = |s: f64| {
                    let mut y = x.to_vec();
                    y[j] += s * h;
                    g.squeeze(&y, eps).unwrap()
                };
                let (f2, f1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
                for i in 0..n {
                    d[(i, j)] = (-f2[i] + 8.0 * f1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
                }
            }
            // D(Φ_ε^{-1}) at Φ_ε(x) is the inverse of DΦ_ε at x.
            d.try_inverse().unwrap() - &p / eps
        };
        let mut table: Vec<DMatrix<f64>> = (0..5).map(|k| quotient(0.08 / 2f64.powi(k))).collect();
        let mut last = DMatrix::zeros(n, n);
        for order in 1..5 {
            let f = 2f64.powi(order);
            last = table[table.len() - 1].clone();
            table = table.windows(2).map(|w| (&w[1] * f - &w[0]) / (f - 1.0)).collect();
        }
        let best = table.pop().unwrap();
        assert!((&best - &last).abs().max() < 1e-6, "{best} vs {last}");
        best
    }

    #[test]
    fn s0_matches_richardson_limit() {
        let g = circle();
        let x = [2.0, 0.0];
        let oracle = s0_oracle(&g, &x);
        let s0 = g.s0_matrix(&x).unwrap();
        assert!((&oracle - &s0).abs().max() < 1e-6, "{oracle} vs {s0}");
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert!((&s0 * e2 - DVector::from_vec(vec![0.0, 2.0])).norm() < 1e-14);
        assert!((&s0 * e1).norm() < 1e-14);

        let g3 = SphereGeometry::new(3, 1.5).unwrap();
        let x3 = [0.5, 1.2, -0.9];
        assert!((s0_oracle(&g3, &x3) - g3.s0_matrix(&x3).unwrap()).abs().max() < 1e-6);
    }

    fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0f64..3.0, n).prop_filter("away from origin", |v| norm(v) > 0.2)
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_radial(n in 2usize..5, r in 0.3f64..3.0, seed in point(4)) {
            let g = SphereGeometry::new(n, r).unwrap();
            let x = &seed[..n];
            prop_assume!(norm(x) > 0.2);
            let p = g.project(x).unwrap();
            let pp = g.project(&p).unwrap();
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() <= 8.0 * f64::EPSILON * r);
            }
            prop_assert!((norm(&p) - r).abs() <= 8.0 * f64::EPSILON * r);
            // x − φ(x) is parallel to x.
            let res: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
            let pn = g.normal_projector(x).unwrap();
            let pr = &pn * DVector::from_vec(res.clone());
            for (a, b) in pr.iter().zip(&res) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn projectors_are_complementary(n in 2usize..5, seed in point(4)) {
            let g = SphereGeometry::new(n, 1.3).unwrap();
            let x = &seed[..n];
            prop_assume!(norm(x) > 0.2);
            let p = g.normal_projector(x).unwrap();
            let q = g.tangent_projector(x).unwrap();
            let id = DMatrix::<f64>::identity(n, n);
            prop_assert!((&p + &q - &id).abs().max() < 1e-14);
            prop_assert!((&p * &p - &p).abs().max() < 1e-14);
            prop_assert!((&q * &q - &q).abs().max() < 1e-14);
            prop_assert!((p.transpose() - &p).abs().max() < 1e-15);
            prop_assert!((q.transpose() - &q).abs().max() < 1e-15);
        }

        #[test]
        fn squeezes_compose(seed in point(3), e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
            let g = SphereGeometry::new(3, 0.8).unwrap();
            let x = &seed[..];
            let lhs = g.squeeze(&g.squeeze(x, e2).unwrap(), e1).unwrap();
            let rhs = g.squeeze(x, e1 * e2).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                prop_assert!((a - b).abs() < 1e-13);
            }
        }

        #[test]
        fn s0_inverts_projection_jacobian_on_tangents(n in 2usize..5, r in 0.5f64..2.0, seed in point(4)) {
            let g = SphereGeometry::new(n, r).unwrap();
            let x = &seed[..n];
            prop_assume!(norm(x) > 0.2);
            let s0 = g.s0_matrix(x).unwrap();
            let dphi = g.projection_jacobian(x).unwrap();
            let m = s0.transpose() * dphi.transpose();
            let frame = g.tangent_frame(x).unwrap();
            for t in &frame.tangents {
                let h = DVector::from_vec(t.clone());
                prop_assert!((&m * &h - &h).norm() <= 1e-10);
            }
        }

        #[test]
        fn tangent_frame_is_orthonormal(n in 2usize..6, seed in point(5)) {
            let g = SphereGeometry::new(n, 2.0).unwrap();
            let x = &seed[..n];
            prop_assume!(norm(x) > 0.2);
            let f = g.tangent_frame(x).unwrap();
            let mut all = f.tangents.clone();
            all.push(f.normal.clone());
            prop_assert_eq!(all.len(), n);
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = all[i].iter().zip(&all[j]).map(|(a, b)| a * b).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - e).abs() < 1e-13);
                }
            }
            let xn = norm(x);
            for (a, b) in f.normal.iter().zip(x) {
                prop_assert!((a - b / xn).abs() < 1e-14);
            }
        }
    }
}
