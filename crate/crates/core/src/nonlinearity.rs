//! Scalar reaction terms `G` and their Nemitski operators `u ↦ G ∘ u`.

use std::fmt;

/// A scalar function `G ∈ C¹(ℝ)` with its derivative.
pub trait ScalarNonlinearity: Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn derivative(&self, s: f64) -> f64;

    fn name(&self) -> String {
        "custom".into()
    }

    /// Applies `G` pointwise to nodal values.
    fn nemitski(&self, u: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(u) {
            *o = self.value(*s);
        }
    }
}

/// `G(s) = λs − s³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChafeeInfante {
    pub lambda: f64,
}

impl ScalarNonlinearity for ChafeeInfante {
    fn value(&self, s: f64) -> f64 {
        self.lambda * s - s * s * s
    }

    fn derivative(&self, s: f64) -> f64 {
        self.lambda - 3.0 * s * s
    }

    fn name(&self) -> String {
        format!("chafee_infante(lambda={})", self.lambda)
    }
}

/// `G(s) = s³`, which is not dissipative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cubic;

impl ScalarNonlinearity for Cubic {
    fn value(&self, s: f64) -> f64 {
        s * s * s
    }

    fn derivative(&self, s: f64) -> f64 {
        3.0 * s * s
    }

    fn name(&self) -> String {
        "cubic".into()
    }
}

/// `G(s) = −κs`: the linear damping used when a purely linear problem is wanted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDamping {
    pub kappa: f64,
}

impl ScalarNonlinearity for LinearDamping {
    fn value(&self, s: f64) -> f64 {
        -self.kappa * s
    }

    fn derivative(&self, _s: f64) -> f64 {
        -self.kappa
    }

    fn name(&self) -> String {
        format!("linear_damping(kappa={})", self.kappa)
    }
}

/// `G ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Zero;

impl ScalarNonlinearity for Zero {
    fn value(&self, _s: f64) -> f64 {
        0.0
    }

    fn derivative(&self, _s: f64) -> f64 {
        0.0
    }

    fn name(&self) -> String {
        "zero".into()
    }
}

/// A nonlinearity from a pair of closures.
pub struct FnNonlinearity<F, D> {
    pub g: F,
    pub dg: D,
    pub label: String,
}

impl<F, D> fmt::Debug for FnNonlinearity<F, D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnNonlinearity").field("label", &self.label).finish()
    }
}

impl<F, D> ScalarNonlinearity for FnNonlinearity<F, D>
where
    F: Fn(f64) -> f64 + Send + Sync,
    D: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, s: f64) -> f64 {
        (self.g)(s)
    }

    fn derivative(&self, s: f64) -> f64 {
        (self.dg)(s)
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}
