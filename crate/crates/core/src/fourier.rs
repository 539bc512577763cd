//! Real trigonometric polynomials on the circle, parameterized by angle.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `f(θ) = cos[0] + Σ_{k≥1} (cos[k]·cos kθ + sin[k]·sin kθ)`.
///
/// `sin[0]` is ignored; missing trailing coefficients are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FourierSeries {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn constant(value: f64) -> Self {
        Self { cos: vec![value], sin: Vec::new() }
    }

    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { cos, sin }
    }

    /// Highest harmonic carried by the series.
    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len()).saturating_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().skip(1).all(|&a| a == 0.0) && self.sin.iter().skip(1).all(|&b| b == 0.0)
    }

    pub fn mean(&self) -> f64 {
        self.cos.first().copied().unwrap_or(0.0)
    }

    fn coeff(&self, k: usize) -> (f64, f64) {
        let a = self.cos.get(k).copied().unwrap_or(0.0);
        let b = if k == 0 { 0.0 } else { self.sin.get(k).copied().unwrap_or(0.0) };
        (a, b)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.derivative(0, theta)
    }

    /// `order`-th derivative with respect to the angle.
    pub fn derivative(&self, order: u32, theta: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..=self.degree() {
            let (a, b) = self.coeff(k);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            if k == 0 {
                if order == 0 {
                    acc += a;
                }
                continue;
            }
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            // d^m/dθ^m of (a cos kθ + b sin kθ) cycles with period 4 in m.
            let scale = kf.powi(order as i32);
            let term = match order % 4 {
                0 => a * c + b * s,
                1 => -a * s + b * c,
                2 => -a * c - b * s,
                _ => a * s - b * c,
            };
            acc += scale * term;
        }
        acc
    }

    /// Trigonometric interpolation of `f` keeping harmonics up to `modes`.
    pub fn from_fn(f: impl Fn(f64) -> f64, modes: usize) -> Self {
        let n = (4 * modes + 4).max(64);
        let samples: Vec<f64> = (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect();
        Self::from_samples(&samples, modes)
    }

    /// Fit from values on the uniform grid `θ_i = 2πi/N`, truncated at `modes`.
    pub fn from_samples(samples: &[f64], modes: usize) -> Self {
        let n = samples.len();
        let spectrum = real_dft(samples);
        let kmax = modes.min((n - 1) / 2);
        let mut cos = vec![0.0; kmax + 1];
        let mut sin = vec![0.0; kmax + 1];
        cos[0] = spectrum[0].re / n as f64;
        for k in 1..=kmax {
            cos[k] = 2.0 * spectrum[k].re / n as f64;
            sin[k] = -2.0 * spectrum[k].im / n as f64;
        }
        Self { cos, sin }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            cos: self.cos.iter().map(|a| a * factor).collect(),
            sin: self.sin.iter().map(|b| b * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len_c = self.cos.len().max(other.cos.len());
        let len_s = self.sin.len().max(other.sin.len());
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        Self {
            cos: (0..len_c).map(|k| get(&self.cos, k) - get(&other.cos, k)).collect(),
            sin: (0..len_s).map(|k| get(&self.sin, k) - get(&other.sin, k)).collect(),
        }
    }

    /// Upper bound `Σ|a_k| + |b_k|` on `sup |f|`.
    pub fn abs_bound(&self) -> f64 {
        self.cos.iter().map(|a| a.abs()).sum::<f64>() + self.sin.iter().skip(1).map(|b| b.abs()).sum::<f64>()
    }
}

pub(crate) fn real_dft(samples: &[f64]) -> Vec<Complex<f64>> {
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf
}

/// Exact derivative of the trigonometric interpolant of periodic samples on a
/// circle of length `period`. The Nyquist mode (even N) is dropped.
pub fn spectral_derivative(samples: &[f64], period: f64) -> Vec<f64> {
    let n = samples.len();
    let mut buf = real_dft(samples);
    let w = 2.0 * PI / period;
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c = Complex::new(0.0, w * freq) * *c;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_single_harmonic() {
        let f = FourierSeries::new(vec![0.3, 0.0, 0.5], vec![0.0, 0.0, -0.25]);
        let th: f64 = 0.7;
        let expect = [
            0.3 + 0.5 * (2.0 * th).cos() - 0.25 * (2.0 * th).sin(),
            -1.0 * (2.0 * th).sin() - 0.5 * (2.0 * th).cos(),
            -2.0 * (2.0 * th).cos() + 1.0 * (2.0 * th).sin(),
            4.0 * (2.0 * th).sin() + 2.0 * (2.0 * th).cos(),
        ];
        for (m, e) in expect.iter().enumerate() {
            assert!((f.derivative(m as u32, th) - e).abs() < 1e-14, "order {m}");
        }
    }

    #[test]
    fn fit_recovers_coefficients() {
        let f = FourierSeries::new(vec![1.0, 0.2, 0.0, -0.1], vec![0.0, 0.05, 0.3]);
        let g = FourierSeries::from_fn(|t| f.eval(t), 6);
        for th in [0.0, 1.0, 2.5, 4.0] {
            assert!((f.eval(th) - g.eval(th)).abs() < 1e-14);
        }
        assert!((g.cos[3] + 0.1).abs() < 1e-14);
        assert!((g.sin[2] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn spectral_derivative_of_trig_samples() {
        let n = 64;
        let period = 2.0 * PI * 1.5;
        let s: Vec<f64> = (0..n).map(|i| period * i as f64 / n as f64).collect();
        let u: Vec<f64> = s.iter().map(|&x| (2.0 * PI * 3.0 * x / period).sin()).collect();
        let du = spectral_derivative(&u, period);
        for (x, d) in s.iter().zip(&du) {
            let e = 2.0 * PI * 3.0 / period * (2.0 * PI * 3.0 * x / period).cos();
            assert!((d - e).abs() < 1e-12);
        }
    }
}
