//! Dense symmetric eigensolver and envelope Cholesky for the generalized problem
//! `K v = λ M v` with `M` symmetric positive definite.
//!
//! The symmetric solver is Householder tridiagonalization followed by implicit QL
//! iterations (the EISPACK `tred2`/`tql2` pair). The Cholesky factor skips the zero
//! leading part of each row, so banded and cyclic-banded mass matrices are reduced in
//! `O(n²)` work instead of `O(n³)`.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Lower Cholesky factor `A = L Lᵀ` stored row-major; entries left of `first[i]` are zero.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    first: Vec<usize>,
    l: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &DMatrix<f64>) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinalgError::DimensionMismatch(format!("{}x{} is not square", n, a.ncols())));
        }
        let first: Vec<usize> = (0..n)
            .map(|i| (0..=i).find(|&j| a[(i, j)] != 0.0).unwrap_or(i))
            .collect();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let start = fi.max(first[j]);
                let (ri, rj) = (i * n, j * n);
                let mut s = a[(i, j)];
                for k in start..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(LinalgError::NotPositiveDefinite { index: i, pivot: s });
                    }
                    l[ri + i] = s.sqrt();
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
        }
        Ok(Self { n, first, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + n];
            let mut s = b[i];
            for k in self.first[i]..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper(&self, y: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let row = &self.l[i * n..i * n + n];
            let xi = y[i] / row[i];
            y[i] = xi;
            for k in self.first[i]..i {
                y[k] -= row[k] * xi;
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower(&mut x);
        self.solve_upper(&mut x);
        x
    }
}

/// Eigenvalues (ascending) and, optionally, orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Option<DMatrix<f64>>,
}

/// Eigen-decomposition of a symmetric matrix; only the lower triangle is read.
pub fn symmetric_eigen(a: &DMatrix<f64>, want_vectors: bool) -> Result<SymmetricEigen, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::DimensionMismatch(format!("{}x{} is not square", n, a.ncols())));
    }
    if n == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: want_vectors.then(|| DMatrix::zeros(0, 0)) });
    }
    let mut v = a.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e, want_vectors);
    tql2(n, &mut d, &mut e, want_vectors.then_some(v.as_mut_slice()))?;
    let vectors = want_vectors.then(|| DMatrix::from_vec(n, n, v));
    Ok(SymmetricEigen { values: d, vectors })
}

// Column-major access: element (i, j) lives at j * n + i.
#[inline(always)]
fn at(n: usize, i: usize, j: usize) -> usize {
    j * n + i
}

fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = 0.0;
                v[at(n, j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(n, j, i)] = f;
                let col = &v[j * n..j * n + i];
                g = e[j] + col[j] * f;
                for k in j + 1..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut v[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for j in 0..n {
            d[j] = v[at(n, j, j)];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n - 1 {
        v[at(n, n - 1, i)] = v[at(n, i, i)];
        v[at(n, i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(n, k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(n, k, i + 1)] * v[at(n, k, j)];
                }
                for k in 0..=i {
                    v[at(n, k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(n, k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
        v[at(n, n - 1, j)] = 0.0;
    }
    v[at(n, n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(n: usize, d: &mut [f64], e: &mut [f64], mut v: Option<&mut [f64]>) -> Result<(), LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(LinalgError::NoConvergence { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        let (lo, hi) = v.split_at_mut((i + 1) * n);
                        let col_i = &mut lo[i * n..];
                        let col_i1 = &mut hi[..n];
                        for k in 0..n {
                            let hk = col_i1[k];
                            col_i1[k] = s * col_i[k] + c * hk;
                            col_i[k] = c * col_i[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Selection sort keeps the column swaps cheap.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if let Some(v) = v.as_deref_mut() {
                for row in 0..n {
                    v.swap(at(n, row, i), at(n, row, k));
                }
            }
        }
    }
    Ok(())
}

/// Solution of `K v = λ M v`: ascending eigenvalues and the first `vectors` eigenvectors,
/// normalized so that `VᵀMV = I`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: Option<DMatrix<f64>>,
}

/// Cholesky reduction `C = L⁻¹ K L⁻ᵀ`, symmetric eigensolve, back-substitution `V = L⁻ᵀ Q`.
pub fn generalized_eigen(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    vectors: Option<usize>,
) -> Result<GeneralizedEigen, LinalgError> {
    let n = k.nrows();
    if k.shape() != (n, n) || m.shape() != (n, n) {
        return Err(LinalgError::DimensionMismatch(format!(
            "stiffness {:?} and mass {:?} must be square of equal size",
            k.shape(),
            m.shape()
        )));
    }
    let chol = EnvelopeCholesky::factor(m)?;

    // Y = L⁻¹ K, column by column.
    let mut y = k.clone();
    for c in 0..n {
        chol.solve_lower(y.column_mut(c).as_mut_slice());
    }
    // C = L⁻¹ Yᵀ.
    let mut c = DMatrix::zeros(n, n);
    let mut buf = vec![0.0; n];
    for col in 0..n {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = y[(col, j)];
        }
        chol.solve_lower(&mut buf);
        c.column_mut(col).as_mut_slice().copy_from_slice(&buf);
    }
    drop(y);
    for j in 0..n {
        for i in j + 1..n {
            let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }

    let eig = symmetric_eigen(&c, vectors.is_some())?;
    let vectors = match (vectors, eig.vectors) {
        (Some(count), Some(q)) => {
            let count = count.min(n);
            let mut out = DMatrix::zeros(n, count);
            for j in 0..count {
                let mut col: Vec<f64> = q.column(j).iter().copied().collect();
                chol.solve_upper(&mut col);
                out.column_mut(j).as_mut_slice().copy_from_slice(&col);
            }
            Some(out)
        }
        _ => None,
    };
    Ok(GeneralizedEigen { values: eig.values, vectors })
}
