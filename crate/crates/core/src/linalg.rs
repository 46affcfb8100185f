//! Small dense linear algebra for the design matrices of linear bandits.
//!
//! Everything here is row-major and sized for desk-scale dimensions
//! (`d <= MAX_DIM`). The central type is [`PsdState`], a ridge design matrix
//! kept together with its inverse under rank-1 growth.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};

/// Largest context dimension accepted anywhere in the crate.
pub const MAX_DIM: usize = 128;

/// Number of rank-1 updates between full inverse refreshes.
pub const REFRESH_INTERVAL: u64 = 1000;

/// Square dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = *v;
        }
        m
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            check_len("matrix row", row.len(), dim)?;
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("vector", v.len(), self.dim)?;
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(v, &mut out);
        Ok(out)
    }

    /// `out = self * v` without length checks; callers guarantee sizes.
    #[inline]
    pub(crate) fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), v);
        }
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        check_len("matrix", other.dim, self.dim)?;
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.get(i, j);
            }
        }
        out
    }

    /// Largest `|m[i][j] - m[j][i]|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `v^T M v`.
    #[inline]
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            acc += vi * dot(self.row(i), v);
        }
        acc
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Ridge design matrix `B` maintained jointly with `B^{-1}`.
#[derive(Debug, Clone)]
pub struct PsdState {
    mat: Matrix,
    inv: Matrix,
    ridge: f64,
    update_count: u64,
    scratch: Vec<f64>,
}

impl PsdState {
    /// `B = ridge * I`.
    pub fn new(dim: usize, ridge: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if !(ridge > 0.0 && ridge.is_finite()) {
            return Err(Error::invalid(format!(
                "ridge must be positive and finite, got {ridge}"
            )));
        }
        Ok(PsdState {
            mat: Matrix::scaled_identity(dim, ridge),
            inv: Matrix::scaled_identity(dim, 1.0 / ridge),
            ridge,
            update_count: 0,
            scratch: vec![0.0; dim],
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim
    }

    pub fn mat(&self) -> &Matrix {
        &self.mat
    }

    pub fn inv(&self) -> &Matrix {
        &self.inv
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// `B += x x^T`, with the inverse tracked by Sherman–Morrison and
    /// rebuilt from a Cholesky solve every [`REFRESH_INTERVAL`] updates.
    pub fn rank1_update(&mut self, x: &[f64]) -> Result<()> {
        check_len("update vector", x.len(), self.dim())?;
        self.update_count += 1;
        if x.iter().any(|v| *v != 0.0) {
            let n = self.dim();
            for i in 0..n {
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                let row = &mut self.mat.data[i * n..(i + 1) * n];
                for (m, xj) in row.iter_mut().zip(x) {
                    *m += xi * xj;
                }
            }
            let mut u = std::mem::take(&mut self.scratch);
            self.inv.mul_vec_into(x, &mut u);
            let denom = 1.0 + dot(x, &u);
            for i in 0..n {
                let ui = u[i] / denom;
                if ui == 0.0 {
                    continue;
                }
                let row = &mut self.inv.data[i * n..(i + 1) * n];
                for (m, uj) in row.iter_mut().zip(&u) {
                    *m -= ui * uj;
                }
            }
            self.scratch = u;
        }
        if self.update_count.is_multiple_of(REFRESH_INTERVAL) {
            self.refresh_inverse()?;
        }
        Ok(())
    }

    /// Recomputes `B^{-1}` from `B` through its Cholesky factor.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        self.inv = spd_inverse(&self.mat)?;
        Ok(())
    }

    /// `v^T B^{-1} v`, clamped at zero.
    pub fn mahalanobis_sq(&self, v: &[f64]) -> Result<f64> {
        check_len("vector", v.len(), self.dim())?;
        Ok(self.inv.quadratic_form(v).max(0.0))
    }

    /// Largest entry of `|B B^{-1} - I|`.
    pub fn inverse_drift(&self) -> f64 {
        let prod = self.mat.mul(&self.inv).expect("square matrices of equal size");
        prod.max_abs_diff(&Matrix::identity(self.dim()))
    }
}

/// Lower-triangular `L` with `L L^T = m`.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    let n = m.dim;
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut diag = m.get(j, j);
        for k in 0..j {
            diag -= l.get(j, k) * l.get(j, k);
        }
        if diag.is_nan() || diag <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse(m: &Matrix) -> Result<Matrix> {
    let n = m.dim;
    let l = cholesky(m)?;
    // L^{-1}, lower triangular, by forward substitution.
    let mut linv = Matrix::zeros(n);
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l.get(i, k) * linv.get(k, c);
            }
            linv.set(i, c, s / l.get(i, i));
        }
    }
    // m^{-1} = L^{-T} L^{-1}
    let mut out = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..n {
                s += linv.get(k, i) * linv.get(k, j);
            }
            out.set(i, j, s);
            out.set(j, i, s);
        }
    }
    Ok(out)
}

/// `mean + L z` with `L = cholesky(cov)` and `z` standard normal.
///
/// An exactly zero covariance yields `mean` without consuming randomness.
pub fn sample_mvn<R: Rng + ?Sized>(mean: &[f64], cov: &Matrix, rng: &mut R) -> Result<Vec<f64>> {
    check_len("mean", mean.len(), cov.dim())?;
    if cov.is_zero() {
        return Ok(mean.to_vec());
    }
    let l = cholesky(cov)?;
    Ok(sample_with_factor(mean, &l, 1.0, rng))
}

/// `mean + scale * L z` for a precomputed lower-triangular factor.
pub fn sample_with_factor<R: Rng + ?Sized>(
    mean: &[f64],
    factor: &Matrix,
    scale: f64,
    rng: &mut R,
) -> Vec<f64> {
    let n = factor.dim();
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = mean.to_vec();
    for i in 0..n {
        let row = &factor.row(i)[..=i];
        out[i] += scale * dot(row, &z[..=i]);
    }
    out
}
