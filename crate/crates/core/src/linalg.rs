//! Dense linear algebra kernels: symmetric storage, Cholesky factorization,
//! cyclic Jacobi eigendecomposition and stabilized log-sum-exp / softmax.
//!
//! Everything here is dense and sized for matrices of order at most a few
//! hundred. All routines are pure functions of their inputs.

use crate::error::{check_dim, Error, Result};

/// Sweep budget of the cyclic Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Jacobi stops once the off-diagonal Frobenius norm falls below this
/// fraction of the Frobenius norm of the input.
pub const JACOBI_REL_TOL: f64 = 1e-12;
/// A Cholesky pivot at or below this fraction of the largest diagonal entry
/// is rejected.
pub const CHOLESKY_PIVOT_REL_TOL: f64 = 1e-14;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self {
            rows,
            cols,
            data: data.to_vec(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_dim(cols, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            check_dim(rows, col.len())?;
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`.
    pub fn tr_matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.rows, other.rows)?;
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(k, i);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        for (k, &vk) in v.iter().enumerate() {
            if vk == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(k)) {
                *o += a * vk;
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Real symmetric matrix with full storage; every write is mirrored so
/// `get(i, j) == get(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// # Panics
    /// If `order == 0`.
    pub fn zeros(order: usize) -> Self {
        assert!(order >= 1, "symmetric matrix order must be at least 1");
        Self {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::scaled_identity(order, 1.0)
    }

    pub fn scaled_identity(order: usize, c: f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.set(i, i, c);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        Ok(m)
    }

    /// Builds a matrix from the lower triangle of `f(i, j)` (`i >= j`).
    pub fn from_lower_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Rows must describe a square matrix that is symmetric up to rounding
    /// (`|a_ij - a_ji| <= 1e-12 * max(1, |a_ij|)`); the two triangles are averaged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        if m.rows() == 0 {
            return Err(Error::EmptyInput);
        }
        check_dim(m.rows(), m.cols())?;
        for i in 0..m.rows() {
            for j in 0..i {
                let (a, b) = (m.get(i, j), m.get(j, i));
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self::symmetrize(&m))
    }

    /// `(M + Mᵀ) / 2` for a square `M`.
    ///
    /// # Panics
    /// If `m` is not square or is empty.
    pub fn symmetrize(m: &Matrix) -> Self {
        assert_eq!(m.rows(), m.cols(), "symmetrize needs a square matrix");
        Self::from_lower_fn(m.rows(), |i, j| 0.5 * (m.get(i, j) + m.get(j, i)))
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    /// `self += alpha · b bᵀ` where `b` is given by its nonzero entries.
    pub fn add_sparse_outer(&mut self, alpha: f64, entries: &[(usize, f64)]) {
        for &(i, bi) in entries {
            for &(j, bj) in entries {
                self.data[i * self.order + j] += alpha * bi * bj;
            }
        }
    }

    /// `self += alpha · b bᵀ`.
    pub fn add_outer(&mut self, alpha: f64, b: &[f64]) {
        assert_eq!(b.len(), self.order);
        for i in 0..self.order {
            let s = alpha * b[i];
            if s == 0.0 {
                continue;
            }
            for j in 0..self.order {
                self.data[i * self.order + j] += s * b[j];
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            order: self.order,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        check_dim(self.order, other.order)?;
        Ok(Self {
            order: self.order,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.order);
        let mut acc = 0.0;
        for i in 0..self.order {
            let row = &self.data[i * self.order..(i + 1) * self.order];
            acc += v[i] * dot(row, v);
        }
        acc
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.order, v.len())?;
        Ok((0..self.order)
            .map(|i| dot(&self.data[i * self.order..(i + 1) * self.order], v))
            .collect())
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.order,
            cols: self.order,
            data: self.data.clone(),
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    order: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.order + j]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.order,
            cols: self.order,
            data: self.lower.clone(),
        }
    }

    /// Solves `K x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        check_dim(self.order, b.len())?;
        let n = self.order;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s = b[i] - dot(row, &b[..i]);
            b[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
        Ok(())
    }
}

/// Factors a symmetric positive definite matrix.
pub fn cholesky(k: &SymMatrix) -> Result<CholeskyFactor> {
    let n = k.order();
    let max_diag = (0..n).map(|i| k.get(i, i)).fold(f64::NEG_INFINITY, f64::max);
    let tol = CHOLESKY_PIVOT_REL_TOL * max_diag.max(0.0);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let row_j = &l[j * n..j * n + j];
        let pivot = k.get(j, j) - dot(row_j, row_j);
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let s = k.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            l[i * n + j] = s / d;
        }
    }
    Ok(CholeskyFactor { order: n, lower: l })
}

/// Solves `K X = B` column by column.
pub fn chol_solve(factor: &CholeskyFactor, b: &Matrix) -> Result<Matrix> {
    check_dim(factor.order(), b.rows())?;
    let mut out = Matrix::zeros(b.rows(), b.cols());
    let mut col = vec![0.0; b.rows()];
    for j in 0..b.cols() {
        for (i, c) in col.iter_mut().enumerate() {
            *c = b.get(i, j);
        }
        factor.solve_in_place(&mut col)?;
        for (i, &c) in col.iter().enumerate() {
            out.set(i, j, c);
        }
    }
    Ok(out)
}

/// Eigenvalues sorted in descending order with matching orthonormal
/// eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.values.len();
        SymMatrix::from_lower_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * self.values[k] * self.vectors.get(j, k))
                .sum()
        })
    }
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Ties in the eigenvalues keep the order of the diagonal positions they
/// converged to, so the output is deterministic.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenDecomposition> {
    let n = a.order();
    let mut w = a.data.clone();
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_REL_TOL * a.frobenius_norm();

    let off_norm = |w: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += w[i * n + j] * w[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&w) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = w[r * n + p];
                    let arq = w[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    w[r * n + p] = new_rp;
                    w[p * n + r] = new_rp;
                    w[r * n + q] = new_rq;
                    w[q * n + r] = new_rq;
                }
                w[p * n + p] = app - t * apq;
                w[q * n + q] = aqq + t * apq;
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;

                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
    }
    if !converged && !(off_norm(&w) <= threshold) {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let diag: Vec<f64> = (0..n).map(|i| w[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// `μ log Σ exp(vᵢ/μ)`, evaluated with the max shift.
pub fn log_sum_exp(values: &[f64], mu: f64) -> Result<f64> {
    let max = max_value(values)?;
    check_scale(mu)?;
    let s: f64 = values.iter().map(|&v| ((v - max) / mu).exp()).sum();
    Ok(max + mu * s.ln())
}

/// `exp(vᵢ/μ) / Σⱼ exp(vⱼ/μ)`, evaluated with the max shift.
pub fn softmax_weights(values: &[f64], mu: f64) -> Result<Vec<f64>> {
    let max = max_value(values)?;
    check_scale(mu)?;
    let mut w: Vec<f64> = values.iter().map(|&v| ((v - max) / mu).exp()).collect();
    let s: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= s;
    }
    Ok(w)
}

fn max_value(values: &[f64]) -> Result<f64> {
    values
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::EmptyInput)
}

fn check_scale(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "smoothing scale must be positive and finite, got {mu}"
        )))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
