//! Small dense linear algebra over column-major matrices.
//!
//! Everything here is instrumented for the FLOP counter. The SVD is a
//! one-sided Jacobi (Hestenes) iteration, which is accurate for the small,
//! possibly rank-deficient unfoldings produced by HOSVD and TT-SVD.

use crate::error::{Error, Result};
use crate::metrics::flops;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{rows} x {cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::dim("ragged rows"));
        }
        Ok(Self::from_fn(n, m, |r, c| rows[r][c]))
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
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r + self.rows * c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r + self.rows * c] = v;
    }

    pub fn col(&self, c: usize) -> &[T] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn row(&self, r: usize) -> Vec<T> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// First `k` columns.
    pub fn leading_cols(&self, k: usize) -> Self {
        Self {
            rows: self.rows,
            cols: k,
            data: self.data[..k * self.rows].to_vec(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(m, n);
        for j in 0..n {
            let bj = other.col(j);
            let oj = &mut out.data[j * m..(j + 1) * m];
            for (p, &b) in bj.iter().enumerate() {
                let ap = &self.data[p * m..(p + 1) * m];
                for (o, &a) in oj.iter_mut().zip(ap) {
                    *o += a * b;
                }
            }
        }
        flops::record_dots(m * n, k);
        Ok(out)
    }

    /// `self * x`; counted as `rows` dot products of length `cols`.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::dim(format!(
                "{}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![T::zero(); self.rows];
        for (c, &xc) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(c)) {
                *o += a * xc;
            }
        }
        flops::record_dots(self.rows, self.cols);
        Ok(out)
    }

    /// `selfᵀ * y`.
    pub fn t_matvec(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.rows {
            return Err(Error::dim(format!(
                "transpose of {}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        flops::record_dots(self.cols, self.rows);
        Ok((0..self.cols)
            .map(|c| self.col(c).iter().zip(y).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// `selfᵀ self`, computing only the upper triangle and mirroring it.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v: T = self.col(i).iter().zip(self.col(j)).map(|(&a, &b)| a * b).sum();
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        flops::record_dots(n * (n + 1) / 2, self.rows);
        g
    }

    pub fn add_diagonal(&mut self, alpha: T) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            let v = self.get(i, i) + alpha;
            self.set(i, i, v);
        }
        flops::record(0, n as u64);
    }
}

/// Cholesky factorization `A = L Lᵀ`, stored as `U = Lᵀ` so that rows of
/// `L` are contiguous columns.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    u: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors a symmetric positive definite matrix; reads the upper triangle.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::dim("cholesky needs a square matrix"));
        }
        let mut u = Matrix::zeros(n, n);
        let (mut mults, mut adds) = (0u64, 0u64);
        for j in 0..n {
            // column j of U holds row j of L
            let (done, rest) = u.data.split_at_mut(j * n);
            let uj = &mut rest[..n];
            for i in 0..j {
                let ui = &done[i * n..i * n + i];
                let dot: T = ui.iter().zip(&uj[..i]).map(|(&x, &y)| x * y).sum();
                uj[i] = (a.get(i, j) - dot) / done[i * n + i];
            }
            let d = a.get(j, j) - uj[..j].iter().map(|&x| x * x).sum::<T>();
            // entry i: dot of length i, one subtract, one divide
            for i in 0..j as u64 {
                mults += i + 1;
                adds += i.saturating_sub(1) + 1;
            }
            // pivot: j squares summed, one subtract
            mults += j as u64;
            adds += (j as u64).saturating_sub(1) + 1;
            if !(d > T::zero()) || !d.is_finite() {
                flops::record(mults, adds);
                return Err(Error::Solver {
                    message: format!("matrix is not positive definite at pivot {j}"),
                    condition: f64::INFINITY,
                });
            }
            uj[j] = d.sqrt();
        }
        flops::record(mults, adds);
        Ok(Self { u })
    }

    /// The lower factor `L`.
    pub fn factor(&self) -> Matrix<T> {
        self.u.transpose()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.u.rows();
        let mut y = b.to_vec();
        // L y = b, row i of L is column i of U
        for i in 0..n {
            let ui = self.u.col(i);
            let dot: T = ui[..i].iter().zip(&y[..i]).map(|(&a, &b)| a * b).sum();
            y[i] = (y[i] - dot) / ui[i];
        }
        // U x = y, column oriented
        for i in (0..n).rev() {
            let ui = self.u.col(i);
            y[i] /= ui[i];
            let xi = y[i];
            for (yk, &uk) in y[..i].iter_mut().zip(&ui[..i]) {
                *yk -= uk * xi;
            }
        }
        // two triangular sweeps: n(n-1)/2 multiply-subtracts and n divisions each
        let tri = (n * (n.saturating_sub(1)) / 2) as u64;
        flops::record(2 * (tri + n as u64), 2 * tri);
        y
    }

    /// Ratio of the largest to smallest squared pivot, a cheap lower bound
    /// on the 2-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let diag: Vec<f64> = (0..self.u.rows()).map(|i| self.u.get(i, i).as_f64()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        (max / min).powi(2)
    }
}

/// Outcome of a jittered SPD solve.
#[derive(Debug, Clone)]
pub struct SpdSolution<T> {
    pub x: Vec<T>,
    /// Diagonal jitter that had to be added, zero when the plain factorization succeeded.
    pub jitter: f64,
    pub condition: f64,
}

/// Solves `A x = b` for symmetric positive (semi)definite `A`. If the plain
/// Cholesky fails, `base_jitter` is added to the diagonal and grown tenfold
/// until the factorization succeeds.
pub fn solve_spd_jittered<T: Scalar>(a: &Matrix<T>, b: &[T], base_jitter: f64) -> Result<SpdSolution<T>> {
    if let Ok(ch) = Cholesky::new(a) {
        let x = ch.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(SpdSolution {
                condition: ch.condition_estimate(),
                x,
                jitter: 0.0,
            });
        }
    }
    let scale = (0..a.rows()).map(|i| a.get(i, i).as_f64().abs()).fold(0.0, f64::max).max(1.0);
    let mut jitter = base_jitter;
    for _ in 0..16 {
        let mut shifted = a.clone();
        shifted.add_diagonal(T::lit(jitter * scale));
        if let Ok(ch) = Cholesky::new(&shifted) {
            let x = ch.solve(b);
            if x.iter().all(|v| v.is_finite()) {
                return Ok(SpdSolution {
                    condition: ch.condition_estimate(),
                    x,
                    jitter: jitter * scale,
                });
            }
        }
        jitter *= 10.0;
    }
    Err(Error::Solver {
        message: "cholesky failed even with diagonal jitter".into(),
        condition: f64::INFINITY,
    })
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ` with singular values
/// sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// `m x k` with orthonormal columns, `k = min(m, n)`.
    pub u: Matrix<T>,
    pub s: Vec<T>,
    /// `n x k` with orthonormal columns.
    pub v: Matrix<T>,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi on the columns of `a` (m x n). Returns the rotated
/// matrix `A V` and the accumulated orthogonal `V` (n x n).
fn jacobi_orthogonalize<T: Scalar>(a: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    let tol = T::epsilon() * T::of_usize(m.max(1));
    // pairs whose correlation is at roundoff level of the whole matrix are left alone
    let floor = {
        let f = a.frobenius_norm();
        f * f * T::epsilon() * T::epsilon()
    };
    let (mut mults, mut adds) = (0u64, 0u64);
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for r in 0..m {
                    let (x, y) = (w.get(r, p), w.get(r, q));
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                mults += 3 * m as u64;
                adds += 3 * m.saturating_sub(1) as u64;
                if gamma.abs() <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                mults += 6;
                adds += 4;
                for r in 0..m {
                    let (x, y) = (w.get(r, p), w.get(r, q));
                    w.set(r, p, c * x - s * y);
                    w.set(r, q, s * x + c * y);
                }
                for r in 0..n {
                    let (x, y) = (v.get(r, p), v.get(r, q));
                    v.set(r, p, c * x - s * y);
                    v.set(r, q, s * x + c * y);
                }
                mults += 4 * (m + n) as u64;
                adds += 2 * (m + n) as u64;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    flops::record(mults, adds);
    if !converged {
        return Err(Error::Solver {
            message: format!("Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps"),
            condition: f64::NAN,
        });
    }
    Ok((w, v))
}

/// Completes the columns of `q` whose index is in `missing` to an orthonormal set.
fn complete_orthonormal<T: Scalar>(q: &mut Matrix<T>, missing: &[usize]) {
    let m = q.rows();
    let mut basis: Vec<usize> = (0..q.cols()).filter(|c| !missing.contains(c)).collect();
    for &c in missing {
        let mut best: Option<(T, Vec<T>)> = None;
        for e in 0..m {
            let mut cand = vec![T::zero(); m];
            cand[e] = T::one();
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for &b in &basis {
                    let d: T = q.col(b).iter().zip(&cand).map(|(&x, &y)| x * y).sum();
                    for (ci, &bi) in cand.iter_mut().zip(q.col(b)) {
                        *ci -= d * bi;
                    }
                }
            }
            let norm = cand.iter().map(|&x| x * x).sum::<T>().sqrt();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                best = Some((norm, cand));
            }
        }
        let (norm, cand) = best.expect("matrix has at least one row");
        for (dst, &x) in q.col_mut(c).iter_mut().zip(&cand) {
            *dst = x / norm;
        }
        basis.push(c);
    }
}

/// Thin SVD of an `m x n` matrix.
pub fn svd<T: Scalar>(a: &Matrix<T>) -> Result<Svd<T>> {
    if a.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver {
            message: "SVD input has non-finite entries".into(),
            condition: f64::NAN,
        });
    }
    let transposed = a.rows() < a.cols();
    let work = if transposed { a.transpose() } else { a.clone() };
    let (m, n) = (work.rows(), work.cols());
    let (w, v) = jacobi_orthogonalize(&work)?;

    let norms: Vec<T> = (0..n)
        .map(|c| w.col(c).iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let k = n;
    let smax = norms.iter().cloned().fold(T::zero(), T::max);
    let null_tol = smax * T::epsilon() * T::of_usize(m.max(n));
    let mut u = Matrix::zeros(m, k);
    let mut vs = Matrix::zeros(n, k);
    let mut s = Vec::with_capacity(k);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        vs.col_mut(dst).copy_from_slice(v.col(src));
        if sigma > null_tol && sigma > T::zero() {
            for (o, &x) in u.col_mut(dst).iter_mut().zip(w.col(src)) {
                *o = x / sigma;
            }
        } else {
            missing.push(dst);
        }
    }
    if !missing.is_empty() {
        complete_orthonormal(&mut u, &missing);
    }
    Ok(if transposed {
        Svd { u: vs, s, v: u }
    } else {
        Svd { u, s, v: vs }
    })
}

/// Left singular vectors of `a` as a complete orthonormal `m x m` basis,
/// ordered by decreasing singular value (zero for the trailing ones when
/// `m > n`).
pub fn left_singular_basis<T: Scalar>(a: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>)> {
    let at = a.transpose();
    let (w, v) = jacobi_orthogonalize(&at)?;
    let m = a.rows();
    let norms: Vec<T> = (0..m)
        .map(|c| w.col(c).iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut u = Matrix::zeros(m, m);
    let mut s = Vec::with_capacity(m);
    for (dst, &src) in order.iter().enumerate() {
        u.col_mut(dst).copy_from_slice(v.col(src));
        s.push(norms[src]);
    }
    Ok((u, s))
}

/// Minimum-norm least-squares solution of `A x ≈ b`, with singular values
/// below `rcond * s_max` treated as zero. Returns the solution and the
/// condition estimate of the retained spectrum.
pub fn lstsq_min_norm<T: Scalar>(a: &Matrix<T>, b: &[T], rcond: f64) -> Result<(Vec<T>, f64)> {
    let dec = svd(a)?;
    let smax = dec.s.first().copied().unwrap_or(T::zero());
    let cut = smax * T::lit(rcond);
    let utb = dec.u.t_matvec(b)?;
    let mut x = vec![T::zero(); a.cols()];
    let mut smin = smax;
    for (k, &sk) in dec.s.iter().enumerate() {
        if sk > cut && sk > T::zero() {
            smin = smin.min(sk);
            let coef = utb[k] / sk;
            for (xi, &vi) in x.iter_mut().zip(dec.v.col(k)) {
                *xi += coef * vi;
            }
        }
    }
    let cond = if smin > T::zero() { (smax / smin).as_f64() } else { f64::INFINITY };
    Ok((x, cond))
}
