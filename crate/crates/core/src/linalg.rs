//! Small dense linear algebra over [`Real`] scalars.
//!
//! Model dimensions stay below ~40 (flattened endomorphisms of a 6-space are
//! 36-vectors), so everything here is dense, row-major and allocation-light.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from a row-major vector. Panics on length mismatch.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "Mat::from_vec length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| cols[j][i])
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        max_abs(&self.data)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product.
    pub fn frobenius_dot(&self, other: &Self) -> T {
        dot(&self.data, &other.data)
    }

    /// Block copy of `rows × cols` starting at `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Solves `self · x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let n = self.rows;
        if !self.is_square() || b.len() != n {
            return None;
        }
        let mut a = self.clone();
        let mut x = b.to_vec();
        let scale = a.max_abs().max(T::min_positive_value());
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())?;
            if a[(p, k)].abs() <= scale * T::epsilon() * T::from_count(n) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                if f == T::zero() {
                    continue;
                }
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
                let xk = x[k];
                x[i] -= f * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= a[(k, j)] * x[j];
            }
            x[k] = s / a[(k, k)];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            inv.set_column(j, &self.solve(&e)?);
        }
        Some(inv)
    }

    /// Lower-triangular Cholesky factor, `None` unless symmetric positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.rows;
        if !self.is_square() {
            return None;
        }
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    /// Symmetric eigen-decomposition by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the matching orthonormal
    /// eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> (Vec<T>, Self) {
        let n = self.rows;
        assert!(self.is_square(), "symmetric_eigen needs a square matrix");
        let mut a = Self::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)]) * T::lit(0.5));
        let mut v = Self::identity(n);
        for _sweep in 0..100 {
            let mut off = T::zero();
            for i in 0..n {
                for j in i + 1..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
            if off <= T::epsilon() * T::epsilon() * (diag + off) || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
        let vals = order.iter().map(|&i| a[(i, i)]).collect();
        let vecs = Self::from_fn(n, n, |i, j| v[(i, order[j])]);
        (vals, vecs)
    }

    /// Singular values (descending) and right singular vectors (columns of
    /// the returned `cols × cols` matrix), by one-sided Jacobi.
    pub fn svd_right(&self) -> (Vec<T>, Self) {
        let n = self.cols;
        let m = self.rows.max(n);
        // Zero-padding to m >= n leaves singular values and right vectors unchanged.
        let mut u = Self::zeros(m, n);
        for i in 0..self.rows {
            for j in 0..n {
                u[(i, j)] = self[(i, j)];
            }
        }
        let mut v = Self::identity(n);
        let tol = T::epsilon() * T::from_count(m);
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for i in 0..m {
                        let up = u[(i, p)];
                        let uq = u[(i, q)];
                        alpha += up * up;
                        beta += uq * uq;
                        gamma += up * uq;
                    }
                    if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let up = u[(i, p)];
                        let uq = u[(i, q)];
                        u[(i, p)] = c * up - s * uq;
                        u[(i, q)] = s * up + c * uq;
                    }
                    for i in 0..n {
                        let vp = v[(i, p)];
                        let vq = v[(i, q)];
                        v[(i, p)] = c * vp - s * vq;
                        v[(i, q)] = s * vp + c * vq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let norms: Vec<T> = (0..n).map(|j| norm(&u.column(j))).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
        let sv = order.iter().map(|&j| norms[j]).collect();
        let vs = Self::from_fn(n, n, |i, j| v[(i, order[j])]);
        (sv, vs)
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add dimension mismatch");
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub dimension mismatch");
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<T: Real> Neg for &Mat<T> {
    type Output = Mat<T>;
    fn neg(self) -> Mat<T> {
        self.scale(-T::one())
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn max_abs<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// `y += s · x`
pub fn axpy<T: Real>(s: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn scaled<T: Real>(s: T, x: &[T]) -> Vec<T> {
    x.iter().map(|&v| s * v).collect()
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn unit<T: Real>(n: usize, i: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[i] = T::one();
    e
}

/// Orthonormal basis (Euclidean) of the span of `vectors`, taken from the
/// right singular vectors above the relative rank threshold.
pub fn span_basis<T: Real>(vectors: &[Vec<T>], dim: usize, rel_tol: T) -> Vec<Vec<T>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = Mat::from_rows(vectors);
    let (sv, v) = m.svd_right();
    let smax = sv.first().copied().unwrap_or(T::zero());
    if smax <= T::min_positive_value() {
        return Vec::new();
    }
    (0..dim).filter(|&j| sv[j] > rel_tol * smax).map(|j| v.column(j)).collect()
}

/// Orthonormal basis (Euclidean) of the null space of `m`.
pub fn null_space<T: Real>(m: &Mat<T>, rel_tol: T) -> Vec<Vec<T>> {
    let (sv, v) = m.svd_right();
    let smax = sv.first().copied().unwrap_or(T::zero());
    (0..m.cols()).filter(|&j| smax <= T::min_positive_value() || sv[j] <= rel_tol * smax).map(|j| v.column(j)).collect()
}
