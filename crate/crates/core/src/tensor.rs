//! Dense tensor algebra over a real model of a tangent space.
//!
//! Complex dimension `n` is carried as real dimension `2n` with the complex
//! structure as an explicit matrix. All tensors are dense and stored in the
//! coordinates of the model space.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::Real;

/// Euclidean model of a tangent space: metric `g` and complex structure `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpace<T> {
    metric: Mat<T>,
    j: Mat<T>,
}

impl<T: Real> ModelSpace<T> {
    /// Validates the invariants at the default exact-algebra tolerance.
    pub fn new(metric: Mat<T>, j: Mat<T>) -> Result<Self> {
        Self::with_tolerance(metric, j, T::exact_tol())
    }

    /// Validates symmetry, positivity, `J² = −I` and `g(J·,J·) = g`, with the
    /// residuals scaled by the metric magnitude.
    pub fn with_tolerance(metric: Mat<T>, j: Mat<T>, tol: T) -> Result<Self> {
        let n = metric.rows();
        if !metric.is_square() {
            return Err(Error::InvalidModel("metric is not square".into()));
        }
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidModel(format!("real dimension {n} is not positive and even")));
        }
        if j.rows() != n || j.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: j.rows() });
        }
        let scale = metric.max_abs().max(T::one());
        let asym = (&metric - &metric.transpose()).max_abs();
        if asym > tol * scale {
            return Err(Error::InvalidModel(format!("metric not symmetric (residual {asym:e})")));
        }
        if metric.cholesky().is_none() {
            return Err(Error::InvalidModel("metric not positive definite".into()));
        }
        let jj = (&(&j * &j) + &Mat::identity(n)).max_abs();
        if jj > tol {
            return Err(Error::InvalidModel(format!("J^2 != -I (residual {jj:e})")));
        }
        let herm = (&(&(&j.transpose() * &metric) * &j) - &metric).max_abs();
        if herm > tol * scale {
            return Err(Error::InvalidModel(format!("metric not J-invariant (residual {herm:e})")));
        }
        Ok(Self { metric, j })
    }

    /// Flat `R^{2n}` with the identity metric and the standard complex structure.
    pub fn euclidean(complex_dim: usize) -> Self {
        Self { metric: Mat::identity(2 * complex_dim), j: standard_complex_structure(complex_dim) }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.metric.rows()
    }

    pub fn metric(&self) -> &Mat<T> {
        &self.metric
    }

    pub fn j(&self) -> &Mat<T> {
        &self.j
    }

    pub fn j_endo(&self) -> Endo<T> {
        Endo(self.j.clone())
    }

    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        linalg::dot(u, &self.metric.matvec(v))
    }

    pub fn norm(&self, u: &[T]) -> T {
        self.inner(u, u).sqrt()
    }

    pub fn apply_j(&self, u: &[T]) -> Vec<T> {
        self.j.matvec(u)
    }

    /// Gram matrix of a family of vectors.
    pub fn gram(&self, vectors: &[Vec<T>]) -> Mat<T> {
        Mat::from_fn(vectors.len(), vectors.len(), |a, b| self.inner(&vectors[a], &vectors[b]))
    }

    pub(crate) fn check_vector(&self, u: &[T]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.len() });
        }
        Ok(())
    }

    /// The same model expressed in a new basis (columns of `frame`).
    pub fn in_frame(&self, frame: &[Vec<T>], tol: T) -> Result<Self> {
        let f = Mat::from_columns(frame);
        let g = &(&f.transpose() * &self.metric) * &f;
        let finv = f.inverse().ok_or(Error::RankDeficient { rank: frame.len().saturating_sub(1), expected: frame.len() })?;
        let j = &(&finv * &self.j) * &f;
        Self::with_tolerance(g, j, tol)
    }
}

/// `J e_{2k} = e_{2k+1}`, `J e_{2k+1} = −e_{2k}`.
pub fn standard_complex_structure<T: Real>(complex_dim: usize) -> Mat<T> {
    let mut j = Mat::zeros(2 * complex_dim, 2 * complex_dim);
    for k in 0..complex_dim {
        j[(2 * k + 1, 2 * k)] = T::one();
        j[(2 * k, 2 * k + 1)] = -T::one();
    }
    j
}

/// Endomorphism of the model space; column `f` is the image of `e_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Endo<T>(pub Mat<T>);

impl<T: Real> Endo<T> {
    pub fn zeros(n: usize) -> Self {
        Self(Mat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n))
    }

    pub fn from_matrix(m: Mat<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
        }
        Ok(Self(m))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.0
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        self.0.matvec(v)
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.scale(s))
    }

    pub fn max_abs(&self) -> T {
        self.0.max_abs()
    }

    pub fn dist(&self, other: &Self) -> T {
        (&self.0 - &other.0).max_abs()
    }
}

/// `ab − ba`
pub fn commutator<T: Real>(a: &Endo<T>, b: &Endo<T>) -> Result<Endo<T>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(bracket(a, b))
}

pub(crate) fn bracket<T: Real>(a: &Endo<T>, b: &Endo<T>) -> Endo<T> {
    Endo(&(&a.0 * &b.0) - &(&b.0 * &a.0))
}

/// `a*` with `g(aE, F) = g(E, a*F)`, i.e. `G⁻¹ aᵀ G`.
pub fn metric_adjoint<T: Real>(a: &Endo<T>, m: &ModelSpace<T>) -> Result<Endo<T>> {
    if a.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: a.dim() });
    }
    let g = m.metric();
    let ginv = g.inverse().ok_or_else(|| Error::InvalidModel("singular metric".into()))?;
    Ok(Endo(&(&ginv * &a.0.transpose()) * g))
}

/// Gram–Schmidt with one reorthogonalization pass, in input order.
pub fn orthonormal_frame<T: Real>(m: &ModelSpace<T>, basis: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    for v in basis {
        m.check_vector(v)?;
    }
    let tol = T::rank_tol();
    let mut out: Vec<Vec<T>> = Vec::with_capacity(basis.len());
    let mut rank_deficient = false;
    for v in basis {
        let original = m.norm(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = m.inner(q, &w);
                linalg::axpy(-c, q, &mut w);
            }
        }
        let nw = m.norm(&w);
        if !(nw > tol * original) || original == T::zero() {
            rank_deficient = true;
            continue;
        }
        out.push(linalg::scaled(T::one() / nw, &w));
    }
    if rank_deficient {
        return Err(Error::RankDeficient { rank: out.len(), expected: basis.len() });
    }
    Ok(out)
}

/// Sup-norm deviation of a family's Gram matrix from the identity.
pub fn gram_residual<T: Real>(m: &ModelSpace<T>, vectors: &[Vec<T>]) -> T {
    (&m.gram(vectors) - &Mat::identity(vectors.len())).max_abs()
}

/// Dense rank-3 array indexed `(e, f, k)`.
///
/// For vector-valued bilinear maps `B` the convention is
/// `B(e_e, e_f) = Σ_k data[e,f,k] e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim * dim * dim] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut t = Self::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    t[(a, b, c)] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn from_vec(dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn max_abs(&self) -> T {
        linalg::max_abs(&self.data)
    }

    pub fn dist(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// `B(u, v)` as a vector.
    pub fn eval(&self, u: &[T], v: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut out = vec![T::zero(); n];
        for a in 0..n {
            if u[a] == T::zero() {
                continue;
            }
            for b in 0..n {
                let w = u[a] * v[b];
                if w == T::zero() {
                    continue;
                }
                for (c, o) in out.iter_mut().enumerate() {
                    *o += w * self[(a, b, c)];
                }
            }
        }
        out
    }

    /// The endomorphism `B(u, ·)`.
    pub fn first_slot(&self, u: &[T]) -> Endo<T> {
        let n = self.dim;
        let mut m = Mat::zeros(n, n);
        for f in 0..n {
            let col = self.eval(u, &linalg::unit(n, f));
            m.set_column(f, &col);
        }
        Endo(m)
    }

    /// Components in a new basis: `B'(f_a, f_b) = Σ_c B'[a,b,c] f_c`.
    pub fn in_frame(&self, frame: &[Vec<T>]) -> Option<Self> {
        let f = Mat::from_columns(frame);
        let finv = f.inverse()?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let v = finv.matvec(&self.eval(&frame[a], &frame[b]));
                for c in 0..n {
                    out[(a, b, c)] = v[c];
                }
            }
        }
        Some(out)
    }
}

impl<T> std::ops::Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = T;
    #[inline]
    fn index(&self, (a, b, c): (usize, usize, usize)) -> &T {
        &self.data[(a * self.dim + b) * self.dim + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize, usize)> for Tensor3<T> {
    #[inline]
    fn index_mut(&mut self, (a, b, c): (usize, usize, usize)) -> &mut T {
        &mut self.data[(a * self.dim + b) * self.dim + c]
    }
}

/// Dense rank-4 array indexed `(a, b, c, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor4<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim.pow(4)] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let mut t = Self::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for d in 0..dim {
                        t[(a, b, c, d)] = f(a, b, c, d);
                    }
                }
            }
        }
        t
    }

    pub fn from_vec(dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim.pow(4) {
            return Err(Error::DimensionMismatch { expected: dim.pow(4), found: data.len() });
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn max_abs(&self) -> T {
        linalg::max_abs(&self.data)
    }

    pub fn dist(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, data: linalg::add(&self.data, &other.data) }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { dim: self.dim, data: linalg::scaled(s, &self.data) }
    }

    /// Full multilinear evaluation.
    pub fn eval(&self, a: &[T], b: &[T], c: &[T], d: &[T]) -> T {
        let n = self.dim;
        let mut s = T::zero();
        for i in 0..n {
            if a[i] == T::zero() {
                continue;
            }
            for j in 0..n {
                let ab = a[i] * b[j];
                if ab == T::zero() {
                    continue;
                }
                for k in 0..n {
                    let abc = ab * c[k];
                    if abc == T::zero() {
                        continue;
                    }
                    for l in 0..n {
                        s += abc * d[l] * self[(i, j, k, l)];
                    }
                }
            }
        }
        s
    }

    /// Covariant pull-back onto a frame: `T'(a,b,c,d) = T(f_a, f_b, f_c, f_d)`.
    pub fn pullback(&self, frame: &[Vec<T>]) -> Self {
        let n = frame.len();
        // contract one slot at a time
        let m = self.dim;
        let f = Mat::from_columns(frame);
        let mut cur = self.data.clone();
        let mut dims = [m, m, m, m];
        for slot in 0..4 {
            let mut nd = dims;
            nd[slot] = n;
            let mut next = vec![T::zero(); nd.iter().product()];
            let idx = |d: &[usize; 4], i: [usize; 4]| ((i[0] * d[1] + i[1]) * d[2] + i[2]) * d[3] + i[3];
            for i0 in 0..nd[0] {
                for i1 in 0..nd[1] {
                    for i2 in 0..nd[2] {
                        for i3 in 0..nd[3] {
                            let out = [i0, i1, i2, i3];
                            let mut s = T::zero();
                            for k in 0..m {
                                let mut src = out;
                                src[slot] = k;
                                s += f[(k, out[slot])] * cur[idx(&dims, src)];
                            }
                            next[idx(&nd, out)] = s;
                        }
                    }
                }
            }
            cur = next;
            dims = nd;
        }
        Self { dim: n, data: cur }
    }
}

impl<T> std::ops::Index<(usize, usize, usize, usize)> for Tensor4<T> {
    type Output = T;
    #[inline]
    fn index(&self, (a, b, c, d): (usize, usize, usize, usize)) -> &T {
        let n = self.dim;
        &self.data[((a * n + b) * n + c) * n + d]
    }
}

impl<T> std::ops::IndexMut<(usize, usize, usize, usize)> for Tensor4<T> {
    #[inline]
    fn index_mut(&mut self, (a, b, c, d): (usize, usize, usize, usize)) -> &mut T {
        let n = self.dim;
        &mut self.data[((a * n + b) * n + c) * n + d]
    }
}

pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_matrix, random_vectors, seeded_rng};

    fn elementary(n: usize, i: usize, j: usize) -> Endo<f64> {
        let mut m = Mat::zeros(n, n);
        m[(i, j)] = 1.0;
        Endo(m)
    }

    fn so_gen(n: usize, i: usize, j: usize) -> Endo<f64> {
        elementary(n, i, j).sub(&elementary(n, j, i))
    }

    #[test]
    fn commutator_examples() {
        let m = ModelSpace::<f64>::euclidean(2);
        let j = m.j_endo();
        assert_eq!(commutator(&j, &j).unwrap().max_abs(), 0.0);
        let mut rng = seeded_rng(3);
        let a: Endo<f64> = Endo(random_matrix(&mut rng, 4));
        assert!(commutator(&a, &Endo::identity(4)).unwrap().max_abs() < 1e-15);
        // [E12 - E21, E13 - E31] = E32 - E23, checked entrywise by hand
        let c = commutator(&so_gen(3, 0, 1), &so_gen(3, 0, 2)).unwrap();
        let expected = so_gen(3, 2, 1);
        assert_eq!(c, expected);
        assert!(matches!(commutator(&Endo::<f64>::zeros(2), &Endo::zeros(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn adjoint_examples() {
        let m = ModelSpace::<f64>::euclidean(3);
        let adj_j = metric_adjoint(&m.j_endo(), &m).unwrap();
        assert!(adj_j.add(&m.j_endo()).max_abs() < 1e-15);
        let id = Endo::identity(6);
        assert_eq!(metric_adjoint(&id, &m).unwrap(), id);
        let mut rng = seeded_rng(11);
        let a = Endo(random_matrix(&mut rng, 6));
        let adj = metric_adjoint(&a, &m).unwrap();
        assert!((&adj.0 - &a.0.transpose()).max_abs() < 1e-14);
    }

    #[test]
    fn adjoint_defining_property_for_hermitian_metric() {
        // metric g = diag(2,2,1,1) is J-invariant for the standard J
        let g = Mat::from_fn(4, 4, |i, j| {
            if i == j {
                if i < 2 {
                    2.0
                } else {
                    1.0
                }
            } else {
                0.0
            }
        });
        let m = ModelSpace::new(g, standard_complex_structure(2)).unwrap();
        let mut rng = seeded_rng(5);
        let a: Endo<f64> = Endo(random_matrix(&mut rng, 4));
        let adj = metric_adjoint(&a, &m).unwrap();
        let vs: Vec<Vec<f64>> = random_vectors(&mut rng, 4, 2);
        let lhs = m.inner(&a.apply(&vs[0]), &vs[1]);
        let rhs = m.inner(&vs[0], &adj.apply(&vs[1]));
        assert!((lhs - rhs).abs() < 1e-13);
        assert!(metric_adjoint(&adj, &m).unwrap().dist(&a) < 1e-13);
    }

    #[test]
    fn frame_examples() {
        let m = ModelSpace::<f64>::euclidean(1);
        let std: Vec<Vec<f64>> = (0..2).map(|i| linalg::unit(2, i)).collect();
        assert_eq!(orthonormal_frame(&m, &std).unwrap(), std);
        let f = orthonormal_frame(&m, &[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(f, std);
        let m6 = ModelSpace::<f64>::euclidean(3);
        let mut rng = seeded_rng(7);
        let f = orthonormal_frame(&m6, &random_vectors(&mut rng, 6, 3)).unwrap();
        assert!(gram_residual(&m6, &f) < 1e-12);
        let again = orthonormal_frame(&m6, &f).unwrap();
        for (a, b) in f.iter().zip(&again) {
            assert!(linalg::max_abs(&linalg::sub(a, b)) < 1e-12);
        }
    }

    #[test]
    fn frame_reports_rank() {
        let m = ModelSpace::<f64>::euclidean(2);
        let err = orthonormal_frame(&m, &[vec![1.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]);
        assert!(matches!(err, Err(Error::RankDeficient { rank: 2, expected: 3 })));
    }

    #[test]
    fn model_space_rejects_bad_inputs() {
        let bad_j = Mat::<f64>::identity(2);
        assert!(ModelSpace::new(Mat::identity(2), bad_j).is_err());
        let non_herm = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
        assert!(ModelSpace::new(non_herm, standard_complex_structure(1)).is_err());
        let odd = Mat::<f64>::identity(3);
        assert!(ModelSpace::new(odd.clone(), odd).is_err());
    }

    #[test]
    fn pullback_matches_eval() {
        let mut rng = seeded_rng(1);
        let data: Vec<f64> = random_vectors(&mut rng, 81, 1).remove(0);
        let t = Tensor4::from_vec(3, data).unwrap();
        let frame = random_vectors(&mut rng, 3, 3);
        let p = t.pullback(&frame);
        let direct = t.eval(&frame[2], &frame[0], &frame[1], &frame[2]);
        assert!((p[(2, 0, 1, 2)] - direct).abs() < 1e-13);
    }
}
