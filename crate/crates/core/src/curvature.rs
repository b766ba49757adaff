//! Riemann curvature tensors with the sign convention
//! `R(X,Y) = ∇²_{Y,X} − ∇²_{X,Y}`, stored fully lowered:
//! `R(E,F,G,H) = g(R(E,F)G, H)`, so `R(X,Y,X,Y)` is the sectional curvature
//! of an orthonormal pair.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::Real;
use crate::tensor::{Endo, ModelSpace, Tensor4};

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor<T> {
    model: ModelSpace<T>,
    entries: Tensor4<T>,
    kahler: bool,
}

/// Sup-norm residuals of the algebraic curvature symmetries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryResiduals<T> {
    pub skew_first: T,
    pub skew_second: T,
    pub pair_symmetry: T,
    pub bianchi: T,
    /// `None` unless the tensor is flagged Kähler.
    pub kahler: Option<T>,
}

impl<T: Real> SymmetryResiduals<T> {
    pub fn max(&self) -> T {
        [self.skew_first, self.skew_second, self.pair_symmetry, self.bianchi, self.kahler.unwrap_or(T::zero())]
            .into_iter()
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> CurvatureTensor<T> {
    /// Wraps entries and checks every symmetry at `tol`.
    pub fn new(model: ModelSpace<T>, entries: Tensor4<T>, kahler: bool, tol: T) -> Result<Self> {
        let r = Self::from_entries(model, entries, kahler)?;
        let res = r.symmetry_residuals();
        if !(res.max() <= tol) {
            return Err(Error::InvalidModel(format!("curvature symmetries violated (residual {:e})", res.max())));
        }
        Ok(r)
    }

    /// Wraps entries without checking symmetries.
    pub fn from_entries(model: ModelSpace<T>, entries: Tensor4<T>, kahler: bool) -> Result<Self> {
        if entries.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), found: entries.dim() });
        }
        Ok(Self { model, entries, kahler })
    }

    pub fn zero(model: ModelSpace<T>) -> Self {
        let n = model.dim();
        Self { model, entries: Tensor4::zeros(n), kahler: true }
    }

    pub fn model(&self) -> &ModelSpace<T> {
        &self.model
    }

    pub fn entries(&self) -> &Tensor4<T> {
        &self.entries
    }

    pub fn is_kahler(&self) -> bool {
        self.kahler
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn component(&self, a: usize, b: usize, c: usize, d: usize) -> T {
        self.entries[(a, b, c, d)]
    }

    /// `R(E,F,G,H)`
    pub fn eval(&self, e: &[T], f: &[T], g: &[T], h: &[T]) -> T {
        self.entries.eval(e, f, g, h)
    }

    /// The endomorphism `R(E,F)` determined by `g(R(E,F)G, H) = R(E,F,G,H)`.
    pub fn operator(&self, e: &[T], f: &[T]) -> Endo<T> {
        let n = self.dim();
        let mut lowered = Mat::zeros(n, n);
        for k in 0..n {
            for l in 0..n {
                let mut s = T::zero();
                for a in 0..n {
                    if e[a] == T::zero() {
                        continue;
                    }
                    for b in 0..n {
                        s += e[a] * f[b] * self.entries[(a, b, k, l)];
                    }
                }
                lowered[(l, k)] = s;
            }
        }
        raise(&self.model, &lowered)
    }

    /// `R(E,F)G`
    pub fn apply(&self, e: &[T], f: &[T], g: &[T]) -> Vec<T> {
        self.operator(e, f).apply(g)
    }

    pub fn symmetry_residuals(&self) -> SymmetryResiduals<T> {
        let n = self.dim();
        let r = &self.entries;
        let mut res = SymmetryResiduals {
            skew_first: T::zero(),
            skew_second: T::zero(),
            pair_symmetry: T::zero(),
            bianchi: T::zero(),
            kahler: None,
        };
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = r[(a, b, c, d)];
                        res.skew_first = res.skew_first.max((v + r[(b, a, c, d)]).abs());
                        res.skew_second = res.skew_second.max((v + r[(a, b, d, c)]).abs());
                        res.pair_symmetry = res.pair_symmetry.max((v - r[(c, d, a, b)]).abs());
                        res.bianchi = res.bianchi.max((v + r[(b, c, a, d)] + r[(c, a, b, d)]).abs());
                    }
                }
            }
        }
        if self.kahler {
            let j = self.model.j();
            let cols = j.columns();
            let mut k = T::zero();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let ec = linalg::unit(n, c);
                        for d in 0..n {
                            let ed = linalg::unit(n, d);
                            let v = r.eval(&cols[a], &cols[b], &ec, &ed);
                            k = k.max((v - r[(a, b, c, d)]).abs());
                        }
                    }
                }
            }
            res.kahler = Some(k);
        }
        res
    }

    /// Components in the frame `frame` (covariant pull-back).
    pub fn in_frame(&self, frame: &[Vec<T>], tol: T) -> Result<Self> {
        let model = self.model.in_frame(frame, tol)?;
        Ok(Self { model, entries: self.entries.pullback(frame), kahler: self.kahler })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(Self { model: self.model.clone(), entries: self.entries.add(&other.entries), kahler: self.kahler && other.kahler })
    }

    /// Sup-norm of the entrywise difference.
    pub fn dist(&self, other: &Self) -> T {
        self.entries.dist(&other.entries)
    }
}

/// Turns a lowered bilinear matrix `M[l][k] = g(X e_k, e_l)` into `X`.
pub(crate) fn raise<T: Real>(model: &ModelSpace<T>, lowered: &Mat<T>) -> Endo<T> {
    let g = model.metric();
    let n = g.rows();
    let mut out = Mat::zeros(n, n);
    for k in 0..n {
        let col = lowered.column(k);
        let x = g.solve(&col).expect("metric is positive definite");
        out.set_column(k, &x);
    }
    Endo(out)
}

/// Kähler curvature tensor of constant holomorphic sectional curvature `c`:
/// `R(X,Y)Z = (c/4)[g(X,Z)Y − g(Y,Z)X + g(JX,Z)JY − g(JY,Z)JX + 2g(JX,Y)JZ]`.
pub fn const_hol_curvature<T: Real>(m: &ModelSpace<T>, c: T) -> CurvatureTensor<T> {
    let n = m.dim();
    let g = m.metric();
    // w[a][b] = g(J e_a, e_b)
    let w = &m.j().transpose() * g;
    let q = c / T::lit(4.0);
    let two = T::lit(2.0);
    let entries = Tensor4::from_fn(n, |x, y, z, t| {
        q * (g[(x, z)] * g[(y, t)] - g[(y, z)] * g[(x, t)] + w[(x, z)] * w[(y, t)] - w[(y, z)] * w[(x, t)]
            + two * w[(x, y)] * w[(z, t)])
    });
    CurvatureTensor { model: m.clone(), entries, kahler: true }
}

/// Sectional curvature of `span{X, Y}`.
pub fn sectional<T: Real>(r: &CurvatureTensor<T>, x: &[T], y: &[T]) -> Result<T> {
    let m = r.model();
    m.check_vector(x)?;
    m.check_vector(y)?;
    let xx = m.inner(x, x);
    let yy = m.inner(y, y);
    let xy = m.inner(x, y);
    let gram = xx * yy - xy * xy;
    if !(gram > T::rank_tol() * T::rank_tol() * xx * yy) {
        let rank = usize::from(xx > T::zero() || yy > T::zero());
        return Err(Error::RankDeficient { rank, expected: 2 });
    }
    Ok(r.eval(x, y, x, y) / gram)
}

/// `sectional(X, JX)`
pub fn holomorphic_sectional<T: Real>(r: &CurvatureTensor<T>, x: &[T]) -> Result<T> {
    let jx = r.model().apply_j(x);
    sectional(r, x, &jx)
}

/// `Ric^B(E,F) = Σ_k R(E, b_k, F, b_k)` as a matrix in the model basis.
pub fn ricci_restricted<T: Real>(r: &CurvatureTensor<T>, basis: &[Vec<T>]) -> Result<Mat<T>> {
    let m = r.model();
    for b in basis {
        m.check_vector(b)?;
    }
    check_orthonormal(m, basis)?;
    let n = r.dim();
    let mut out = Mat::zeros(n, n);
    for b in basis {
        for e in 0..n {
            for f in 0..n {
                let mut s = T::zero();
                for i in 0..n {
                    if b[i] == T::zero() {
                        continue;
                    }
                    for k in 0..n {
                        s += b[i] * b[k] * r.entries[(e, i, f, k)];
                    }
                }
                out[(e, f)] += s;
            }
        }
    }
    Ok(out)
}

/// Rejects families whose Gram matrix is not the identity within `1e-10`.
pub(crate) fn check_orthonormal<T: Real>(m: &ModelSpace<T>, basis: &[Vec<T>]) -> Result<()> {
    let res = crate::tensor::gram_residual(m, basis);
    if !(res <= T::lit(1e-10)) {
        return Err(Error::NotOrthonormal { residual: crate::tensor::to_f64(res) });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_vector, seeded_rng};
    use crate::tensor::orthonormal_frame;

    #[test]
    fn zero_curvature() {
        let m = ModelSpace::<f64>::euclidean(2);
        let r = const_hol_curvature(&m, 0.0);
        assert_eq!(r.entries().max_abs(), 0.0);
        let x = linalg::unit(4, 0);
        let y = linalg::unit(4, 2);
        assert_eq!(sectional(&r, &x, &y).unwrap(), 0.0);
        assert_eq!(ricci_restricted(&r, &[x]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn holomorphic_and_totally_real_planes() {
        let m = ModelSpace::<f64>::euclidean(3);
        let r = const_hol_curvature(&m, 4.0);
        let x = linalg::unit(6, 0);
        let jx = m.apply_j(&x);
        assert!((r.eval(&x, &jx, &x, &jx) - 4.0).abs() < 1e-14);
        assert!((holomorphic_sectional(&r, &x).unwrap() - 4.0).abs() < 1e-14);
        let y = linalg::unit(6, 2);
        assert!((sectional(&r, &x, &y).unwrap() - 1.0).abs() < 1e-14);
        let x2 = linalg::scaled(2.0, &x);
        assert!((sectional(&r, &x2, &y).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn operator_convention() {
        // R(X,JX)X = c JX for unit X
        let m = ModelSpace::<f64>::euclidean(2);
        let r = const_hol_curvature(&m, 4.0);
        let x = linalg::unit(4, 1);
        let jx = m.apply_j(&x);
        let v = r.apply(&x, &jx, &x);
        assert!(linalg::max_abs(&linalg::sub(&v, &linalg::scaled(4.0, &jx))) < 1e-14);
    }

    #[test]
    fn sectional_rejects_dependent_pair() {
        let m = ModelSpace::<f64>::euclidean(1);
        let r = const_hol_curvature(&m, 4.0);
        let x = vec![1.0, 2.0];
        assert!(matches!(sectional(&r, &x, &linalg::scaled(3.0, &x)), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn full_ricci_is_multiple_of_metric() {
        let m = ModelSpace::<f64>::euclidean(3);
        let r = const_hol_curvature(&m, 4.0);
        let basis: Vec<Vec<f64>> = (0..6).map(|i| linalg::unit(6, i)).collect();
        let ric = ricci_restricted(&r, &basis).unwrap();
        // direct summation oracle
        for e in 0..6 {
            for f in 0..6 {
                let s: f64 = (0..6).map(|k| r.component(e, k, f, k)).sum();
                assert!((ric[(e, f)] - s).abs() < 1e-14);
            }
        }
        assert!((&ric - &Mat::identity(6).scale(ric[(0, 0)])).max_abs() < 1e-13);
        assert!(ricci_restricted(&r, &[vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn const_hol_in_random_frame_keeps_constant() {
        let m = ModelSpace::<f64>::euclidean(2);
        let r = const_hol_curvature(&m, 3.0);
        let mut rng = seeded_rng(9);
        let frame = orthonormal_frame(&m, &(0..4).map(|_| random_vector(&mut rng, 4)).collect::<Vec<_>>()).unwrap();
        let moved = r.in_frame(&frame, 1e-12).unwrap();
        assert!(moved.symmetry_residuals().pair_symmetry < 1e-12);
        let x = random_vector(&mut rng, 4);
        assert!((holomorphic_sectional(&r, &x).unwrap() - 3.0).abs() < 1e-12);
    }
}
