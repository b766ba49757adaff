//! Lie algebras of endomorphisms: bracket closure of generators, stabilizers
//! of torsion and curvature, the Lie algebra `h ⊕ V` of an infinitesimal
//! model, and center / Killing form / irreducibility diagnostics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::sampling::seeded_rng;
use crate::scalar::Real;
use crate::tensor::{bracket, to_f64, Endo, Tensor3, Tensor4};

/// Default cap on bracket-closure rounds.
pub const MAX_CLOSURE_ROUNDS: usize = 20;
/// Number of seeded draws used by [`irreducibility_check`].
pub const IRREDUCIBILITY_DRAWS: usize = 8;

/// Structure constants `[e_p, e_q] = Σ_r c(p,q,r) e_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieConstants<T>(Tensor3<T>);

impl<T: Real> LieConstants<T> {
    pub fn new(c: Tensor3<T>) -> Self {
        Self(c)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn tensor(&self) -> &Tensor3<T> {
        &self.0
    }

    pub fn tensor_mut(&mut self) -> &mut Tensor3<T> {
        &mut self.0
    }

    /// `[x, y]` in coordinates.
    pub fn bracket(&self, x: &[T], y: &[T]) -> Vec<T> {
        self.0.eval(x, y)
    }

    /// Matrix of `ad_{e_p}`.
    pub fn ad(&self, p: usize) -> Mat<T> {
        let n = self.dim();
        Mat::from_fn(n, n, |r, q| self.0[(p, q, r)])
    }

    pub fn antisymmetry_residual(&self) -> T {
        let n = self.dim();
        let mut r = T::zero();
        for p in 0..n {
            for q in 0..n {
                for s in 0..n {
                    r = r.max((self.0[(p, q, s)] + self.0[(q, p, s)]).abs());
                }
            }
        }
        r
    }
}

/// Anything carrying structure constants.
pub trait HasStructure<T> {
    fn constants(&self) -> &LieConstants<T>;
}

impl<T> HasStructure<T> for LieConstants<T> {
    fn constants(&self) -> &LieConstants<T> {
        self
    }
}

/// Lie algebra of endomorphisms with a Frobenius-orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct EndoLieAlgebra<T> {
    ambient_dim: usize,
    basis: Vec<Endo<T>>,
    constants: LieConstants<T>,
}

impl<T> HasStructure<T> for EndoLieAlgebra<T> {
    fn constants(&self) -> &LieConstants<T> {
        &self.constants
    }
}

impl<T: Real> EndoLieAlgebra<T> {
    /// Wraps a Frobenius-orthonormal basis and computes structure constants,
    /// rejecting families that are not bracket-closed within `1e-10`.
    pub fn from_orthonormal_basis(ambient_dim: usize, basis: Vec<Endo<T>>) -> Result<Self> {
        for b in &basis {
            if b.dim() != ambient_dim {
                return Err(Error::DimensionMismatch { expected: ambient_dim, found: b.dim() });
            }
        }
        let d = basis.len();
        let mut c = Tensor3::zeros(d);
        let mut residual = T::zero();
        for p in 0..d {
            for q in 0..d {
                let br = bracket(&basis[p], &basis[q]);
                let coords = coordinates(&basis, &br);
                for (r, &x) in coords.iter().enumerate() {
                    c[(p, q, r)] = x;
                }
                residual = residual.max(br.dist(&combine(ambient_dim, &basis, &coords)));
            }
        }
        if !(residual <= T::lit(1e-10)) {
            return Err(Error::InvalidModel(format!("basis is not bracket-closed (residual {residual:e})")));
        }
        Ok(Self { ambient_dim, basis, constants: LieConstants(c) })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Endo<T>] {
        &self.basis
    }

    /// Coordinates of `m` in the basis (orthogonal projection).
    pub fn coordinates(&self, m: &Endo<T>) -> Vec<T> {
        coordinates(&self.basis, m)
    }

    /// Distance from `m` to the span of the basis.
    pub fn membership_residual(&self, m: &Endo<T>) -> T {
        m.dist(&combine(self.ambient_dim, &self.basis, &self.coordinates(m)))
    }

    /// Largest bracket decomposition residual over basis pairs.
    pub fn closure_residual(&self) -> T {
        let mut r = T::zero();
        for a in &self.basis {
            for b in &self.basis {
                r = r.max(self.membership_residual(&bracket(a, b)));
            }
        }
        r
    }
}

fn coordinates<T: Real>(basis: &[Endo<T>], m: &Endo<T>) -> Vec<T> {
    basis.iter().map(|b| b.matrix().frobenius_dot(m.matrix())).collect()
}

fn combine<T: Real>(n: usize, basis: &[Endo<T>], coords: &[T]) -> Endo<T> {
    let mut out = Endo::zeros(n);
    for (b, &c) in basis.iter().zip(coords) {
        out = out.add(&b.scale(c));
    }
    out
}

fn flatten<T: Real>(m: &Endo<T>) -> Vec<T> {
    m.matrix().as_slice().to_vec()
}

fn unflatten<T: Real>(n: usize, v: Vec<T>) -> Endo<T> {
    Endo(Mat::from_vec(n, n, v))
}

fn orthonormal_span<T: Real>(n: usize, mats: &[Endo<T>]) -> Vec<Endo<T>> {
    let vecs: Vec<Vec<T>> = mats.iter().map(flatten).collect();
    let scale = vecs.iter().fold(T::zero(), |s, v| s.max(linalg::max_abs(v)));
    if scale == T::zero() {
        return Vec::new();
    }
    linalg::span_basis(&vecs, n * n, T::rank_tol()).into_iter().map(|v| unflatten(n, v)).collect()
}

/// Smallest bracket-closed subspace containing `generators`.
pub fn hol_generate<T: Real>(generators: &[Endo<T>]) -> Result<EndoLieAlgebra<T>> {
    hol_generate_with_cap(generators, MAX_CLOSURE_ROUNDS)
}

pub fn hol_generate_with_cap<T: Real>(generators: &[Endo<T>], max_rounds: usize) -> Result<EndoLieAlgebra<T>> {
    let first = generators.first().ok_or_else(|| Error::InvalidParameter("empty generator list".into()))?;
    let n = first.dim();
    for g in generators {
        if g.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
        }
    }
    let mut basis = orthonormal_span(n, generators);
    for _ in 0..max_rounds {
        let mut all = basis.clone();
        for (i, a) in basis.iter().enumerate() {
            for b in &basis[i + 1..] {
                all.push(bracket(a, b));
            }
        }
        let next = orthonormal_span(n, &all);
        if next.len() == basis.len() {
            return EndoLieAlgebra::from_orthonormal_basis(n, next);
        }
        basis = next;
    }
    Err(Error::NonConvergence { rounds: max_rounds })
}

/// Torsion and curvature of an infinitesimal model on `R^dim` with its
/// Euclidean metric: `torsion[(i,j,k)]` is the `k`-th component of
/// `T(e_i, e_j)` and `curvature[(i,j,k,l)]` the `l`-th component of
/// `K_{e_i e_j} e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct InfinitesimalModel<T> {
    pub dim: usize,
    pub torsion: Tensor3<T>,
    pub curvature: Tensor4<T>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    dim: usize,
    torsion: Vec<f64>,
    curvature: Vec<f64>,
}

impl<T: Real> InfinitesimalModel<T> {
    pub fn new(dim: usize, torsion: Tensor3<T>, curvature: Tensor4<T>) -> Result<Self> {
        if torsion.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: torsion.dim() });
        }
        if curvature.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: curvature.dim() });
        }
        Ok(Self { dim, torsion, curvature })
    }

    pub fn flat(dim: usize) -> Self {
        Self { dim, torsion: Tensor3::zeros(dim), curvature: Tensor4::zeros(dim) }
    }

    /// `K_{e_i e_j}` as an endomorphism.
    pub fn curvature_op(&self, i: usize, j: usize) -> Endo<T> {
        let n = self.dim;
        Endo(Mat::from_fn(n, n, |l, k| self.curvature[(i, j, k, l)]))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelJson {
            dim: self.dim,
            torsion: self.torsion.as_slice().iter().map(|&x| to_f64(x)).collect(),
            curvature: self.curvature.as_slice().iter().map(|&x| to_f64(x)).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelJson = serde_json::from_str(s)?;
        if doc.dim == 0 {
            return Err(Error::Parse("dim must be positive".into()));
        }
        let conv = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
        let torsion = Tensor3::from_vec(doc.dim, conv(doc.torsion))?;
        let curvature = Tensor4::from_vec(doc.dim, conv(doc.curvature))?;
        Self::new(doc.dim, torsion, curvature)
    }
}

/// Derivation action of `a` on torsion and curvature:
/// `(a·T)(X,Y) = aT(X,Y) − T(aX,Y) − T(X,aY)` and
/// `(a·K)_{XY} = [a, K_{XY}] − K_{aX,Y} − K_{X,aY}`.
pub fn derivation_action<T: Real>(a: &Endo<T>, model: &InfinitesimalModel<T>) -> (Tensor3<T>, Tensor4<T>) {
    let n = model.dim;
    let am = a.matrix();
    let tor = &model.torsion;
    let dt = Tensor3::from_fn(n, |i, j, k| {
        let mut s = T::zero();
        for m in 0..n {
            s += am[(k, m)] * tor[(i, j, m)] - am[(m, i)] * tor[(m, j, k)] - am[(m, j)] * tor[(i, m, k)];
        }
        s
    });
    let ops: Vec<Vec<Endo<T>>> = (0..n).map(|i| (0..n).map(|j| model.curvature_op(i, j)).collect()).collect();
    let mut dk = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut m = bracket(a, &ops[i][j]);
            for p in 0..n {
                let (ci, cj) = (am[(p, i)], am[(p, j)]);
                if ci != T::zero() {
                    m = m.sub(&ops[p][j].scale(ci));
                }
                if cj != T::zero() {
                    m = m.sub(&ops[i][p].scale(cj));
                }
            }
            for k in 0..n {
                for l in 0..n {
                    dk[(i, j, k, l)] = m.matrix()[(l, k)];
                }
            }
        }
    }
    (dt, dk)
}

/// `max_a |a·T|, |a·K|` over the basis of `alg`.
pub fn annihilation_residual<T: Real>(alg: &EndoLieAlgebra<T>, model: &InfinitesimalModel<T>) -> T {
    alg.basis().iter().fold(T::zero(), |r, a| {
        let (dt, dk) = derivation_action(a, model);
        r.max(dt.max_abs()).max(dk.max_abs())
    })
}

/// `so(n)` basis `(E_ij − E_ji)/√2`, `i < j`.
pub fn so_basis<T: Real>(n: usize) -> Vec<Endo<T>> {
    let s = T::one() / T::lit(2.0).sqrt();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut m = Mat::zeros(n, n);
            m[(i, j)] = s;
            m[(j, i)] = -s;
            out.push(Endo(m));
        }
    }
    out
}

/// `h = {a ∈ so(n) : a·T = 0, a·K = 0}`.
pub fn stabilizer_h<T: Real>(v_dim: usize, torsion: &Tensor3<T>, curvature: &Tensor4<T>) -> Result<EndoLieAlgebra<T>> {
    let model = InfinitesimalModel::new(v_dim, torsion.clone(), curvature.clone())?;
    let so = so_basis::<T>(v_dim);
    if so.is_empty() {
        return EndoLieAlgebra::from_orthonormal_basis(v_dim, Vec::new());
    }
    let columns: Vec<Vec<T>> = so
        .iter()
        .map(|a| {
            let (dt, dk) = derivation_action(a, &model);
            dt.as_slice().iter().chain(dk.as_slice()).copied().collect()
        })
        .collect();
    let m = Mat::from_columns(&columns);
    let null = linalg::null_space(&m, T::rank_tol());
    let elems: Vec<Endo<T>> = null
        .iter()
        .map(|c| {
            let mut e = Endo::zeros(v_dim);
            for (a, &x) in so.iter().zip(c) {
                e = e.add(&a.scale(x));
            }
            e
        })
        .collect();
    EndoLieAlgebra::from_orthonormal_basis(v_dim, orthonormal_span(v_dim, &elems))
}

/// The Lie algebra `h ⊕ V` with `[X,Y] = −T(X,Y) + K_{XY}`, `[A,X] = AX`,
/// `[A,B] = AB − BA`; `h` first in the basis, then `e_1..e_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NomizuAlgebra<T> {
    pub h: EndoLieAlgebra<T>,
    pub v_dim: usize,
    pub torsion: Tensor3<T>,
    pub curvature: Tensor4<T>,
    constants: LieConstants<T>,
}

impl<T> HasStructure<T> for NomizuAlgebra<T> {
    fn constants(&self) -> &LieConstants<T> {
        &self.constants
    }
}

impl<T: Real> NomizuAlgebra<T> {
    pub fn dim(&self) -> usize {
        self.constants.dim()
    }
}

pub fn nomizu_build<T: Real>(
    h: &EndoLieAlgebra<T>,
    v_dim: usize,
    torsion: &Tensor3<T>,
    curvature: &Tensor4<T>,
) -> Result<NomizuAlgebra<T>> {
    if h.ambient_dim() != v_dim {
        return Err(Error::DimensionMismatch { expected: v_dim, found: h.ambient_dim() });
    }
    let model = InfinitesimalModel::new(v_dim, torsion.clone(), curvature.clone())?;
    let nh = h.dim();
    let n = nh + v_dim;
    let mut c = Tensor3::zeros(n);
    let hc = h.constants().tensor();
    for p in 0..nh {
        for q in 0..nh {
            for r in 0..nh {
                c[(p, q, r)] = hc[(p, q, r)];
            }
        }
        for i in 0..v_dim {
            let col = h.basis()[p].matrix().column(i);
            for (k, &x) in col.iter().enumerate() {
                c[(p, nh + i, nh + k)] = x;
                c[(nh + i, p, nh + k)] = -x;
            }
        }
    }
    let mut worst = T::zero();
    for i in 0..v_dim {
        for j in 0..v_dim {
            let kij = model.curvature_op(i, j);
            worst = worst.max(h.membership_residual(&kij));
            let coords = h.coordinates(&kij);
            for (p, &x) in coords.iter().enumerate() {
                c[(nh + i, nh + j, p)] = x;
            }
            for k in 0..v_dim {
                c[(nh + i, nh + j, nh + k)] = -torsion[(i, j, k)];
            }
        }
    }
    if !(worst <= T::lit(1e-8)) {
        return Err(Error::InconsistentModel { residual: to_f64(worst) });
    }
    Ok(NomizuAlgebra { h: h.clone(), v_dim, torsion: torsion.clone(), curvature: curvature.clone(), constants: LieConstants(c) })
}

/// Sup-norm of the Jacobiator over basis triples.
pub fn jacobi_residual<T: Real>(a: &impl HasStructure<T>) -> T {
    let c = a.constants();
    let n = c.dim();
    let t = c.tensor();
    let mut worst = T::zero();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for l in 0..n {
                    let mut s = T::zero();
                    for k in 0..n {
                        s += t[(x, y, k)] * t[(k, z, l)] + t[(y, z, k)] * t[(k, x, l)] + t[(z, x, k)] * t[(k, y, l)];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Basis (in algebra coordinates) of the center.
pub fn center<T: Real>(a: &impl HasStructure<T>) -> Vec<Vec<T>> {
    let c = a.constants();
    let n = c.dim();
    if n == 0 {
        return Vec::new();
    }
    let t = c.tensor();
    // row (q, r), column p: c(p, q, r)
    let m = Mat::from_fn(n * n, n, |row, p| t[(p, row / n, row % n)]);
    linalg::null_space(&m, T::rank_tol())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KillingVerdict {
    NegativeDefinite,
    Degenerate,
    Indefinite,
}

impl std::fmt::Display for KillingVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KillingVerdict::NegativeDefinite => "negative_definite",
            KillingVerdict::Degenerate => "degenerate",
            KillingVerdict::Indefinite => "indefinite",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KillingReport<T> {
    pub verdict: KillingVerdict,
    /// Ascending.
    pub eigenvalues: Vec<T>,
}

/// `B(x,y) = tr(ad_x ad_y)` classified with eigenvalue threshold `1e-8`.
pub fn killing_definiteness<T: Real>(a: &impl HasStructure<T>) -> KillingReport<T> {
    let c = a.constants();
    let n = c.dim();
    let t = c.tensor();
    let b = Mat::from_fn(n, n, |x, y| {
        let mut s = T::zero();
        for q in 0..n {
            for r in 0..n {
                s += t[(x, q, r)] * t[(y, r, q)];
            }
        }
        s
    });
    let (vals, _) = if n == 0 { (Vec::new(), Mat::zeros(0, 0)) } else { b.symmetric_eigen() };
    let thr = T::lit(1e-8);
    let verdict = if n == 0 || vals.iter().any(|v| v.abs() <= thr) {
        KillingVerdict::Degenerate
    } else if vals.iter().all(|&v| v < -thr) {
        KillingVerdict::NegativeDefinite
    } else {
        KillingVerdict::Indefinite
    };
    KillingReport { verdict, eigenvalues: vals }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Irreducibility<T> {
    Irreducible,
    /// A proper nonzero invariant subspace (orthonormal basis).
    Reducible {
        witness: Vec<Vec<T>>,
    },
}

impl<T> Irreducibility<T> {
    pub fn is_irreducible(&self) -> bool {
        matches!(self, Irreducibility::Irreducible)
    }
}

/// Searches for a proper invariant subspace of `subspace` by splitting it
/// along eigenspaces of random positive combinations `Σ cᵢ aᵢᵀaᵢ` and
/// closing single eigenvectors under the algebra.
pub fn irreducibility_check<T: Real>(alg: &EndoLieAlgebra<T>, subspace: &[Vec<T>], seed: u64) -> Result<Irreducibility<T>> {
    let n = alg.ambient_dim();
    for v in subspace {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
    }
    let q = linalg::span_basis(subspace, n, T::rank_tol());
    let d = q.len();
    let qm = Mat::from_columns(&q);
    let qt = qm.transpose();
    let mut restricted = Vec::with_capacity(alg.dim());
    for a in alg.basis() {
        let aq = a.matrix() * &qm;
        let back = &qm * &(&qt * &aq);
        let res = (&aq - &back).max_abs();
        if !(res <= T::lit(1e-10) * a.max_abs().max(T::one())) {
            return Err(Error::NotInvariant { residual: to_f64(res) });
        }
        restricted.push(&qt * &aq);
    }
    if d <= 1 {
        return Ok(Irreducibility::Irreducible);
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..IRREDUCIBILITY_DRAWS {
        let mut m = Mat::zeros(d, d);
        for a in &restricted {
            let c = T::lit(rng.gen_range(0.1..1.0));
            m = &m + &(&a.transpose() * a).scale(c);
        }
        let (vals, vecs) = m.symmetric_eigen();
        let scale = vals.iter().fold(T::one(), |s, v| s.max(v.abs()));
        let mut start = 0;
        while start < d {
            let mut end = start + 1;
            while end < d && (vals[end] - vals[start]).abs() <= T::lit(1e-8) * scale {
                end += 1;
            }
            let closure = krylov_closure(&restricted, vecs.column(start), d);
            if closure.len() < d {
                let witness = closure.iter().map(|c| qm.matvec(c)).collect();
                return Ok(Irreducibility::Reducible { witness });
            }
            start = end;
        }
    }
    Ok(Irreducibility::Irreducible)
}

fn krylov_closure<T: Real>(ops: &[Mat<T>], v: Vec<T>, d: usize) -> Vec<Vec<T>> {
    let mut span = vec![linalg::scaled(T::one() / linalg::norm(&v), &v)];
    loop {
        let mut all = span.clone();
        for s in &span {
            for a in ops {
                all.push(a.matvec(s));
            }
        }
        let next = linalg::span_basis(&all, d, T::rank_tol());
        if next.len() == span.len() || next.len() == d {
            return next;
        }
        span = next;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport<T> {
    pub regular: bool,
    pub h_center_dim: usize,
    pub g_center_dim: usize,
    pub killing: KillingReport<T>,
}

/// Regular iff both `Z(h)` and `Z(h ⊕ V)` vanish.
pub fn regularity_verdict<T: Real>(a: &NomizuAlgebra<T>) -> RegularityReport<T> {
    let h_center_dim = center(&a.h).len();
    let g_center_dim = center(a).len();
    RegularityReport {
        regular: h_center_dim == 0 && g_center_dim == 0,
        h_center_dim,
        g_center_dim,
        killing: killing_definiteness(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so3() -> EndoLieAlgebra<f64> {
        let b = so_basis::<f64>(3);
        hol_generate(&b[..2]).unwrap()
    }

    #[test]
    fn generate_examples() {
        let j = Endo(Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]));
        let a = hol_generate(&[j]).unwrap();
        assert_eq!(a.dim(), 1);
        assert_eq!(center(&a).len(), 1);
        assert_eq!(so3().dim(), 3);
        assert_eq!(hol_generate(&[Endo::<f64>::zeros(3)]).unwrap().dim(), 0);
        assert!(hol_generate::<f64>(&[]).is_err());
        assert!(matches!(hol_generate_with_cap(&so_basis::<f64>(3)[..2], 0), Err(Error::NonConvergence { rounds: 0 })));
    }

    #[test]
    fn so3_diagnostics() {
        let a = so3();
        assert!(jacobi_residual(&a) < 1e-12);
        assert!(center(&a).is_empty());
        assert_eq!(killing_definiteness(&a).verdict, KillingVerdict::NegativeDefinite);
        let r3: Vec<Vec<f64>> = (0..3).map(|i| linalg::unit(3, i)).collect();
        assert!(irreducibility_check(&a, &r3, 0).unwrap().is_irreducible());
    }

    #[test]
    fn flat_and_abelian_models() {
        let n = 3;
        let flat = InfinitesimalModel::<f64>::flat(n);
        let h = stabilizer_h(n, &flat.torsion, &flat.curvature).unwrap();
        assert_eq!(h.dim(), 3);
        let g = nomizu_build(&h, n, &flat.torsion, &flat.curvature).unwrap();
        assert_eq!(g.dim(), 6);
        assert!(jacobi_residual(&g) < 1e-12);
        let rep = regularity_verdict(&g);
        assert!(rep.regular && rep.h_center_dim == 0 && rep.g_center_dim == 0);

        let line = InfinitesimalModel::<f64>::flat(1);
        let h0 = stabilizer_h(1, &line.torsion, &line.curvature).unwrap();
        assert_eq!(h0.dim(), 0);
        let ab = nomizu_build(&h0, 1, &line.torsion, &line.curvature).unwrap();
        assert_eq!(center(&ab).len(), 1);
        assert_eq!(killing_definiteness(&ab).verdict, KillingVerdict::Degenerate);
        assert!(!regularity_verdict(&ab).regular);
    }

    #[test]
    fn flipped_sign_breaks_jacobi() {
        let mut c = so3().constants().clone();
        let v = c.tensor()[(0, 1, 2)];
        c.tensor_mut()[(0, 1, 2)] = -v;
        assert!(jacobi_residual(&c) > 1e-3);
    }

    #[test]
    fn reducible_examples() {
        let zero = hol_generate(&[Endo::<f64>::zeros(2)]).unwrap();
        let r2: Vec<Vec<f64>> = (0..2).map(|i| linalg::unit(2, i)).collect();
        match irreducibility_check(&zero, &r2, 1).unwrap() {
            Irreducibility::Reducible { witness } => assert_eq!(witness.len(), 1),
            Irreducibility::Irreducible => panic!("zero algebra is reducible"),
        }
        let mut a = Mat::zeros(4, 4);
        a[(0, 1)] = -1.0;
        a[(1, 0)] = 1.0;
        let mut b = Mat::zeros(4, 4);
        b[(2, 3)] = -1.0;
        b[(3, 2)] = 1.0;
        let alg = hol_generate(&[Endo(a), Endo(b)]).unwrap();
        let r4: Vec<Vec<f64>> = (0..4).map(|i| linalg::unit(4, i)).collect();
        match irreducibility_check(&alg, &r4, 2).unwrap() {
            Irreducibility::Reducible { witness } => assert_eq!(witness.len(), 2),
            Irreducibility::Irreducible => panic!("block algebra is reducible"),
        }
        let non_inv = vec![vec![1.0, 0.0, 1.0, 0.0]];
        assert!(matches!(irreducibility_check(&alg, &non_inv, 0), Err(Error::NotInvariant { .. })));
    }

    #[test]
    fn random_torsion_has_trivial_stabilizer() {
        let mut rng = seeded_rng(4);
        let n = 4;
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let x: f64 = rng.gen_range(-1.0..1.0);
                    t[(i, j, k)] = x;
                    t[(j, i, k)] = -x;
                }
            }
        }
        let h = stabilizer_h(n, &t, &Tensor4::zeros(n)).unwrap();
        assert_eq!(h.dim(), 0);
    }

    #[test]
    fn json_round_trip() {
        let m = InfinitesimalModel::<f64>::flat(2);
        let s = m.to_json().unwrap();
        assert_eq!(InfinitesimalModel::<f64>::from_json(&s).unwrap(), m);
        assert!(InfinitesimalModel::<f64>::from_json("{\"dim\": 2}").is_err());
        assert!(InfinitesimalModel::<f64>::from_json("{\"dim\": 2, \"torsion\": [0], \"curvature\": []}").is_err());
    }
}
