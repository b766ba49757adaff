//! Pointwise algebra of a complex Riemannian foliation: the splitting
//! `TM = V ⊕ H`, the O'Neill tensors `A` and `T`, the operators `γ_V`, and
//! the curvature identities built from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curvature::{check_orthonormal, CurvatureTensor};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::Real;
use crate::tensor::{bracket, orthonormal_frame, to_f64, Endo, ModelSpace, Tensor3, Tensor4};

/// Named sup-norm residuals, iterated in name order.
pub type Residuals<T> = BTreeMap<&'static str, T>;

/// Threshold below which a tensor counts as zero for classification.
pub const ZERO_THRESHOLD: f64 = 1e-10;

/// A `g`-orthogonal, `J`-invariant splitting of the model space.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitTangent<T> {
    model: ModelSpace<T>,
    vertical: Vec<Vec<T>>,
    horizontal: Vec<Vec<T>>,
    p_v: Mat<T>,
    p_h: Mat<T>,
}

impl<T: Real> SplitTangent<T> {
    /// Orthonormalizes both bases and checks orthogonality, completeness and
    /// `J`-invariance at `tol`.
    pub fn new(model: ModelSpace<T>, vertical_basis: &[Vec<T>], horizontal_basis: &[Vec<T>], tol: T) -> Result<Self> {
        let n = model.dim();
        if vertical_basis.len() + horizontal_basis.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: vertical_basis.len() + horizontal_basis.len() });
        }
        let vertical = if vertical_basis.is_empty() { Vec::new() } else { orthonormal_frame(&model, vertical_basis)? };
        let horizontal = if horizontal_basis.is_empty() { Vec::new() } else { orthonormal_frame(&model, horizontal_basis)? };
        let p_v = projector(&model, &vertical);
        let p_h = projector(&model, &horizontal);
        let mut cross = T::zero();
        for v in &vertical {
            for h in &horizontal {
                cross = cross.max(model.inner(v, h).abs());
            }
        }
        if !(cross <= tol) {
            return Err(Error::NotOrthonormal { residual: to_f64(cross) });
        }
        let split = Self { model, vertical, horizontal, p_v, p_h };
        for v in &split.vertical {
            let r = linalg::max_abs(&split.horizontal_part(&split.model.apply_j(v)));
            if !(r <= tol) {
                return Err(Error::InvalidModel(format!("vertical space not J-invariant (residual {r:e})")));
            }
        }
        for h in &split.horizontal {
            let r = linalg::max_abs(&split.vertical_part(&split.model.apply_j(h)));
            if !(r <= tol) {
                return Err(Error::InvalidModel(format!("horizontal space not J-invariant (residual {r:e})")));
            }
        }
        Ok(split)
    }

    pub fn model(&self) -> &ModelSpace<T> {
        &self.model
    }

    /// `g`-orthonormal basis of `V`.
    pub fn vertical(&self) -> &[Vec<T>] {
        &self.vertical
    }

    /// `g`-orthonormal basis of `H`.
    pub fn horizontal(&self) -> &[Vec<T>] {
        &self.horizontal
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn dim_v(&self) -> usize {
        self.vertical.len()
    }

    pub fn dim_h(&self) -> usize {
        self.horizontal.len()
    }

    /// Horizontal basis followed by vertical basis.
    pub fn adapted_frame(&self) -> Vec<Vec<T>> {
        self.horizontal.iter().chain(&self.vertical).cloned().collect()
    }

    pub fn p_v(&self) -> &Mat<T> {
        &self.p_v
    }

    pub fn p_h(&self) -> &Mat<T> {
        &self.p_h
    }

    pub fn vertical_part(&self, u: &[T]) -> Vec<T> {
        self.p_v.matvec(u)
    }

    pub fn horizontal_part(&self, u: &[T]) -> Vec<T> {
        self.p_h.matvec(u)
    }

    pub(crate) fn require_vertical(&self, u: &[T]) -> Result<()> {
        self.model.check_vector(u)?;
        let r = self.model.norm(&self.horizontal_part(u));
        if !(r <= T::lit(1e-10) * self.model.norm(u).max(T::one())) {
            return Err(Error::NotVertical { residual: to_f64(r) });
        }
        Ok(())
    }

    pub(crate) fn require_horizontal(&self, u: &[T]) -> Result<()> {
        self.model.check_vector(u)?;
        let r = self.model.norm(&self.vertical_part(u));
        if !(r <= T::lit(1e-10) * self.model.norm(u).max(T::one())) {
            return Err(Error::NotHorizontal { residual: to_f64(r) });
        }
        Ok(())
    }

    /// Orthogonal direct sum with `other` (coordinates of `self` first).
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let (n1, n2) = (self.dim(), other.dim());
        let g = block_diag(self.model.metric(), other.model.metric());
        let j = block_diag(self.model.j(), other.model.j());
        let model = ModelSpace::new(g, j)?;
        let lift1 = |v: &Vec<T>| v.iter().copied().chain(std::iter::repeat_n(T::zero(), n2)).collect::<Vec<_>>();
        let lift2 = |v: &Vec<T>| std::iter::repeat_n(T::zero(), n1).chain(v.iter().copied()).collect::<Vec<_>>();
        let vb: Vec<Vec<T>> = self.vertical.iter().map(lift1).chain(other.vertical.iter().map(lift2)).collect();
        let hb: Vec<Vec<T>> = self.horizontal.iter().map(lift1).chain(other.horizontal.iter().map(lift2)).collect();
        Self::new(model, &vb, &hb, T::exact_tol())
    }
}

fn projector<T: Real>(m: &ModelSpace<T>, onb: &[Vec<T>]) -> Mat<T> {
    let n = m.dim();
    let mut p = Mat::zeros(n, n);
    for v in onb {
        let gv = m.metric().matvec(v);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] += v[i] * gv[j];
            }
        }
    }
    p
}

fn block_diag<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let (n1, n2) = (a.rows(), b.rows());
    Mat::from_fn(n1 + n2, n1 + n2, |i, j| {
        if i < n1 && j < n1 {
            a[(i, j)]
        } else if i >= n1 && j >= n1 {
            b[(i - n1, j - n1)]
        } else {
            T::zero()
        }
    })
}

/// Pointwise O'Neill tensors, stored as `A(E,F) = A_E F` and `T(E,F) = T_E F`
/// for all `E, F` (so `A_V = 0` and `T_X = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct ONeillTensors<T> {
    split: SplitTangent<T>,
    a: Tensor3<T>,
    t: Tensor3<T>,
    parallel_mode: bool,
}

/// Residuals of the structural invariants of [`ONeillTensors`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ONeillInvariants<T> {
    pub a_skew: T,
    pub t_skew: T,
    pub t_symmetric_on_v: T,
    pub a_alternating_on_h: T,
    pub a_slots: T,
    pub t_slots: T,
}

impl<T: Real> ONeillInvariants<T> {
    pub fn max(&self) -> T {
        [self.a_skew, self.t_skew, self.t_symmetric_on_v, self.a_alternating_on_h, self.a_slots, self.t_slots]
            .into_iter()
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> ONeillTensors<T> {
    /// Checks all invariants at `tol`.
    pub fn new(split: SplitTangent<T>, a: Tensor3<T>, t: Tensor3<T>, parallel_mode: bool, tol: T) -> Result<Self> {
        let out = Self::new_unchecked(split, a, t, parallel_mode)?;
        let inv = out.invariant_residuals();
        if !(inv.max() <= tol) {
            return Err(Error::InvalidModel(format!("O'Neill invariants violated (residual {:e})", inv.max())));
        }
        Ok(out)
    }

    /// Skips invariant checks; used for perturbation probes.
    pub fn new_unchecked(split: SplitTangent<T>, a: Tensor3<T>, t: Tensor3<T>, parallel_mode: bool) -> Result<Self> {
        let n = split.dim();
        for x in [&a, &t] {
            if x.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: x.dim() });
            }
        }
        Ok(Self { split, a, t, parallel_mode })
    }

    pub fn split(&self) -> &SplitTangent<T> {
        &self.split
    }

    pub fn model(&self) -> &ModelSpace<T> {
        self.split.model()
    }

    pub fn a_tensor(&self) -> &Tensor3<T> {
        &self.a
    }

    pub fn t_tensor(&self) -> &Tensor3<T> {
        &self.t
    }

    pub fn parallel_mode(&self) -> bool {
        self.parallel_mode
    }

    pub fn with_parallel_mode(mut self, on: bool) -> Self {
        self.parallel_mode = on;
        self
    }

    /// `A_E F`
    pub fn a(&self, e: &[T], f: &[T]) -> Vec<T> {
        self.a.eval(e, f)
    }

    /// `T_E F`
    pub fn t(&self, e: &[T], f: &[T]) -> Vec<T> {
        self.t.eval(e, f)
    }

    /// The endomorphism `A_E`.
    pub fn a_op(&self, e: &[T]) -> Endo<T> {
        self.a.first_slot(e)
    }

    /// The endomorphism `T_E`.
    pub fn t_op(&self, e: &[T]) -> Endo<T> {
        self.t.first_slot(e)
    }

    pub fn invariant_residuals(&self) -> ONeillInvariants<T> {
        let m = self.model();
        let n = m.dim();
        let basis: Vec<Vec<T>> = (0..n).map(|i| linalg::unit(n, i)).collect();
        let hb = self.split.horizontal();
        let vb = self.split.vertical();
        let mut inv = ONeillInvariants {
            a_skew: T::zero(),
            t_skew: T::zero(),
            t_symmetric_on_v: T::zero(),
            a_alternating_on_h: T::zero(),
            a_slots: T::zero(),
            t_slots: T::zero(),
        };
        for e in &basis {
            let ae = self.a_op(e);
            let te = self.t_op(e);
            let g = m.metric();
            let sa = &(&ae.0.transpose() * g) + &(g * &ae.0);
            let st = &(&te.0.transpose() * g) + &(g * &te.0);
            inv.a_skew = inv.a_skew.max(sa.max_abs());
            inv.t_skew = inv.t_skew.max(st.max_abs());
        }
        let vpart = |u: &[T]| m.norm(&self.split.vertical_part(u));
        let hpart = |u: &[T]| m.norm(&self.split.horizontal_part(u));
        for v in vb {
            for w in vb {
                let d = linalg::sub(&self.t(v, w), &self.t(w, v));
                inv.t_symmetric_on_v = inv.t_symmetric_on_v.max(m.norm(&d));
                inv.t_slots = inv.t_slots.max(vpart(&self.t(v, w)));
            }
            for x in hb {
                inv.t_slots = inv.t_slots.max(hpart(&self.t(v, x)));
                inv.a_slots = inv.a_slots.max(m.norm(&self.a(v, x))).max(vpart(&self.a(x, v)));
            }
            inv.a_slots = inv.a_slots.max(self.a_op(v).max_abs());
        }
        for x in hb {
            for y in hb {
                let s = linalg::add(&self.a(x, y), &self.a(y, x));
                inv.a_alternating_on_h = inv.a_alternating_on_h.max(m.norm(&s));
                inv.a_slots = inv.a_slots.max(hpart(&self.a(x, y)));
            }
            inv.t_slots = inv.t_slots.max(self.t_op(x).max_abs());
        }
        inv
    }

    /// Orthogonal direct sum of two foliations.
    pub fn block_sum(&self, other: &Self) -> Result<Self> {
        let split = self.split.direct_sum(&other.split)?;
        let (n1, n2) = (self.split.dim(), other.split.dim());
        let n = n1 + n2;
        let embed = |x: &Tensor3<T>, y: &Tensor3<T>| {
            let mut out = Tensor3::zeros(n);
            for a in 0..n1 {
                for b in 0..n1 {
                    for c in 0..n1 {
                        out[(a, b, c)] = x[(a, b, c)];
                    }
                }
            }
            for a in 0..n2 {
                for b in 0..n2 {
                    for c in 0..n2 {
                        out[(n1 + a, n1 + b, n1 + c)] = y[(a, b, c)];
                    }
                }
            }
            out
        };
        Ok(Self {
            split,
            a: embed(&self.a, &other.a),
            t: embed(&self.t, &other.t),
            parallel_mode: self.parallel_mode && other.parallel_mode,
        })
    }

    /// Components of both tensors in the adapted frame (horizontal first).
    pub fn in_adapted_frame(&self, tol: T) -> Result<Self> {
        let frame = self.split.adapted_frame();
        let model = self.model().in_frame(&frame, tol)?;
        let a = self.a.in_frame(&frame).ok_or_else(|| Error::DegenerateFrame("adapted frame singular".into()))?;
        let t = self.t.in_frame(&frame).ok_or_else(|| Error::DegenerateFrame("adapted frame singular".into()))?;
        let n = frame.len();
        let dh = self.split.dim_h();
        let hb: Vec<Vec<T>> = (0..dh).map(|i| linalg::unit(n, i)).collect();
        let vb: Vec<Vec<T>> = (dh..n).map(|i| linalg::unit(n, i)).collect();
        let split = SplitTangent::new(model, &vb, &hb, tol)?;
        Ok(Self { split, a, t, parallel_mode: self.parallel_mode })
    }

    pub(crate) fn gamma_raw(&self, v: &[T]) -> Endo<T> {
        let n = self.model().dim();
        let ph = self.split.p_h();
        let mut m = Mat::zeros(n, n);
        for f in 0..n {
            let col = self.a(&ph.column(f), v);
            m.set_column(f, &col);
        }
        Endo(m)
    }
}

/// `γ_V X = A_X V` on `H`, extended by zero on `V`.
pub fn gamma<T: Real>(t: &ONeillTensors<T>, v: &[T]) -> Result<Endo<T>> {
    t.split.require_vertical(v)?;
    Ok(t.gamma_raw(v))
}

/// Residuals of the complex-type identities of `A` and `T`, over frame
/// vectors `X, Y ∈ H` and `V, W ∈ V`.
pub fn type_identity_residuals<T: Real>(t: &ONeillTensors<T>) -> Residuals<T> {
    let m = t.model();
    let hb = t.split.horizontal();
    let vb = t.split.vertical();
    let j = |u: &[T]| m.apply_j(u);
    let diff = |a: Vec<T>, b: Vec<T>| linalg::max_abs(&linalg::sub(&a, &b));
    let sum = |a: Vec<T>, b: Vec<T>| linalg::max_abs(&linalg::add(&a, &b));
    let mut r = Residuals::new();
    let mut put = |k: &'static str, v: T| {
        let e = r.entry(k).or_insert(T::zero());
        *e = e.max(v);
    };
    for name in ["a_x_jy", "a_jx_v", "a_x_jv", "t_jv_w", "t_jv_x", "t_v_jx", "a_jx_jy", "t_jv_jw"] {
        put(name, T::zero());
    }
    for x in hb {
        let jx = j(x);
        for y in hb {
            put("a_x_jy", diff(t.a(x, &j(y)), j(&t.a(x, y))));
            put("a_jx_jy", sum(t.a(&jx, &j(y)), t.a(x, y)));
        }
        for v in vb {
            put("a_jx_v", sum(t.a(&jx, v), j(&t.a(x, v))));
            put("a_x_jv", diff(j(&t.a(x, v)), t.a(x, &j(v))));
        }
    }
    for v in vb {
        let jv = j(v);
        for w in vb {
            put("t_jv_w", diff(t.t(&jv, w), j(&t.t(v, w))));
            put("t_jv_jw", sum(t.t(&jv, &j(w)), t.t(v, w)));
        }
        for x in hb {
            put("t_jv_x", sum(t.t(&jv, x), j(&t.t(v, x))));
            put("t_v_jx", diff(j(&t.t(v, x)), t.t(v, &j(x))));
        }
    }
    r
}

/// `max |g(A_X Y, T_V Z)|` over frame vectors.
pub fn lemma_l1_algebraic_residual<T: Real>(t: &ONeillTensors<T>) -> T {
    let m = t.model();
    let hb = t.split.horizontal();
    let vb = t.split.vertical();
    let mut r = T::zero();
    for x in hb {
        for y in hb {
            let axy = t.a(x, y);
            for v in vb {
                for z in hb {
                    r = r.max(m.inner(&axy, &t.t(v, z)).abs());
                }
            }
        }
    }
    r
}

/// Slot pattern of a curvature component filled from `A` and `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotPattern {
    /// `R(X,Y,Z,V)`
    Xyzv,
    /// `R(V,W,X,Y)`
    Vwxy,
    /// `R(V,X,W,Y)`
    Vxwy,
}

impl SlotPattern {
    pub const ALL: [SlotPattern; 3] = [SlotPattern::Xyzv, SlotPattern::Vwxy, SlotPattern::Vxwy];

    pub fn name(self) -> &'static str {
        match self {
            SlotPattern::Xyzv => "xyzv",
            SlotPattern::Vwxy => "vwxy",
            SlotPattern::Vxwy => "vxwy",
        }
    }
}

/// Curvature components known from `A` and `T`, in the adapted frame
/// (horizontal basis first, then vertical).
#[derive(Clone, Debug, PartialEq)]
pub struct PartialCurvature<T> {
    frame: Vec<Vec<T>>,
    model: ModelSpace<T>,
    entries: Tensor4<T>,
    mask: Vec<Option<SlotPattern>>,
}

impl<T: Real> PartialCurvature<T> {
    pub fn frame(&self) -> &[Vec<T>] {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Option<T> {
        self.pattern(a, b, c, d).map(|_| self.entries[(a, b, c, d)])
    }

    pub fn pattern(&self, a: usize, b: usize, c: usize, d: usize) -> Option<SlotPattern> {
        let n = self.dim();
        self.mask[((a * n + b) * n + c) * n + d]
    }

    pub fn filled_count(&self) -> usize {
        self.mask.iter().filter(|m| m.is_some()).count()
    }

    fn set(&mut self, idx: [usize; 4], value: T, p: SlotPattern) {
        let [a, b, c, d] = idx;
        let images = [
            ([a, b, c, d], value),
            ([b, a, c, d], -value),
            ([a, b, d, c], -value),
            ([b, a, d, c], value),
            ([c, d, a, b], value),
            ([d, c, a, b], -value),
            ([c, d, b, a], -value),
            ([d, c, b, a], value),
        ];
        let n = self.dim();
        for ([i, j, k, l], v) in images {
            self.entries[(i, j, k, l)] = v;
            self.mask[((i * n + j) * n + k) * n + l] = Some(p);
        }
    }

    /// Sup-norm mismatch against `r` on each covered pattern.
    pub fn compare(&self, r: &CurvatureTensor<T>) -> Residuals<T> {
        let pulled = r.entries().pullback(&self.frame);
        let n = self.dim();
        let mut out: Residuals<T> = SlotPattern::ALL.iter().map(|p| (p.name(), T::zero())).collect();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        if let Some(p) = self.pattern(a, b, c, d) {
                            let e = out.get_mut(p.name()).expect("pattern key");
                            *e = e.max((self.entries[(a, b, c, d)] - pulled[(a, b, c, d)]).abs());
                        }
                    }
                }
            }
        }
        out
    }

    /// Full tensor in the adapted frame: covered components from `A` and
    /// `T`, the rest from `r`.
    pub fn complete_with(&self, r: &CurvatureTensor<T>) -> Result<CurvatureTensor<T>> {
        let pulled = r.entries().pullback(&self.frame);
        let n = self.dim();
        let entries = Tensor4::from_fn(n, |a, b, c, d| self.get(a, b, c, d).unwrap_or(pulled[(a, b, c, d)]));
        CurvatureTensor::from_entries(self.model.clone(), entries, r.is_kahler())
    }
}

/// Curvature components algebraic in `A` and `T` when the Bott derivatives
/// of both vanish.
#[allow(non_snake_case)]
pub fn curvature_from_AT<T: Real>(t: &ONeillTensors<T>) -> Result<PartialCurvature<T>> {
    if !t.parallel_mode {
        return Err(Error::ParallelModeRequired);
    }
    let m = t.model();
    let frame = t.split.adapted_frame();
    let model = m.in_frame(&frame, T::lit(1e-8))?;
    let n = frame.len();
    let dh = t.split.dim_h();
    let mut pc = PartialCurvature { frame: frame.clone(), model, entries: Tensor4::zeros(n), mask: vec![None; n.pow(4)] };
    let hi = 0..dh;
    let vi = dh..n;
    let ip = |a: &[T], b: &[T]| m.inner(a, b);
    for x in hi.clone() {
        for y in hi.clone() {
            for z in hi.clone() {
                for v in vi.clone() {
                    pc.set([x, y, z, v], T::zero(), SlotPattern::Xyzv);
                }
            }
        }
    }
    for v in vi.clone() {
        for w in vi.clone() {
            for x in hi.clone() {
                for y in hi.clone() {
                    let (fv, fw, fx, fy) = (&frame[v], &frame[w], &frame[x], &frame[y]);
                    let vwxy = ip(&t.a(fx, fv), &t.a(fy, fw)) - ip(&t.a(fx, fw), &t.a(fy, fv)) - ip(&t.t(fv, fx), &t.t(fw, fy))
                        + ip(&t.t(fw, fx), &t.t(fv, fy));
                    pc.set([v, w, x, y], vwxy, SlotPattern::Vwxy);
                }
            }
        }
    }
    for v in vi.clone() {
        for x in hi.clone() {
            for w in vi.clone() {
                for y in hi.clone() {
                    let (fv, fw, fx, fy) = (&frame[v], &frame[w], &frame[x], &frame[y]);
                    let vxwy = ip(&t.a(fx, fv), &t.a(fy, fw)) - ip(&t.t(fv, fx), &t.t(fw, fy));
                    pc.set([v, x, w, y], vxwy, SlotPattern::Vxwy);
                }
            }
        }
    }
    Ok(pc)
}

/// Orthonormal, `J`-adapted bases of `V₁ = span A(H,H)` and `V₀ = V₁^⊥ ∩ V`.
pub fn v1_subspace<T: Real>(t: &ONeillTensors<T>) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let split = &t.split;
    let m = t.model();
    let vb = split.vertical();
    let hb = split.horizontal();
    let coords = |u: &[T]| vb.iter().map(|v| m.inner(v, u)).collect::<Vec<T>>();
    let mut images = Vec::new();
    for x in hb {
        for y in hb {
            images.push(coords(&t.a(x, y)));
        }
    }
    let scale = images.iter().fold(T::zero(), |s, c| s.max(linalg::max_abs(c)));
    let span = if scale > T::lit(ZERO_THRESHOLD) { linalg::span_basis(&images, vb.len(), T::rank_tol()) } else { Vec::new() };
    let lift = |c: &[T]| {
        let mut u = vec![T::zero(); m.dim()];
        for (ck, v) in c.iter().zip(vb) {
            linalg::axpy(*ck, v, &mut u);
        }
        u
    };
    let candidates: Vec<Vec<T>> = span.iter().map(|c| lift(c)).collect();
    let v1 = j_adapted(m, &[], &candidates);
    let v0 = j_adapted(m, &v1, vb);
    (v1, v0)
}

/// Greedy `J`-adapted orthonormal completion of `start` by `candidates`.
pub(crate) fn j_adapted<T: Real>(m: &ModelSpace<T>, start: &[Vec<T>], candidates: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut all: Vec<Vec<T>> = start.to_vec();
    let mut out = Vec::new();
    let push = |u: &[T], all: &mut Vec<Vec<T>>, out: &mut Vec<Vec<T>>| -> bool {
        let mut w = u.to_vec();
        for _ in 0..2 {
            for q in all.iter() {
                let c = m.inner(q, &w);
                linalg::axpy(-c, q, &mut w);
            }
        }
        let nw = m.norm(&w);
        if nw > T::lit(1e-6) * m.norm(u).max(T::min_positive_value()) {
            let q = linalg::scaled(T::one() / nw, &w);
            all.push(q.clone());
            out.push(q);
            true
        } else {
            false
        }
    };
    for c in candidates {
        if push(c, &mut all, &mut out) {
            let jq = m.apply_j(out.last().expect("just pushed"));
            push(&jq, &mut all, &mut out);
        }
    }
    out
}

/// Pointwise type of a foliation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoliationClass {
    TotallyGeodesic,
    Polar,
    Mixed,
    Trivial,
}

impl std::fmt::Display for FoliationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FoliationClass::TotallyGeodesic => "totally_geodesic",
            FoliationClass::Polar => "polar",
            FoliationClass::Mixed => "mixed",
            FoliationClass::Trivial => "trivial",
        };
        f.write_str(s)
    }
}

/// Sup-norms of `A` and `T` over pairs of orthonormal frame vectors.
pub fn oneill_norms<T: Real>(t: &ONeillTensors<T>) -> (T, T) {
    let m = t.model();
    let frame = t.split.adapted_frame();
    let mut na = T::zero();
    let mut nt = T::zero();
    for e in &frame {
        for f in &frame {
            na = na.max(m.norm(&t.a(e, f)));
            nt = nt.max(m.norm(&t.t(e, f)));
        }
    }
    (na, nt)
}

pub fn classify_pointwise<T: Real>(t: &ONeillTensors<T>) -> FoliationClass {
    let (na, nt) = oneill_norms(t);
    let zero = T::lit(ZERO_THRESHOLD);
    match (na > zero, nt > zero) {
        (true, false) => FoliationClass::TotallyGeodesic,
        (false, true) => FoliationClass::Polar,
        (false, false) => FoliationClass::Trivial,
        (true, true) => FoliationClass::Mixed,
    }
}

/// Residuals of `γ_{R(V₁,V₂)V₃} = [[γ_{V₁},γ_{V₂}],γ_{V₃}]` (key `"i"`) and
/// `γ_V R(X₁,X₂) = [A_{X₁},A_{X₂}]γ_V − γ_{[A_{X₁},A_{X₂}]V}` on `H` (key `"ii"`).
pub fn curv2_residuals<T: Real>(r: &CurvatureTensor<T>, t: &ONeillTensors<T>) -> Residuals<T> {
    let split = &t.split;
    let vb = split.vertical();
    let hb = split.horizontal();
    let ph = Endo(split.p_h().clone());
    let gammas: Vec<Endo<T>> = vb.iter().map(|v| t.gamma_raw(v)).collect();
    let mut ri = T::zero();
    for (i1, v1) in vb.iter().enumerate() {
        for (i2, v2) in vb.iter().enumerate() {
            let rv = r.operator(v1, v2);
            let inner = bracket(&gammas[i1], &gammas[i2]);
            for (i3, v3) in vb.iter().enumerate() {
                let lhs = t.gamma_raw(&split.vertical_part(&rv.apply(v3)));
                let rhs = bracket(&inner, &gammas[i3]);
                ri = ri.max(lhs.dist(&rhs));
            }
        }
    }
    let mut rii = T::zero();
    for x1 in hb {
        let a1 = t.a_op(x1);
        for x2 in hb {
            let aa = bracket(&a1, &t.a_op(x2));
            let rx = r.operator(x1, x2);
            for (k, v) in vb.iter().enumerate() {
                let lhs = gammas[k].compose(&rx).compose(&ph);
                let rhs = aa.compose(&gammas[k]).sub(&t.gamma_raw(&aa.apply(v))).compose(&ph);
                rii = rii.max(lhs.dist(&rhs));
            }
        }
    }
    Residuals::from([("i", ri), ("ii", rii)])
}

/// Least-squares constant `Ω` in `R(V,W)U = 2Ω g(JV,W) JU` on `V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaFit<T> {
    pub omega: T,
    pub residual: T,
}

pub fn omega_extract<T: Real>(r: &CurvatureTensor<T>, split: &SplitTangent<T>) -> Result<OmegaFit<T>> {
    if split.dim_v() != 2 {
        return Err(Error::VerticalDimension { found: split.dim_v() });
    }
    let m = split.model();
    let vb = split.vertical();
    let two = T::lit(2.0);
    let mut samples = Vec::new();
    for v in vb {
        let jv = m.apply_j(v);
        for w in vb {
            let jvw = m.inner(&jv, w);
            for u in vb {
                let ju = m.apply_j(u);
                for z in vb {
                    samples.push((r.eval(v, w, u, z), two * jvw * m.inner(&ju, z)));
                }
            }
        }
    }
    let num: T = samples.iter().map(|&(y, b)| y * b).sum();
    let den: T = samples.iter().map(|&(_, b)| b * b).sum();
    let omega = if den > T::zero() { num / den } else { T::zero() };
    let residual = samples.iter().fold(T::zero(), |s, &(y, b)| s.max((y - omega * b).abs()));
    Ok(OmegaFit { omega, residual })
}

/// `max |R(X,JX)X − 2Ω g(X,X) JX|` over horizontal frame vectors.
pub fn holomorphic_identity_residual<T: Real>(r: &CurvatureTensor<T>, split: &SplitTangent<T>, omega: T) -> T {
    let m = split.model();
    let two = T::lit(2.0);
    split.horizontal().iter().fold(T::zero(), |s, x| {
        let jx = m.apply_j(x);
        let lhs = r.apply(x, &jx, x);
        let rhs = linalg::scaled(two * omega * m.inner(x, x), &jx);
        s.max(linalg::max_abs(&linalg::sub(&lhs, &rhs)))
    })
}

/// `γ_Vγ_W − (Ω/2)(g(JV,W)J − g(V,W)Id)` on `H`, over vertical frame pairs.
pub fn gamma_product_residual<T: Real>(t: &ONeillTensors<T>, omega: T) -> T {
    let split = &t.split;
    let m = t.model();
    let ph = Endo(split.p_h().clone());
    let jh = m.j_endo().compose(&ph);
    let half = omega / T::lit(2.0);
    let vb = split.vertical();
    let mut r = T::zero();
    for v in vb {
        let gv = t.gamma_raw(v);
        let jv = m.apply_j(v);
        for w in vb {
            let lhs = gv.compose(&t.gamma_raw(w));
            let rhs = jh.scale(half * m.inner(&jv, w)).sub(&ph.scale(half * m.inner(v, w)));
            r = r.max(lhs.dist(&rhs));
        }
    }
    r
}

/// `A_Xγ_VY − (Ω/2)(g(JX,Y)JV − g(X,Y)V)` over frame triples.
pub fn curv4_residual<T: Real>(t: &ONeillTensors<T>, omega: T) -> T {
    curv4_with_sign(t, omega, T::one())
}

/// The same identity with the opposite sign on the right-hand side.
pub fn curv4_residual_opposite_sign<T: Real>(t: &ONeillTensors<T>, omega: T) -> T {
    curv4_with_sign(t, omega, -T::one())
}

fn curv4_with_sign<T: Real>(t: &ONeillTensors<T>, omega: T, sign: T) -> T {
    let split = &t.split;
    let m = t.model();
    let half = sign * omega / T::lit(2.0);
    let mut r = T::zero();
    for v in split.vertical() {
        let gv = t.gamma_raw(v);
        let jv = m.apply_j(v);
        for x in split.horizontal() {
            let jx = m.apply_j(x);
            for y in split.horizontal() {
                let lhs = t.a(x, &gv.apply(y));
                let mut rhs = linalg::scaled(half * m.inner(&jx, y), &jv);
                linalg::axpy(-half * m.inner(x, y), v, &mut rhs);
                r = r.max(linalg::max_abs(&linalg::sub(&lhs, &rhs)));
            }
        }
    }
    r
}

/// `β(V,W) = Σ_i g(γ_V e_i, γ_W e_i)` on `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaForm<T> {
    /// Matrix of `β` in `basis`.
    pub matrix: Mat<T>,
    /// Orthonormal basis of `V` used for `matrix`.
    pub basis: Vec<Vec<T>>,
    /// Orthonormal basis of `ker β`.
    pub kernel: Vec<Vec<T>>,
}

impl<T: Real> BetaForm<T> {
    /// Best constant `k` in `β = k g` (trace ratio) and the sup misfit.
    pub fn schur_fit(&self) -> (T, T) {
        let d = self.matrix.rows();
        if d == 0 {
            return (T::zero(), T::zero());
        }
        let k = self.matrix.trace() / T::from_count(d);
        let res = (&self.matrix - &Mat::identity(d).scale(k)).max_abs();
        (k, res)
    }
}

pub fn beta_form<T: Real>(t: &ONeillTensors<T>) -> BetaForm<T> {
    let split = &t.split;
    let m = t.model();
    let vb = split.vertical().to_vec();
    let gammas: Vec<Endo<T>> = vb.iter().map(|v| t.gamma_raw(v)).collect();
    let d = vb.len();
    let mut beta: Mat<T> = Mat::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            beta[(a, b)] = split.horizontal().iter().map(|e| m.inner(&gammas[a].apply(e), &gammas[b].apply(e))).sum();
        }
    }
    let scale = beta.max_abs();
    let kernel = if scale <= T::lit(ZERO_THRESHOLD) {
        vb.clone()
    } else {
        let (vals, vecs) = beta.symmetric_eigen();
        (0..d)
            .filter(|&i| vals[i].abs() <= T::rank_tol() * scale)
            .map(|i| {
                let c = vecs.column(i);
                let mut u = vec![T::zero(); m.dim()];
                for (ck, v) in c.iter().zip(&vb) {
                    linalg::axpy(*ck, v, &mut u);
                }
                u
            })
            .collect()
    };
    BetaForm { matrix: beta, basis: vb, kernel }
}

/// `L = −Σ_k γ_{V_k}²` over an orthonormal vertical family.
pub fn l_operator<T: Real>(t: &ONeillTensors<T>, v1_basis: &[Vec<T>]) -> Result<Endo<T>> {
    let m = t.model();
    for v in v1_basis {
        t.split.require_vertical(v)?;
    }
    check_orthonormal(m, v1_basis)?;
    let n = m.dim();
    let mut l = Endo::zeros(n);
    for v in v1_basis {
        let g = t.gamma_raw(v);
        l = l.sub(&g.compose(&g));
    }
    Ok(l)
}

/// `Σ_k γ_{R(V_k,JV_k)V₃} − 2[LJ, γ_{V₃}]`, summed over the full
/// `J`-adapted orthonormal basis of `V₁`, maximized over vertical `V₃`.
pub fn sum_identity_residual<T: Real>(r: &CurvatureTensor<T>, t: &ONeillTensors<T>) -> T {
    let m = t.model();
    let split = &t.split;
    let (v1, _) = v1_subspace(t);
    let l = l_operator(t, &v1).expect("v1 basis is orthonormal and vertical");
    let lj = l.compose(&m.j_endo());
    let ops: Vec<Endo<T>> = v1.iter().map(|v| r.operator(v, &m.apply_j(v))).collect();
    let mut res = T::zero();
    for v3 in split.vertical() {
        let n = m.dim();
        let mut lhs = Endo::zeros(n);
        for op in &ops {
            lhs = lhs.add(&t.gamma_raw(&split.vertical_part(&op.apply(v3))));
        }
        let rhs = bracket(&lj, &t.gamma_raw(v3)).scale(T::lit(2.0));
        res = res.max(lhs.dist(&rhs));
    }
    res
}

/// Twistor-type model on `R⁶ = H ⊕ V` with `H = ℍ` (basis `1, i, j, k`)
/// and `V = R²`: `J|_H` is right multiplication by `i`, and
/// `γ_{e₄} = a R_j`, `γ_{e₅} = −a R_k` with `a = √(Ω/2)`.
pub fn build_twistor_model<T: Real>(omega: T) -> Result<ONeillTensors<T>> {
    if !(omega > T::zero()) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    let a = (omega / T::lit(2.0)).sqrt();
    let ri = right_mult::<T>([0.0, 1.0, 0.0, 0.0]);
    let rj = right_mult::<T>([0.0, 0.0, 1.0, 0.0]);
    let rk = right_mult::<T>([0.0, 0.0, 0.0, 1.0]);
    let mut j = Mat::zeros(6, 6);
    for r in 0..4 {
        for c in 0..4 {
            j[(r, c)] = ri[(r, c)];
        }
    }
    j[(5, 4)] = T::one();
    j[(4, 5)] = -T::one();
    let model = ModelSpace::new(Mat::identity(6), j)?;
    let gam = [rj.scale(a), rk.scale(-a)];
    let mut at = Tensor3::zeros(6);
    for x in 0..4 {
        for (k, g) in gam.iter().enumerate() {
            for y in 0..4 {
                // g(A_X Y, V_k) = −g(γ_{V_k} X, Y)
                at[(x, y, 4 + k)] = -g[(y, x)];
                // A_X V_k = γ_{V_k} X
                at[(x, 4 + k, y)] = g[(y, x)];
            }
        }
    }
    let vb: Vec<Vec<T>> = (4..6).map(|i| linalg::unit(6, i)).collect();
    let hb: Vec<Vec<T>> = (0..4).map(|i| linalg::unit(6, i)).collect();
    let split = SplitTangent::new(model, &vb, &hb, T::exact_tol())?;
    ONeillTensors::new(split, at, Tensor3::zeros(6), true, T::exact_tol())
}

/// Matrix of `p ↦ p q` on `ℍ` in the basis `1, i, j, k`.
fn right_mult<T: Real>(q: [f64; 4]) -> Mat<T> {
    let mul = |a: [f64; 4], b: [f64; 4]| {
        [
            a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
            a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
            a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
            a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
        ]
    };
    let mut m = Mat::zeros(4, 4);
    for c in 0..4 {
        let mut e = [0.0; 4];
        e[c] = 1.0;
        let p = mul(e, q);
        for r in 0..4 {
            m[(r, c)] = T::lit(p[r]);
        }
    }
    m
}

/// A model with `A = T = 0` on `C^{h} ⊕ C^{v}` (horizontal first).
pub fn trivial_model<T: Real>(complex_dim_h: usize, complex_dim_v: usize) -> Result<ONeillTensors<T>> {
    let n = 2 * (complex_dim_h + complex_dim_v);
    let model = ModelSpace::euclidean(complex_dim_h + complex_dim_v);
    let dh = 2 * complex_dim_h;
    let vb: Vec<Vec<T>> = (dh..n).map(|i| linalg::unit(n, i)).collect();
    let hb: Vec<Vec<T>> = (0..dh).map(|i| linalg::unit(n, i)).collect();
    let split = SplitTangent::new(model, &vb, &hb, T::exact_tol())?;
    ONeillTensors::new(split, Tensor3::zeros(n), Tensor3::zeros(n), true, T::exact_tol())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::const_hol_curvature;

    fn twistor() -> ONeillTensors<f64> {
        build_twistor_model(2.0).unwrap()
    }

    fn e(i: usize) -> Vec<f64> {
        linalg::unit(6, i)
    }

    #[test]
    fn twistor_model_invariants() {
        let t = twistor();
        assert!(t.invariant_residuals().max() < 1e-15);
        for (_, r) in type_identity_residuals(&t) {
            assert!(r < 1e-15);
        }
        assert_eq!(classify_pointwise(&t), FoliationClass::TotallyGeodesic);
        assert_eq!(lemma_l1_algebraic_residual(&t), 0.0);
    }

    #[test]
    fn gamma_relations() {
        let t = twistor();
        let m = t.model();
        let (g4, g5) = (gamma(&t, &e(4)).unwrap(), gamma(&t, &e(5)).unwrap());
        assert!(g4.compose(&g5).add(&g5.compose(&g4)).max_abs() < 1e-15);
        let ph = Endo(t.split().p_h().clone());
        assert!(g4.compose(&g4).add(&ph).max_abs() < 1e-15);
        let jv = m.apply_j(&e(4));
        let gjv = gamma(&t, &jv).unwrap();
        let j = m.j_endo();
        assert!(gjv.dist(&j.compose(&g4)) < 1e-15);
        assert!(gjv.dist(&g4.compose(&j).scale(-1.0)) < 1e-15);
        let sum = gamma(&t, &linalg::add(&e(4), &e(5))).unwrap();
        assert!(sum.dist(&g4.add(&g5)) < 1e-15);
        assert!(matches!(gamma(&t, &e(0)), Err(Error::NotVertical { .. })));
    }

    #[test]
    fn corrupted_a_is_detected() {
        let t = twistor();
        let mut a = t.a_tensor().clone();
        a[(0, 1, 4)] = -a[(0, 1, 4)] + 0.5;
        let bad = ONeillTensors::new_unchecked(t.split().clone(), a, t.t_tensor().clone(), true).unwrap();
        let r = type_identity_residuals(&bad);
        assert!(r["a_x_jy"] > 0.1);
    }

    #[test]
    fn curvature_from_at_matches_constant_model() {
        let t = twistor();
        let r = const_hol_curvature(t.model(), 4.0);
        let pc = curvature_from_AT(&t).unwrap();
        for (_, v) in pc.compare(&r) {
            assert!(v < 1e-14);
        }
        let full = pc.complete_with(&r).unwrap();
        assert!(full.symmetry_residuals().max() < 1e-14);
        let unset = t.clone().with_parallel_mode(false);
        assert!(matches!(curvature_from_AT(&unset), Err(Error::ParallelModeRequired)));
    }

    #[test]
    fn omega_pipeline() {
        let t = twistor();
        let r = const_hol_curvature(t.model(), 4.0);
        let fit = omega_extract(&r, t.split()).unwrap();
        assert!((fit.omega - 2.0).abs() < 1e-14 && fit.residual < 1e-14);
        assert!(gamma_product_residual(&t, 2.0) < 1e-15);
        assert!((gamma_product_residual(&t, 4.0) - 1.0).abs() < 1e-14);
        assert!(curv4_residual(&t, 2.0) < 1e-15);
        assert!((curv4_residual_opposite_sign(&t, 2.0) - 2.0).abs() < 1e-14);
        assert!(holomorphic_identity_residual(&r, t.split(), 2.0) < 1e-14);
        let c2 = curv2_residuals(&r, &t);
        assert!(c2["i"] < 1e-14 && c2["ii"] < 1e-14);
    }

    #[test]
    fn beta_l_and_sum_identity() {
        let t = twistor();
        let beta = beta_form(&t);
        let (k, res) = beta.schur_fit();
        assert!((k - 4.0).abs() < 1e-14 && res < 1e-14);
        assert!(beta.kernel.is_empty());
        let (v1, v0) = v1_subspace(&t);
        assert_eq!((v1.len(), v0.len()), (2, 0));
        let l = l_operator(&t, &v1).unwrap();
        let ph = Endo(t.split().p_h().clone());
        assert!(l.dist(&ph.scale(2.0)) < 1e-14);
        let r = const_hol_curvature(t.model(), 4.0);
        assert!(sum_identity_residual(&r, &t) < 1e-14);
    }

    #[test]
    fn block_sum_v1_is_twistor_block() {
        let t = twistor().block_sum(&trivial_model(0, 1).unwrap()).unwrap();
        let (v1, v0) = v1_subspace(&t);
        assert_eq!((v1.len(), v0.len()), (2, 2));
        for v in &v1 {
            assert!(v[6].abs() < 1e-14 && v[7].abs() < 1e-14);
        }
        let beta = beta_form(&t);
        assert_eq!(beta.kernel.len(), 2);
    }

    #[test]
    fn trivial_model_classifies_trivial() {
        let t = trivial_model::<f64>(2, 1).unwrap();
        assert_eq!(classify_pointwise(&t), FoliationClass::Trivial);
        let (v1, v0) = v1_subspace(&t);
        assert!(v1.is_empty() && v0.len() == 2);
        assert!(omega_extract(&const_hol_curvature(t.model(), 1.0), t.split()).is_ok());
    }
}
