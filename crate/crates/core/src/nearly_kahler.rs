//! The canonical variation at `t = 1/2` and the curvature identities relating
//! the Kähler, nearly Kähler and Bott connections.

use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::foliation::ONeillTensors;
use crate::holonomy::InfinitesimalModel;
use crate::linalg::{self, Mat};
use crate::scalar::Real;
use crate::tensor::{bracket, Endo, Tensor3, Tensor4};

/// Which metric turns the 3-form `ψ⁺` into operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Musical {
    /// The Kähler metric `g`.
    Kahler,
    /// The nearly Kähler metric `g^{NK}`.
    NearlyKahler,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NKStructure<T> {
    base: ONeillTensors<T>,
    g_nk: Mat<T>,
    j_bar: Endo<T>,
    psi_plus: Tensor3<T>,
    kappa: T,
}

/// Residuals of the structural invariants of [`NKStructure`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NKInvariants<T> {
    pub g_nk_blocks: T,
    pub j_bar_blocks: T,
    pub j_bar_square: T,
    pub g_nk_hermitian: T,
    pub psi_skew: T,
}

impl<T: Real> NKInvariants<T> {
    pub fn max(&self) -> T {
        [self.g_nk_blocks, self.j_bar_blocks, self.j_bar_square, self.g_nk_hermitian, self.psi_skew]
            .into_iter()
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> NKStructure<T> {
    pub fn base(&self) -> &ONeillTensors<T> {
        &self.base
    }

    pub fn g_nk(&self) -> &Mat<T> {
        &self.g_nk
    }

    pub fn j_bar(&self) -> &Endo<T> {
        &self.j_bar
    }

    /// `ψ⁺(e_a, e_b, e_c)`
    pub fn psi_plus(&self) -> &Tensor3<T> {
        &self.psi_plus
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// The same structure with `ψ⁺` rescaled to normalization `kappa`.
    pub fn with_kappa(&self, kappa: T) -> Self {
        Self { psi_plus: psi_form(&self.base, kappa), kappa, ..self.clone() }
    }

    /// The same structure with a replaced 3-form; used for perturbation probes.
    pub fn with_psi_plus(&self, psi_plus: Tensor3<T>) -> Result<Self> {
        if psi_plus.dim() != self.psi_plus.dim() {
            return Err(Error::DimensionMismatch { expected: self.psi_plus.dim(), found: psi_plus.dim() });
        }
        Ok(Self { psi_plus, ..self.clone() })
    }

    pub fn invariant_residuals(&self) -> NKInvariants<T> {
        let split = self.base.split();
        let m = split.model();
        let g = m.metric();
        let n = m.dim();
        let half = T::lit(0.5);
        let pv = split.p_v();
        let ph = split.p_h();
        // g_nk = Ph^T g Ph + ½ Pv^T g Pv
        let expected = &(&(&ph.transpose() * g) * ph) + &(&(&pv.transpose() * g) * pv).scale(half);
        let jb_expected = &(m.j() * ph) - &(m.j() * pv);
        let jb = self.j_bar.matrix();
        let jj = (&(jb * jb) + &Mat::identity(n)).max_abs();
        let herm = (&(&(&jb.transpose() * &self.g_nk) * jb) - &self.g_nk).max_abs();
        let p = &self.psi_plus;
        let mut skew = T::zero();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v = p[(a, b, c)];
                    skew = skew.max((v + p[(b, a, c)]).abs()).max((v + p[(a, c, b)]).abs());
                }
            }
        }
        NKInvariants {
            g_nk_blocks: (&self.g_nk - &expected).max_abs(),
            j_bar_blocks: (jb - &jb_expected).max_abs(),
            j_bar_square: jj,
            g_nk_hermitian: herm,
            psi_skew: skew,
        }
    }

    fn musical_metric(&self, musical: Musical) -> &Mat<T> {
        match musical {
            Musical::Kahler => self.base.model().metric(),
            Musical::NearlyKahler => &self.g_nk,
        }
    }
}

/// `ψ(E,F,G) = f(E_H,F_H,G_V) + f(F_H,G_H,E_V) + f(G_H,E_H,F_V)` with
/// `f(X,Y,V) = κ g(A_X JY, V)`.
fn psi_form<T: Real>(t: &ONeillTensors<T>, kappa: T) -> Tensor3<T> {
    let split = t.split();
    let m = t.model();
    let n = m.dim();
    let hs: Vec<Vec<T>> = (0..n).map(|a| split.horizontal_part(&linalg::unit(n, a))).collect();
    let vs: Vec<Vec<T>> = (0..n).map(|a| split.vertical_part(&linalg::unit(n, a))).collect();
    let jhs: Vec<Vec<T>> = hs.iter().map(|h| m.apply_j(h)).collect();
    let mut f = Tensor3::zeros(n);
    for a in 0..n {
        for b in 0..n {
            let w = t.a(&hs[a], &jhs[b]);
            for c in 0..n {
                f[(a, b, c)] = kappa * m.inner(&w, &vs[c]);
            }
        }
    }
    Tensor3::from_fn(n, |a, b, c| f[(a, b, c)] + f[(b, c, a)] + f[(c, a, b)])
}

/// Builds `g^{NK}`, `J̄` and `ψ⁺`, fixing `κ` as the positive zero of the
/// The identity `ψ⁺_{ψ⁺_XY} = −γ_{A_XY}` (with `κ = 1` when `A = 0`).
pub fn canonical_variation<T: Real>(t: &ONeillTensors<T>) -> NKStructure<T> {
    let split = t.split();
    let m = t.model();
    let g = m.metric();
    let pv = split.p_v();
    let ph = split.p_h();
    let g_nk = &(&(&ph.transpose() * g) * ph) + &(&(&pv.transpose() * g) * pv).scale(T::lit(0.5));
    let j_bar = Endo(&(m.j() * ph) - &(m.j() * pv));
    let unit = NKStructure { base: t.clone(), g_nk, j_bar, psi_plus: psi_form(t, T::one()), kappa: T::one() };
    // ψ_κ = κ ψ_1, so the left side is κ² times its value at κ = 1
    let mut num = T::zero();
    let mut den = T::zero();
    for x in split.horizontal() {
        for y in split.horizontal() {
            let w = psi_operator_with(&unit, x, Musical::Kahler).apply(y);
            let lhs = psi_operator_with(&unit, &w, Musical::Kahler);
            let rhs = t.gamma_raw(&t.a(x, y)).scale(-T::one());
            num += lhs.matrix().frobenius_dot(rhs.matrix());
            den += lhs.matrix().frobenius_dot(lhs.matrix());
        }
    }
    let k2 = if den > T::min_positive_value() { num / den } else { T::zero() };
    if k2 > T::zero() {
        unit.with_kappa(k2.sqrt())
    } else {
        unit
    }
}

fn raise_with<T: Real>(metric: &Mat<T>, lowered: &Mat<T>) -> Endo<T> {
    let n = metric.rows();
    let mut out = Mat::zeros(n, n);
    for k in 0..n {
        let x = metric.solve(&lowered.column(k)).expect("metric is positive definite");
        out.set_column(k, &x);
    }
    Endo(out)
}

/// The operator `F ↦ ψ⁺_E F` with `G(ψ⁺_E F, H) = ψ⁺(E, F, H)`.
pub fn psi_operator_with<T: Real>(nk: &NKStructure<T>, e: &[T], musical: Musical) -> Endo<T> {
    let n = nk.psi_plus.dim();
    let p = &nk.psi_plus;
    let mut lowered = Mat::zeros(n, n);
    for f in 0..n {
        for h in 0..n {
            let mut s = T::zero();
            for (a, &ea) in e.iter().enumerate() {
                s += ea * p[(a, f, h)];
            }
            lowered[(h, f)] = s;
        }
    }
    raise_with(nk.musical_metric(musical), &lowered)
}

/// `ψ⁺_E` through `g^{NK}`.
pub fn psi_operator<T: Real>(nk: &NKStructure<T>, e: &[T]) -> Endo<T> {
    psi_operator_with(nk, e, Musical::NearlyKahler)
}

/// `ψ⁻_E = ψ⁺_{J̄E}`, i.e. `ψ⁻ = ψ⁺(J̄·,·,·)`.
pub fn psi_minus_operator<T: Real>(nk: &NKStructure<T>, e: &[T], musical: Musical) -> Endo<T> {
    psi_operator_with(nk, &nk.j_bar.apply(e), musical)
}

/// `max |ψ⁺_{ψ⁺_XY} + γ_{A_XY}|` over horizontal frame pairs, `g`-musical.
pub fn lemma51_residual<T: Real>(nk: &NKStructure<T>) -> T {
    let t = &nk.base;
    let mut r = T::zero();
    for x in t.split().horizontal() {
        let px = psi_operator_with(nk, x, Musical::Kahler);
        for y in t.split().horizontal() {
            let lhs = psi_operator_with(nk, &px.apply(y), Musical::Kahler);
            let rhs = t.gamma_raw(&t.a(x, y)).scale(-T::one());
            r = r.max(lhs.dist(&rhs));
        }
    }
    r
}

/// `R^{NK}_{XY} = R_{XY} − γ_{A_XY} + ½[A_X, A_Y]`
pub fn r_nk<T: Real>(r: &CurvatureTensor<T>, t: &ONeillTensors<T>, x: &[T], y: &[T]) -> Result<Endo<T>> {
    t.split().require_horizontal(x)?;
    t.split().require_horizontal(y)?;
    let aa = bracket(&t.a_op(x), &t.a_op(y));
    Ok(r.operator(x, y).sub(&t.gamma_raw(&t.a(x, y))).add(&aa.scale(T::lit(0.5))))
}

/// `R̄_{XY} = R_{XY} + [A_X, A_Y]`
pub fn r_bar<T: Real>(r: &CurvatureTensor<T>, t: &ONeillTensors<T>, x: &[T], y: &[T]) -> Result<Endo<T>> {
    t.split().require_horizontal(x)?;
    t.split().require_horizontal(y)?;
    Ok(r.operator(x, y).add(&bracket(&t.a_op(x), &t.a_op(y))))
}

/// `R̄_{XY}` against `R^{NK}_{XY} + ¼([ψ⁻_X,ψ⁻_Y] − 2ψ⁻_{ψ⁻_XY})`
/// (`g^{NK}`-musical), maximized over horizontal frame pairs.
pub fn chain_residual<T: Real>(r: &CurvatureTensor<T>, nk: &NKStructure<T>) -> T {
    let t = &nk.base;
    let quarter = T::lit(0.25);
    let two = T::lit(2.0);
    let hb = t.split().horizontal();
    let mut res = T::zero();
    for x in hb {
        let mx = psi_minus_operator(nk, x, Musical::NearlyKahler);
        for y in hb {
            let my = psi_minus_operator(nk, y, Musical::NearlyKahler);
            let direct = r_bar(r, t, x, y).expect("frame vectors are horizontal");
            let nkc = r_nk(r, t, x, y).expect("frame vectors are horizontal");
            let corr = bracket(&mx, &my).sub(&psi_minus_operator(nk, &mx.apply(y), Musical::NearlyKahler).scale(two));
            let chain = nkc.add(&corr.scale(quarter));
            res = res.max(direct.dist(&chain));
        }
    }
    res
}

/// `max |[ψ⁻_X,ψ⁻_Y] − [ψ⁺_X,ψ⁺_Y]|` over horizontal frame pairs.
pub fn psi_bracket_residual<T: Real>(nk: &NKStructure<T>, musical: Musical) -> T {
    let hb = nk.base.split().horizontal();
    let mut res = T::zero();
    for x in hb {
        let (mx, px) = (psi_minus_operator(nk, x, musical), psi_operator_with(nk, x, musical));
        for y in hb {
            let (my, py) = (psi_minus_operator(nk, y, musical), psi_operator_with(nk, y, musical));
            res = res.max(bracket(&mx, &my).dist(&bracket(&px, &py)));
        }
    }
    res
}

/// `max |ψ⁻_E F − Tor(E,F)|` over frame pairs, comparing the `g^{NK}`-musical
/// `ψ⁻` with the torsion `Tor(E,F) = −S_E F + S_F E` of the Bott connection
/// (`S = A + T`).
pub fn psi_torsion_residual<T: Real>(nk: &NKStructure<T>) -> T {
    let t = &nk.base;
    let frame = t.split().adapted_frame();
    let mut res = T::zero();
    for e in &frame {
        let me = psi_minus_operator(nk, e, Musical::NearlyKahler);
        for f in &frame {
            let tor = bott_torsion_value(t, e, f);
            res = res.max(linalg::max_abs(&linalg::sub(&me.apply(f), &tor)));
        }
    }
    res
}

fn s_op<T: Real>(t: &ONeillTensors<T>, e: &[T]) -> Endo<T> {
    t.a_op(e).add(&t.t_op(e))
}

fn bott_torsion_value<T: Real>(t: &ONeillTensors<T>, e: &[T], f: &[T]) -> Vec<T> {
    linalg::sub(&s_op(t, f).apply(e), &s_op(t, e).apply(f))
}

/// `R̄(E,F) = R(E,F) + [S_E,S_F] − S_{S_EF − S_FE}` with `S = A + T`, valid
/// when `∇̄A = ∇̄T = 0`.
pub fn r_bar_full<T: Real>(r: &CurvatureTensor<T>, t: &ONeillTensors<T>, e: &[T], f: &[T]) -> Result<Endo<T>> {
    if !t.parallel_mode() {
        return Err(Error::ParallelModeRequired);
    }
    let (se, sf) = (s_op(t, e), s_op(t, f));
    let shift = linalg::sub(&se.apply(f), &sf.apply(e));
    Ok(r.operator(e, f).add(&bracket(&se, &sf)).sub(&s_op(t, &shift)))
}

/// Bott torsion and curvature in the orthonormal adapted frame (horizontal
/// first), as an infinitesimal model.
pub fn bott_infinitesimal_model<T: Real>(r: &CurvatureTensor<T>, t: &ONeillTensors<T>) -> Result<InfinitesimalModel<T>> {
    if !t.parallel_mode() {
        return Err(Error::ParallelModeRequired);
    }
    let tol = T::lit(1e-8);
    let frame = t.split().adapted_frame();
    let tf = t.in_adapted_frame(tol)?;
    let rf = r.in_frame(&frame, tol)?;
    let n = frame.len();
    let basis: Vec<Vec<T>> = (0..n).map(|i| linalg::unit(n, i)).collect();
    let mut torsion = Tensor3::zeros(n);
    let mut curvature = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let tor = bott_torsion_value(&tf, &basis[i], &basis[j]);
            for k in 0..n {
                torsion[(i, j, k)] = tor[k];
            }
            let k_ij = r_bar_full(&rf, &tf, &basis[i], &basis[j])?;
            for k in 0..n {
                for l in 0..n {
                    curvature[(i, j, k, l)] = k_ij.matrix()[(l, k)];
                }
            }
        }
    }
    InfinitesimalModel::new(n, torsion, curvature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::const_hol_curvature;
    use crate::foliation::{build_twistor_model, trivial_model};

    fn setup() -> (ONeillTensors<f64>, CurvatureTensor<f64>, NKStructure<f64>) {
        let t = build_twistor_model(2.0).unwrap();
        let r = const_hol_curvature(t.model(), 4.0);
        let nk = canonical_variation(&t);
        (t, r, nk)
    }

    #[test]
    fn structure_invariants_and_calibration() {
        let (_, _, nk) = setup();
        assert!(nk.invariant_residuals().max() < 1e-15);
        assert!((nk.kappa() - 1.0).abs() < 1e-14);
        assert!(nk.psi_plus().max_abs() > 0.1);
        assert!(lemma51_residual(&nk) < 1e-14);
        let g = nk.g_nk();
        assert_eq!((g[(0, 0)], g[(4, 4)]), (1.0, 0.5));
    }

    #[test]
    fn kappa_homogeneity() {
        let (t, _, nk) = setup();
        let doubled = nk.with_kappa(2.0);
        assert!(lemma51_residual(&doubled) > 1.0);
        let x = linalg::unit(6, 0);
        let y = linalg::unit(6, 2);
        let w1 = psi_operator_with(&nk, &x, Musical::Kahler).apply(&y);
        let w2 = psi_operator_with(&doubled, &x, Musical::Kahler).apply(&y);
        let l1 = psi_operator_with(&nk, &w1, Musical::Kahler);
        let l2 = psi_operator_with(&doubled, &w2, Musical::Kahler);
        assert!(l2.dist(&l1.scale(4.0)) < 1e-14);
        let _ = t;
    }

    #[test]
    fn psi_operator_examples() {
        let (t, _, nk) = setup();
        let m = t.model();
        for i in 0..6 {
            let e = linalg::unit(6, i);
            assert!(linalg::max_abs(&psi_operator(&nk, &e).apply(&e)) < 1e-15);
        }
        // X, Y horizontal: ψ⁺_X Y is vertical and is A_X JY scaled by the g/g_nk factor 2
        let x = linalg::unit(6, 1);
        let y = linalg::unit(6, 3);
        let p = psi_operator(&nk, &x).apply(&y);
        let expected = linalg::scaled(2.0, &t.a(&x, &m.apply_j(&y)));
        assert!(linalg::max_abs(&linalg::sub(&p, &expected)) < 1e-15);
        let trivial = canonical_variation(&trivial_model::<f64>(2, 1).unwrap());
        assert_eq!(trivial.psi_plus().max_abs(), 0.0);
        assert_eq!(psi_operator(&trivial, &linalg::unit(6, 4)).max_abs(), 0.0);
    }

    #[test]
    fn chain_and_brackets() {
        let (t, r, nk) = setup();
        assert!(chain_residual(&r, &nk) < 1e-14);
        assert!(psi_bracket_residual(&nk, Musical::NearlyKahler) < 1e-14);
        assert!(psi_torsion_residual(&nk) < 1e-14);
        let x = linalg::unit(6, 0);
        let y = linalg::unit(6, 1);
        let rb = r_bar(&r, &t, &x, &y).unwrap();
        assert!(rb.add(&r_bar(&r, &t, &y, &x).unwrap()).max_abs() < 1e-15);
        assert_eq!(r_nk(&r, &t, &x, &x).unwrap().max_abs(), 0.0);
        assert!(matches!(r_bar(&r, &t, &linalg::unit(6, 4), &y), Err(Error::NotHorizontal { .. })));
        let full = r_bar_full(&r, &t, &x, &y).unwrap();
        assert!(full.dist(&rb) < 1e-15);
    }

    #[test]
    fn corrupted_psi_breaks_chain() {
        let (_, r, nk) = setup();
        let mut p = nk.psi_plus().clone();
        p[(0, 2, 4)] += 0.3;
        p[(2, 0, 4)] -= 0.3;
        let bad = nk.with_psi_plus(p).unwrap();
        assert!(chain_residual(&r, &bad) > 1e-3);
    }
}
