use kahler_foliation::catalog::{overlap_check, table1_entries, table2_entries};
use kahler_foliation::curvature::const_hol_curvature;
use kahler_foliation::foliation::{
    build_twistor_model, classify_pointwise, curv2_residuals, curvature_from_AT, gamma, omega_extract, trivial_model,
};
use kahler_foliation::holonomy::{annihilation_residual, center, hol_generate, so_basis, stabilizer_h, InfinitesimalModel};
use kahler_foliation::nearly_kahler::{
    bott_infinitesimal_model, chain_residual, lemma51_residual, psi_bracket_residual, Musical,
};
use kahler_foliation::tensor::standard_complex_structure;
use kahler_foliation::{
    canonical_variation, commutator, holomorphic_sectional, metric_adjoint, nomizu_build, orthonormal_frame, CheckReport,
    ComplexPolynomial, Endo, Mat, ModelSpace, ONeillTensors, SplitTangent,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n)
}

fn endo(n: usize) -> impl Strategy<Value = Endo<f64>> {
    entries(n).prop_map(move |v| Endo(Mat::from_vec(n, n, v)))
}

/// Hermitian structure `(PᵀP, P⁻¹J₀P)` for a well-conditioned `P = I + E/4`.
fn hermitian(complex_dim: usize) -> impl Strategy<Value = ModelSpace<f64>> {
    let n = 2 * complex_dim;
    entries(n).prop_map(move |v| {
        let p = &Mat::identity(n) + &Mat::from_vec(n, n, v).scale(0.25);
        let j0 = standard_complex_structure::<f64>(complex_dim);
        let j = &(&p.inverse().unwrap() * &j0) * &p;
        ModelSpace::new(&p.transpose() * &p, j).unwrap()
    })
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n).prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn commutator_satisfies_jacobi(a in endo(4), b in endo(4), c in endo(4)) {
        let br = |x: &Endo<f64>, y: &Endo<f64>| commutator(x, y).unwrap();
        let jac = br(&a, &br(&b, &c)).add(&br(&b, &br(&c, &a))).add(&br(&c, &br(&a, &b)));
        prop_assert!(jac.max_abs() < 1e-12);
    }

    #[test]
    fn metric_adjoint_is_an_involution(m in hermitian(2), a in endo(4)) {
        let twice = metric_adjoint(&metric_adjoint(&a, &m).unwrap(), &m).unwrap();
        prop_assert!(twice.dist(&a) < 1e-12);
    }

    #[test]
    fn orthonormal_frame_is_idempotent(m in hermitian(2), v in prop::collection::vec(vector(4), 3)) {
        let once = orthonormal_frame(&m, &v).unwrap();
        let twice = orthonormal_frame(&m, &once).unwrap();
        for (x, y) in once.iter().zip(&twice) {
            for (a, b) in x.iter().zip(y) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_holomorphic_curvature_is_algebraic(m in hermitian(2), c in -4.0..4.0f64) {
        let r = const_hol_curvature(&m, c);
        prop_assert!(r.symmetry_residuals().max() < 1e-12);
    }

    #[test]
    fn holomorphic_sectional_curvature_is_constant(m in hermitian(2), c in -4.0..4.0f64, x in vector(4)) {
        let r = const_hol_curvature(&m, c);
        prop_assert!((holomorphic_sectional(&r, &x).unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn constant_curvature_is_linear_in_c(m in hermitian(2), c1 in -4.0..4.0f64, c2 in -4.0..4.0f64) {
        let sum = const_hol_curvature(&m, c1).entries().add(const_hol_curvature(&m, c2).entries());
        prop_assert!(const_hol_curvature(&m, c1 + c2).entries().dist(&sum) < 1e-12);
    }

    #[test]
    fn gamma_anticommutes_with_j(omega in 0.25..4.0f64, s in -1.0..1.0f64, c in -1.0..1.0f64) {
        let t = build_twistor_model::<f64>(omega).unwrap();
        let vb = t.split().vertical();
        let v: Vec<f64> = vb[0].iter().zip(&vb[1]).map(|(a, b)| s * a + c * b).collect();
        let j = t.model().j_endo();
        let gv = gamma(&t, &v).unwrap();
        let gjv = gamma(&t, &t.model().apply_j(&v)).unwrap();
        prop_assert!(gjv.dist(&j.compose(&gv)) < 1e-12);
        prop_assert!(gjv.dist(&gv.compose(&j).scale(-1.0)) < 1e-12);
    }

    #[test]
    fn twistor_model_curvature_and_omega(omega in 0.25..4.0f64) {
        let t = build_twistor_model::<f64>(omega).unwrap().with_parallel_mode(true);
        let r = const_hol_curvature(t.model(), 2.0 * omega);
        let completed = curvature_from_AT(&t).unwrap().complete_with(&r).unwrap();
        prop_assert!(completed.symmetry_residuals().max() < 1e-10);
        prop_assert!(curv2_residuals(&r, &t).values().all(|v| *v < 1e-10));
        prop_assert!((omega_extract(&r, t.split()).unwrap().omega - omega).abs() < 1e-10);
        prop_assert!(kahler_foliation::foliation::beta_form(&t).schur_fit().1 < 1e-10);
    }

    #[test]
    fn classification_ignores_basis_rotation(theta in 0.0..6.3f64, phi in 0.0..6.3f64, omega in 0.5..3.0f64) {
        for t in [build_twistor_model::<f64>(omega).unwrap(), trivial_model::<f64>(2, 1).unwrap()] {
            let m = t.model().clone();
            let turn = |b: &[Vec<f64>], angle: f64| -> Vec<Vec<f64>> {
                // Rotating each complex line within itself keeps the basis J-adapted.
                b.chunks(2)
                    .flat_map(|p| {
                        let (u, w) = (&p[0], &p[1]);
                        let x: Vec<f64> = u.iter().zip(w).map(|(a, b)| angle.cos() * a + angle.sin() * b).collect();
                        let jx = m.apply_j(&x);
                        [x, jx]
                    })
                    .collect()
            };
            let split = SplitTangent::new(m.clone(), &turn(t.split().vertical(), theta), &turn(t.split().horizontal(), phi), 1e-10).unwrap();
            let rotated = ONeillTensors::new(split, t.a_tensor().clone(), t.t_tensor().clone(), false, 1e-10).unwrap();
            prop_assert_eq!(classify_pointwise(&rotated), classify_pointwise(&t));
        }
    }

    #[test]
    fn nearly_kahler_structure_is_compliant(omega in 0.25..4.0f64) {
        let t = build_twistor_model::<f64>(omega).unwrap().with_parallel_mode(true);
        let nk = canonical_variation(&t);
        prop_assert!(nk.invariant_residuals().max() < 1e-12);
        prop_assert!(lemma51_residual(&nk) < 1e-12);
        prop_assert!(psi_bracket_residual(&nk, Musical::NearlyKahler) < 1e-12);
        let r = const_hol_curvature(t.model(), 2.0 * omega);
        if curv2_residuals(&r, &t).values().all(|v| *v < 1e-10) {
            prop_assert!(chain_residual(&r, &nk) < 1e-10);
        }
    }

    #[test]
    fn hol_generate_is_closed_and_order_independent(gens in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 6), 1..4), seed in 0u64..1000) {
        let basis = so_basis::<f64>(4);
        let make = |c: &Vec<f64>| basis.iter().zip(c).fold(Endo::zeros(4), |acc, (b, &x)| acc.add(&b.scale(x)));
        let mut ops: Vec<Endo<f64>> = gens.iter().map(make).collect();
        let alg = hol_generate(&ops).unwrap();
        prop_assert!(alg.closure_residual() < 1e-10);
        let k = seed as usize % ops.len();
        ops.rotate_left(k);
        ops.reverse();
        prop_assert_eq!(hol_generate(&ops).unwrap().dim(), alg.dim());
    }

    #[test]
    fn report_passes_iff_within_tolerance(residual in prop_oneof![-1e3..1e3f64, Just(f64::NAN), Just(f64::INFINITY)], tol in 0.0..1e3f64) {
        let r = CheckReport::new("p", residual, tol);
        prop_assert_eq!(r.pass, residual <= tol);
        let back: CheckReport = serde_json::from_str(&r.to_json_line()).unwrap();
        prop_assert_eq!(back.pass, r.pass);
        if residual.is_finite() {
            prop_assert_eq!(back.residual, residual);
        }
    }

    #[test]
    fn polynomial_display_reparses(coeffs in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 0..5), zr in -1.0..1.0f64, zi in -1.0..1.0f64) {
        let p = ComplexPolynomial::new(coeffs.iter().map(|&(a, b)| Complex64::new(a, b)).collect());
        let q: ComplexPolynomial = p.to_string().parse().unwrap();
        let z = Complex64::new(zr, zi);
        prop_assert!((p.eval(z) - q.eval(z)).norm() < 1e-9);
    }
}

#[test]
fn calibration_has_a_single_zero() {
    let t = build_twistor_model::<f64>(2.0).unwrap().with_parallel_mode(true);
    let nk = canonical_variation(&t);
    let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.05).collect();
    let res: Vec<f64> = grid.iter().map(|&k| lemma51_residual(&nk.with_kappa(k))).collect();
    let zeros: Vec<f64> = grid.iter().zip(&res).filter(|(_, r)| **r < 1e-12).map(|(k, _)| *k).collect();
    assert_eq!(zeros.len(), 1);
    assert!((zeros[0] - nk.kappa()).abs() < 1e-12);
    let m = res.iter().position(|r| *r < 1e-12).unwrap();
    assert!(res[..=m].windows(2).all(|w| w[1] < w[0]));
    assert!(res[m..].windows(2).all(|w| w[1] > w[0]));
    // Beyond the zero the residual grows like κ², so it is convex there.
    assert!(res[m..].windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] > -1e-12));
}

#[test]
fn stabilizer_contains_the_unitary_algebra() {
    let m = ModelSpace::<f64>::euclidean(2);
    let r = const_hol_curvature(&m, 4.0);
    let model = InfinitesimalModel::new(4, kahler_foliation::Tensor3::zeros(4), r.entries().clone()).unwrap();
    let h = stabilizer_h(4, &model.torsion, &model.curvature).unwrap();
    let j = m.j_endo();
    let unitary: Vec<Endo<f64>> =
        so_basis::<f64>(4).into_iter().map(|a| a.add(&j.compose(&a).compose(&j).scale(-1.0)).scale(0.5)).collect();
    for a in &unitary {
        assert!(commutator(a, &j).unwrap().max_abs() < 1e-12);
        assert!(h.membership_residual(a) < 1e-10);
    }
}

#[test]
fn twistor_torsion_and_curvature_are_parallel() {
    let t = build_twistor_model::<f64>(2.0).unwrap().with_parallel_mode(true);
    let r = const_hol_curvature(t.model(), 4.0);
    let model = bott_infinitesimal_model(&r, &t).unwrap();
    let ops: Vec<Endo<f64>> = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|(i, j)| model.curvature_op(i, j)).collect();
    let h = hol_generate(&ops).unwrap();
    assert!(annihilation_residual(&h, &model) < 1e-8);
    let g = nomizu_build(&h, 6, &model.torsion, &model.curvature).unwrap();
    assert!(center(&g).is_empty());
    // The holonomy is u(1) ⊕ sp(1), whose centre is the u(1) factor.
    assert_eq!((h.dim(), center(&h).len()), (4, 1));
}

#[test]
fn catalog_parity_and_stability() {
    for e in table2_entries() {
        for x in e.instances(24) {
            assert!(x.dim_v % 2 == 0 && x.dim_v != 2, "{} {:?} {:?}", e.group_name, x.n, x.i);
            assert_eq!((x.dim_g - x.dim_h) % 2, 0);
        }
    }
    for e in table1_entries() {
        for x in e.instances(24) {
            assert_eq!((x.dim_g - x.dim_h) % 2, 0, "{} {:?}", e.group_name, x.n);
        }
    }
    let (a, b) = (overlap_check(12), overlap_check(24));
    assert_eq!((a.pass, a.structural_pass), (b.pass, b.structural_pass));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn model_json_round_trips_exactly(t in prop::collection::vec(-1e3..1e3f64, 27), k in prop::collection::vec(-1e3..1e3f64, 81)) {
        let model = InfinitesimalModel::new(
            3,
            kahler_foliation::Tensor3::from_vec(3, t).unwrap(),
            kahler_foliation::Tensor4::from_vec(3, k).unwrap(),
        )
        .unwrap();
        let back = InfinitesimalModel::<f64>::from_json(&model.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, model);
    }
}
