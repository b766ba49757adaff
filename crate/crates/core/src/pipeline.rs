//! End-to-end verification of the twistor fibration `CP^{2k+1} → HP^k`:
//! chart geometry, O'Neill tensors, the curvature identities, `Ω`, the
//! nearly Kähler chain and the Nomizu algebra of the Bott connection.

use serde_json::{json, Map, Value};

use crate::catalog::{overlap_check, table2_entries};
use crate::chart::{
    curvature_fd, kahler_residual, lemma_l1_derivative_residuals, oneill_from_chart, riemannian_foliation_residual,
    twistor_distribution, DistributionField, FdConfig, Scheme,
};
use crate::curvature::{const_hol_curvature, CurvatureTensor};
use crate::error::{Error, Result};
use crate::example4::{example4_build, example4_grid, example4_verify, twistor_n_factor, ComplexPolynomial, DEFAULT_TRANSVERSE};
use crate::foliation::{
    beta_form, curv2_residuals, curv4_residual, curvature_from_AT, gamma_product_residual, holomorphic_identity_residual,
    l_operator, lemma_l1_algebraic_residual, omega_extract, oneill_norms, sum_identity_residual, type_identity_residuals,
    v1_subspace, ONeillTensors,
};
use crate::holonomy::{
    center, hol_generate, irreducibility_check, jacobi_residual, nomizu_build, regularity_verdict, stabilizer_h,
    InfinitesimalModel, KillingVerdict, IRREDUCIBILITY_DRAWS,
};
use crate::nearly_kahler::{
    bott_infinitesimal_model, canonical_variation, chain_residual, lemma51_residual, psi_bracket_residual, Musical,
};
use crate::report::CheckReport;
use crate::tensor::Endo;

/// Sample points are drawn from the box `[-HALF_WIDTH, HALF_WIDTH]^{2m}`.
pub const HALF_WIDTH: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwistorConfig {
    pub complex_dim: usize,
    pub c: f64,
    pub fd: FdConfig,
    pub points: usize,
}

impl Default for TwistorConfig {
    fn default() -> Self {
        Self { complex_dim: 3, c: 4.0, fd: FdConfig::default(), points: 20 }
    }
}

impl TwistorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.complex_dim < 3 || self.complex_dim.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("complex dimension {} must be odd and at least 3", self.complex_dim)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("curvature {} must be positive", self.c)));
        }
        if self.points == 0 {
            return Err(Error::InvalidParameter("at least one sample point is required".into()));
        }
        FdConfig::new(self.fd.step, self.fd.scheme, self.fd.seed).map(|_| ())
    }

    /// Expected `Ω`: holomorphic sectional curvature `c` reads `R(X,JX)X = 2Ω JX`.
    pub fn omega(&self) -> f64 {
        self.c / 2.0
    }

    fn curvature_tol(&self) -> f64 {
        match self.fd.scheme {
            Scheme::Richardson2Level => 1e-4,
            Scheme::Central2nd => 1e-3,
        }
    }
}

pub struct TwistorRun {
    pub reports: Vec<CheckReport>,
    /// Bott-connection infinitesimal model at the first sample point that
    /// completed.
    pub model: Option<InfinitesimalModel<f64>>,
}

fn fold_max<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(*b) })
}

/// Runs every check in a fixed order; identical configurations give
/// identical reports. A point whose computation fails contributes a failing
/// `point` report carrying the error.
pub fn run_twistor(cfg: &TwistorConfig) -> Result<TwistorRun> {
    cfg.validate()?;
    let dist = twistor_distribution(cfg.complex_dim, cfg.c)?;
    let points = dist.chart().sample_points(cfg.points, HALF_WIDTH, cfg.fd.seed);
    let mut reports = Vec::new();
    let mut model = None;
    for (idx, p) in points.iter().enumerate() {
        let mut ctx = Map::new();
        ctx.insert("point_index".into(), json!(idx));
        ctx.insert("point".into(), json!(p));
        ctx.insert("seed".into(), json!(cfg.fd.seed));
        ctx.insert("step".into(), json!(cfg.fd.step));
        ctx.insert("scheme".into(), json!(cfg.fd.scheme.to_string()));
        match point_checks(cfg, &dist, p) {
            Ok((point_reports, bott, h_dim)) => {
                reports.extend(point_reports.into_iter().map(|r| r.with_context(&ctx)));
                if model.is_none() {
                    model = Some((idx, bott, h_dim));
                }
            }
            Err(e) => reports.push(CheckReport::verdict("point", false).with("error", e.to_string()).with_context(&ctx)),
        }
    }
    match &model {
        Some((idx, bott, h_dim)) => {
            let mut ctx = Map::new();
            ctx.insert("point_index".into(), json!(idx));
            ctx.insert("seed".into(), json!(cfg.fd.seed));
            reports.extend(
                nomizu_checks(bott, &twistor_nomizu_options(*h_dim, cfg.fd.seed)).into_iter().map(|r| r.with_context(&ctx)),
            );
        }
        None => reports.push(CheckReport::verdict("nomizu.model", false).with("error", "no sample point produced a model")),
    }
    reports.extend(algebraic_checks(cfg.omega())?);
    Ok(TwistorRun { reports, model: model.map(|(_, m, _)| m) })
}

fn point_checks(
    cfg: &TwistorConfig,
    dist: &DistributionField,
    p: &[f64],
) -> Result<(Vec<CheckReport>, InfinitesimalModel<f64>, usize)> {
    let fd = &cfg.fd;
    let chart = dist.chart();
    let mut out = Vec::new();
    let r = curvature_fd(chart, p, fd)?;
    let exact = const_hol_curvature(r.model(), cfg.c);
    out.push(CheckReport::new("curvature.oracle", r.dist(&exact), 1e-4));
    out.push(CheckReport::new("curvature.symmetries", r.symmetry_residuals().max(), cfg.curvature_tol()));
    out.push(CheckReport::new("kahler", kahler_residual(chart, p, fd)?, 1e-4));
    out.push(CheckReport::new("vertical.j_invariance", dist.j_invariance_residual(p)?, 1e-8));

    let t = oneill_from_chart(dist, p, fd)?;
    let (a_norm, t_norm) = oneill_norms(&t);
    out.push(CheckReport::new("oneill.invariants", t.invariant_residuals().max(), 1e-6));
    out.push(CheckReport::new("oneill.t_norm", t_norm, 1e-5));
    out.push(CheckReport::informational("oneill.a_norm", a_norm));
    out.push(CheckReport::new("riemannian", riemannian_foliation_residual(dist, p, fd)?, 1e-4));
    out.push(CheckReport::new("type_identities", fold_max(type_identity_residuals(&t).values()), 1e-5));
    out.push(CheckReport::new("lemma_l1.algebraic", lemma_l1_algebraic_residual(&t), 1e-5));
    for (k, v) in lemma_l1_derivative_residuals(dist, p, fd)? {
        out.push(CheckReport::new(format!("lemma_l1.derivative.{k}"), v, 1e-3));
    }

    // Derivative terms are measured above, so the parallel closure applies.
    let t = t.with_parallel_mode(true);
    for (k, v) in curvature_from_AT(&t)?.compare(&r) {
        out.push(CheckReport::new(format!("curvature_closure.{k}"), v, 1e-3));
    }
    for (k, v) in curv2_residuals(&r, &t) {
        out.push(CheckReport::new(format!("curv2.{k}"), v, 1e-3));
    }
    let fit = omega_extract(&r, t.split())?;
    out.push(
        CheckReport::new("omega", (fit.omega - cfg.omega()).abs(), 1e-3)
            .with("omega", fit.omega)
            .with("fit_residual", fit.residual),
    );
    out.push(CheckReport::new("holomorphic_identity", holomorphic_identity_residual(&r, t.split(), cfg.omega()), 1e-3));
    out.push(CheckReport::new("sum_identity", sum_identity_residual(&r, &t), 1e-3));

    let (ta, ra) = adapted(&r, &t)?;
    let nk = canonical_variation(&ta);
    out.push(CheckReport::new("nk.lemma51", lemma51_residual(&nk), 1e-6).with("kappa", nk.kappa()));
    out.push(CheckReport::new("nk.psi_brackets", psi_bracket_residual(&nk, Musical::NearlyKahler), 1e-6));
    out.push(CheckReport::new("nk.chain", chain_residual(&ra, &nk), 1e-3));
    let bott = bott_infinitesimal_model(&ra, &ta)?;
    Ok((out, bott, ta.split().dim_h()))
}

fn adapted(r: &CurvatureTensor<f64>, t: &ONeillTensors<f64>) -> Result<(ONeillTensors<f64>, CurvatureTensor<f64>)> {
    let frame = t.split().adapted_frame();
    Ok((t.in_adapted_frame(1e-8)?, r.in_frame(&frame, 1e-8)?))
}

/// Chart data carry finite-difference error, hence the loose Jacobi gate.
fn twistor_nomizu_options(h_dim: usize, seed: u64) -> NomizuOptions {
    NomizuOptions { source: HSource::Holonomy, h_dim: Some(h_dim), jacobi_tol: 1e-6, require_compact: true, seed }
}

/// Choice of the subalgebra `h` for the Nomizu construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HSource {
    /// Lie algebra generated by the curvature operators.
    Holonomy,
    /// Every skew endomorphism annihilating torsion and curvature.
    Stabilizer,
}

impl HSource {
    fn name(self) -> &'static str {
        match self {
            HSource::Holonomy => "holonomy",
            HSource::Stabilizer => "stabilizer",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NomizuOptions {
    pub source: HSource,
    /// When set, the leading `h_dim` coordinates span `H` and irreducibility
    /// on `H` is checked.
    pub h_dim: Option<usize>,
    pub jacobi_tol: f64,
    /// Gate on a negative definite Killing form; otherwise it is only recorded.
    pub require_compact: bool,
    pub seed: u64,
}

impl Default for NomizuOptions {
    fn default() -> Self {
        Self { source: HSource::Stabilizer, h_dim: None, jacobi_tol: 1e-6, require_compact: false, seed: 42 }
    }
}

/// Nomizu algebra of `model` on the chosen `h`, with its diagnostics.
pub fn nomizu_checks(model: &InfinitesimalModel<f64>, opts: &NomizuOptions) -> Vec<CheckReport> {
    let n = model.dim;
    let source = opts.source;
    let h = match source {
        HSource::Holonomy => {
            let ops: Vec<Endo<f64>> =
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| model.curvature_op(i, j)).collect();
            hol_generate(&ops)
        }
        HSource::Stabilizer => stabilizer_h(n, &model.torsion, &model.curvature),
    };
    let h = match h {
        Ok(h) => h,
        Err(e) => {
            return vec![CheckReport::verdict("nomizu.h", false).with("source", source.name()).with("error", e.to_string())]
        }
    };
    let mut out = vec![CheckReport::informational("nomizu.h_dim", h.dim() as f64).with("source", source.name())];
    let g = match nomizu_build(&h, n, &model.torsion, &model.curvature) {
        Ok(g) => g,
        Err(e) => {
            out.push(CheckReport::verdict("nomizu.build", false).with("error", e.to_string()));
            return out;
        }
    };
    out.push(CheckReport::informational("nomizu.algebra_dim", g.dim() as f64));
    out.push(CheckReport::new("nomizu.jacobi", jacobi_residual(&g), opts.jacobi_tol));
    let reg = regularity_verdict(&g);
    out.push(CheckReport::new("nomizu.h_center_dim", reg.h_center_dim as f64, 0.0));
    out.push(CheckReport::new("nomizu.g_center_dim", center(&g).len() as f64, 0.0));
    let compact = reg.killing.verdict == KillingVerdict::NegativeDefinite;
    let killing = if opts.require_compact {
        CheckReport::verdict("nomizu.killing_negative_definite", compact)
    } else {
        CheckReport::informational("nomizu.killing_negative_definite", if compact { 0.0 } else { 1.0 })
    };
    out.push(
        killing
            .with("verdict", reg.killing.verdict.to_string())
            .with("eigenvalues", Value::from(reg.killing.eigenvalues.clone())),
    );
    if let Some(h_dim) = opts.h_dim {
        let hb: Vec<Vec<f64>> = (0..h_dim).map(|i| crate::linalg::unit(n, i)).collect();
        let mut reducible = 0usize;
        for draw in 0..IRREDUCIBILITY_DRAWS as u64 {
            match irreducibility_check(&h, &hb, opts.seed.wrapping_add(draw)) {
                Ok(v) if v.is_irreducible() => {}
                _ => reducible += 1,
            }
        }
        out.push(CheckReport::new("nomizu.reducible_draws_on_h", reducible as f64, 0.0).with("draws", IRREDUCIBILITY_DRAWS));
    }
    out.push(
        CheckReport::verdict("nomizu.regular", reg.regular)
            .with("h_center_dim", reg.h_center_dim)
            .with("g_center_dim", reg.g_center_dim),
    );
    out
}

/// Exact checks on the algebraic twistor model with the given `Ω`.
pub fn algebraic_checks(omega: f64) -> Result<Vec<CheckReport>> {
    let t = crate::foliation::build_twistor_model(omega)?;
    let r = const_hol_curvature(t.model(), 2.0 * omega);
    let mut out = vec![
        CheckReport::new("algebraic.type_identities", fold_max(type_identity_residuals(&t).values()), 1e-12),
        CheckReport::new("algebraic.lemma_l1", lemma_l1_algebraic_residual(&t), 0.0),
    ];
    for (k, v) in curv2_residuals(&r, &t) {
        out.push(CheckReport::new(format!("algebraic.curv2.{k}"), v, 1e-10));
    }
    let fit = omega_extract(&r, t.split())?;
    out.push(CheckReport::new("algebraic.omega", (fit.omega - omega).abs(), 1e-10));
    out.push(CheckReport::new("algebraic.gamma_product", gamma_product_residual(&t, omega), 1e-12));
    out.push(CheckReport::new("algebraic.curv4", curv4_residual(&t, omega), 1e-12));
    let (k, fit_res) = beta_form(&t).schur_fit();
    let dim_h = t.split().dim_h() as f64;
    out.push(CheckReport::new("algebraic.beta_schur", fit_res, 1e-10).with("k", k));
    out.push(CheckReport::new("algebraic.beta_constant", (k - omega * dim_h / 2.0).abs(), 1e-10));
    let (v1, _) = v1_subspace(&t);
    let l = l_operator(&t, &v1)?;
    let n = t.model().dim();
    // L = Ω on H and 0 on V.
    let mut target = Endo::zeros(n);
    for h in t.split().horizontal() {
        target = target.add(&Endo(outer(h, &t.model().metric().matvec(h))));
    }
    out.push(CheckReport::new("algebraic.l_operator", l.dist(&target.scale(omega)), 1e-10));
    out.push(CheckReport::new("algebraic.sum_identity", sum_identity_residual(&r, &t), 1e-10));
    let t = t.with_parallel_mode(true);
    let nk = canonical_variation(&t);
    out.push(CheckReport::new("algebraic.nk.lemma51", lemma51_residual(&nk), 1e-12));
    out.push(CheckReport::new("algebraic.nk.psi_brackets", psi_bracket_residual(&nk, Musical::NearlyKahler), 1e-12));
    out.push(CheckReport::new("algebraic.nk.chain", chain_residual(&r, &nk), 1e-10));
    Ok(out)
}

/// Grid verification of the deformed product over `CP^3 → HP^1`. Points
/// where `|f| ≥ 1` fail the `example4.modulus` check and stop the run.
pub fn example4_checks(f: ComplexPolynomial, side: usize, tol: f64, fd: &FdConfig) -> Result<Vec<CheckReport>> {
    if side == 0 {
        return Err(Error::InvalidParameter("grid side must be positive".into()));
    }
    let spec = f.to_string();
    let grid = example4_grid(side, &DEFAULT_TRANSVERSE);
    let built = match example4_build(f, &twistor_n_factor()?, &grid) {
        Ok(b) => b,
        Err(Error::ModulusViolation { point, modulus }) => {
            return Ok(vec![CheckReport::new("example4.modulus", modulus, 1.0)
                .with("point", point)
                .with("f", spec)
                .with("note", "|f| must stay below 1")]);
        }
        Err(e) => return Err(e),
    };
    let points = example4_verify(&built, &grid, fd)?;
    let mut out = Vec::with_capacity(points.len() * 6);
    for (idx, q) in points.iter().enumerate() {
        let mut ctx = Map::new();
        ctx.insert("point_index".into(), json!(idx));
        ctx.insert("point".into(), json!(q.point));
        ctx.insert("f".into(), json!(spec));
        ctx.insert("modulus".into(), json!(q.modulus));
        let rows = [
            CheckReport::new("example4.j_square", q.j_square, 1e-12),
            CheckReport::verdict("example4.metric_spd", q.min_metric_eigenvalue > 0.0)
                .with("min_eigenvalue", q.min_metric_eigenvalue),
            CheckReport::new("example4.kahler", q.kahler, tol),
            CheckReport::new("example4.riemannian", q.riemannian, tol),
            CheckReport::verdict("example4.non_polar", q.a_norm > 1e-3).with("a_norm", q.a_norm),
            // Whether T vanishes is left open; the value is recorded, not gated.
            CheckReport::informational("example4.t_norm", q.t_norm)
                .with("t_nonzero", q.t_norm > 1e-6)
                .with("label", q.label.to_string()),
        ];
        out.extend(rows.into_iter().map(|r| r.with_context(&ctx)));
    }
    Ok(out)
}

/// Printed fibre dimensions against intermediate subgroups, and the
/// isotropy comparison between the two tables.
pub fn catalog_checks(bound: u32) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for (row, e) in table2_entries().iter().enumerate() {
        let xs = e.instances(bound);
        let worst = xs.iter().map(|x| x.dim_v.abs_diff(x.fibre_dim)).max().unwrap_or(0);
        out.push(
            CheckReport::new("catalog.dim_v", worst as f64, 0.0)
                .with("row", row)
                .with("group", e.group_name.clone())
                .with("printed", e.dim_v_formula.clone())
                .with("instances", xs.len()),
        );
    }
    let overlap = overlap_check(bound);
    let equal: Vec<Value> = overlap
        .failures()
        .map(|p| json!({"group": p.group.to_string(), "n": p.n, "i": p.i, "dim_h": p.symmetric_dim_h}))
        .collect();
    out.push(
        CheckReport::new("catalog.overlap.dimension", equal.len() as f64, 0.0)
            .with("bound", bound)
            .with("pairs", overlap.pairs.len())
            .with("equal_dimensions", equal),
    );
    let same = overlap.pairs.iter().filter(|p| !p.structurally_distinct).count();
    out.push(
        CheckReport::new("catalog.overlap.structural", same as f64, 0.0).with("bound", bound).with("pairs", overlap.pairs.len()),
    );
    out
}

fn outer(u: &[f64], v: &[f64]) -> crate::linalg::Mat<f64> {
    crate::linalg::Mat::from_fn(u.len(), v.len(), |a, b| u[a] * v[b])
}
