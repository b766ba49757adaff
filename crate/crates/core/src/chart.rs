//! Coordinate charts of Hermitian manifolds, differentiated by finite
//! differences. Everything here is `f64`: step-size arithmetic does not
//! benefit from a generic scalar.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::foliation::{j_adapted, ONeillTensors, Residuals, SplitTangent};
use crate::linalg::{self, Mat};
use crate::sampling::seeded_rng;
use crate::tensor::{standard_complex_structure, ModelSpace, Tensor3, Tensor4};
use rand::Rng;

/// Tolerance used when turning chart data at a point into a [`ModelSpace`].
pub const POINT_MODEL_TOL: f64 = 1e-10;

pub type MatField = Arc<dyn Fn(&[f64]) -> Mat<f64> + Send + Sync>;
pub type FrameField = Arc<dyn Fn(&[f64]) -> Result<Vec<Vec<f64>>> + Send + Sync>;

/// Metric and complex structure fields on a coordinate box.
#[derive(Clone)]
pub struct Chart {
    real_dim: usize,
    metric: MatField,
    j: MatField,
    domain: Vec<(f64, f64)>,
    kahler: bool,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("real_dim", &self.real_dim)
            .field("domain", &self.domain)
            .field("kahler", &self.kahler)
            .finish()
    }
}

impl Chart {
    pub fn new(
        metric: impl Fn(&[f64]) -> Mat<f64> + Send + Sync + 'static,
        j: impl Fn(&[f64]) -> Mat<f64> + Send + Sync + 'static,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let real_dim = domain.len();
        if real_dim == 0 || !real_dim.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("chart dimension {real_dim} is not positive and even")));
        }
        if let Some((k, _)) = domain.iter().enumerate().find(|(_, (lo, hi))| !(lo < hi)) {
            return Err(Error::InvalidParameter(format!("empty domain interval on axis {k}")));
        }
        Ok(Self { real_dim, metric: Arc::new(metric), j: Arc::new(j), domain, kahler: false })
    }

    /// Marks the chart as Kähler, so its curvature carries the Kähler symmetries.
    pub fn declare_kahler(mut self) -> Self {
        self.kahler = true;
        self
    }

    pub fn is_kahler(&self) -> bool {
        self.kahler
    }

    pub fn real_dim(&self) -> usize {
        self.real_dim
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn metric_at(&self, p: &[f64]) -> Mat<f64> {
        (self.metric)(p)
    }

    pub fn j_at(&self, p: &[f64]) -> Mat<f64> {
        (self.j)(p)
    }

    /// Validated tangent space at `p`.
    pub fn model_at(&self, p: &[f64]) -> Result<ModelSpace<f64>> {
        self.check_point(p, 0.0)?;
        ModelSpace::with_tolerance(self.metric_at(p), self.j_at(p), POINT_MODEL_TOL)
    }

    /// Rejects points whose `margin`-neighbourhood leaves the domain.
    pub fn check_point(&self, p: &[f64], margin: f64) -> Result<()> {
        if p.len() != self.real_dim {
            return Err(Error::DimensionMismatch { expected: self.real_dim, found: p.len() });
        }
        for (axis, (&x, &(lo, hi))) in p.iter().zip(&self.domain).enumerate() {
            let room = (x - lo).min(hi - x);
            if !(room >= margin) {
                return Err(Error::MarginViolation { axis, margin: room, required: margin });
            }
        }
        Ok(())
    }

    /// Seeded uniform points in the box `[-half_width, half_width]` around the origin.
    pub fn sample_points(&self, count: usize, half_width: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded_rng(seed);
        (0..count).map(|_| (0..self.real_dim).map(|_| rng.gen_range(-half_width..half_width)).collect()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[serde(rename = "central_2nd")]
    Central2nd,
    #[serde(rename = "richardson_2level")]
    Richardson2Level,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Central2nd => "central_2nd",
            Scheme::Richardson2Level => "richardson_2level",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central_2nd" | "central" => Ok(Scheme::Central2nd),
            "richardson_2level" | "richardson" => Ok(Scheme::Richardson2Level),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub step: f64,
    pub scheme: Scheme,
    pub seed: u64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { step: 1e-3, scheme: Scheme::Richardson2Level, seed: 42 }
    }
}

impl FdConfig {
    pub fn new(step: f64, scheme: Scheme, seed: u64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("finite-difference step {step} must be positive")));
        }
        Ok(Self { step, scheme, seed })
    }
}

/// Partial derivative along axis `i` of a vector-valued function.
fn partial<F>(f: &F, p: &[f64], i: usize, cfg: &FdConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let central = |h: f64| -> Result<Vec<f64>> {
        let mut q = p.to_vec();
        q[i] = p[i] + h;
        let plus = f(&q)?;
        q[i] = p[i] - h;
        let minus = f(&q)?;
        Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    match cfg.scheme {
        Scheme::Central2nd => central(cfg.step),
        Scheme::Richardson2Level => {
            let coarse = central(cfg.step)?;
            let fine = central(cfg.step / 2.0)?;
            Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
        }
    }
}

fn partials<F>(f: &F, p: &[f64], cfg: &FdConfig) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    (0..p.len()).map(|i| partial(f, p, i, cfg)).collect()
}

fn christoffel_raw(chart: &Chart, p: &[f64], cfg: &FdConfig) -> Result<Tensor3<f64>> {
    let n = chart.real_dim;
    let g = chart.metric_at(p);
    let ginv = g.inverse().ok_or_else(|| Error::DegenerateFrame("singular metric".into()))?;
    let dg = partials(&|q: &[f64]| Ok(chart.metric_at(q).into_vec()), p, cfg)?;
    let d = |i: usize, a: usize, b: usize| dg[i][a * n + b];
    let lowered = Tensor3::from_fn(n, |i, j, l| 0.5 * (d(i, j, l) + d(j, i, l) - d(l, i, j)));
    Ok(Tensor3::from_fn(n, |i, j, k| (0..n).map(|l| ginv[(k, l)] * lowered[(i, j, l)]).sum()))
}

/// Levi-Civita symbols with `(i, j, k)` holding `Γᵏᵢⱼ`, so that
/// `eval(X, Y)` is `∇_X Y` for constant-coefficient `Y`.
pub fn christoffel_fd(chart: &Chart, p: &[f64], cfg: &FdConfig) -> Result<Tensor3<f64>> {
    chart.check_point(p, 2.0 * cfg.step)?;
    christoffel_raw(chart, p, cfg)
}

/// Lowered curvature `R(e_i, e_j, e_k, e_l) = g(R(e_i, e_j) e_k, e_l)` with
/// `R(X, Y) = ∇²_{Y,X} − ∇²_{X,Y}`.
pub fn curvature_fd(chart: &Chart, p: &[f64], cfg: &FdConfig) -> Result<CurvatureTensor<f64>> {
    chart.check_point(p, 4.0 * cfg.step)?;
    let n = chart.real_dim;
    let model = chart.model_at(p)?;
    let gam = christoffel_raw(chart, p, cfg)?;
    let dgam = partials(&|q: &[f64]| Ok(christoffel_raw(chart, q, cfg)?.as_slice().to_vec()), p, cfg)?;
    // Standard-sign R^l_{ijk}, then flipped and lowered.
    let dg = |m: usize, i: usize, j: usize, k: usize| dgam[m][(i * n + j) * n + k];
    let mut std = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = dg(i, j, k, l) - dg(j, i, k, l);
                    for m in 0..n {
                        s += gam[(i, m, l)] * gam[(j, k, m)] - gam[(j, m, l)] * gam[(i, k, m)];
                    }
                    std[((i * n + j) * n + k) * n + l] = s;
                }
            }
        }
    }
    let g = model.metric().clone();
    let entries = Tensor4::from_fn(n, |i, j, k, l| -(0..n).map(|m| g[(l, m)] * std[((i * n + j) * n + k) * n + m]).sum::<f64>());
    CurvatureTensor::from_entries(model, entries, chart.kahler)
}

/// Sup-norm of `∇J` at `p`.
pub fn kahler_residual(chart: &Chart, p: &[f64], cfg: &FdConfig) -> Result<f64> {
    chart.check_point(p, 2.0 * cfg.step)?;
    let n = chart.real_dim;
    let gam = christoffel_raw(chart, p, cfg)?;
    let j = chart.j_at(p);
    let dj = partials(&|q: &[f64]| Ok(chart.j_at(q).into_vec()), p, cfg)?;
    let mut worst: f64 = 0.0;
    for (i, dji) in dj.iter().enumerate() {
        let gi = Mat::from_fn(n, n, |k, m| gam[(i, m, k)]);
        let c = &(&gi * &j) - &(&j * &gi);
        for (a, b) in dji.iter().zip(c.as_slice()) {
            worst = worst.max((a + b).abs());
        }
    }
    Ok(worst)
}

/// A chart together with a field of frames spanning the vertical distribution.
#[derive(Clone)]
pub struct DistributionField {
    chart: Chart,
    frame: FrameField,
}

impl fmt::Debug for DistributionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionField").field("chart", &self.chart).finish()
    }
}

impl DistributionField {
    pub fn new(chart: Chart, frame: impl Fn(&[f64]) -> Result<Vec<Vec<f64>>> + Send + Sync + 'static) -> Self {
        Self { chart, frame: Arc::new(frame) }
    }

    /// Constant frame of coordinate axes.
    pub fn coordinate(chart: Chart, axes: Vec<usize>) -> Result<Self> {
        let n = chart.real_dim();
        if axes.is_empty() || axes.iter().any(|&a| a >= n) {
            return Err(Error::InvalidParameter(format!("coordinate axes {axes:?} out of range for dimension {n}")));
        }
        Ok(Self::new(chart, move |_| Ok(axes.iter().map(|&a| linalg::unit(n, a)).collect())))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn frame_at(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let frame = (self.frame)(p)?;
        if frame.is_empty() || frame.iter().any(|v| v.len() != self.chart.real_dim) {
            return Err(Error::DegenerateFrame("vertical frame has the wrong shape".into()));
        }
        Ok(frame)
    }

    /// `g`-orthogonal projector onto the vertical space at `p`.
    pub fn projector_at(&self, p: &[f64]) -> Result<Mat<f64>> {
        let u = Mat::from_columns(&self.frame_at(p)?);
        let g = self.chart.metric_at(p);
        let ug = &u.transpose() * &g;
        let gram = &ug * &u;
        let inv = gram.inverse().ok_or_else(|| Error::DegenerateFrame("vertical frame is dependent".into()))?;
        Ok(&(&u * &inv) * &ug)
    }

    /// Validated vertical and horizontal `J`-adapted orthonormal bases at `p`.
    pub fn split_at(&self, p: &[f64]) -> Result<SplitTangent<f64>> {
        let model = self.chart.model_at(p)?;
        let frame = self.frame_at(p)?;
        let n = model.dim();
        let vb = j_adapted(&model, &[], &frame);
        if vb.len() != frame.len() {
            return Err(Error::DegenerateFrame(format!(
                "vertical frame spans {} of {} directions or is not J-invariant",
                vb.len(),
                frame.len()
            )));
        }
        let axes: Vec<Vec<f64>> = (0..n).map(|i| linalg::unit(n, i)).collect();
        let hb = j_adapted(&model, &vb, &axes);
        SplitTangent::new(model, &vb, &hb, 1e-8)
    }

    /// Size of the component of `J(vertical)` leaving the vertical space.
    pub fn j_invariance_residual(&self, p: &[f64]) -> Result<f64> {
        let proj = self.projector_at(p)?;
        let j = self.chart.j_at(p);
        let mut worst: f64 = 0.0;
        for v in self.frame_at(p)? {
            let jv = j.matvec(&v);
            let off = linalg::sub(&jv, &proj.matvec(&jv));
            worst = worst.max(linalg::max_abs(&off) / linalg::max_abs(&v).max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }

    pub fn validate_at(&self, p: &[f64]) -> Result<()> {
        self.split_at(p)?;
        let r = self.j_invariance_residual(p)?;
        if r > 1e-8 {
            return Err(Error::NotInvariant { residual: r });
        }
        Ok(())
    }
}

/// Affine-chart Fubini–Study metric of holomorphic sectional curvature `c`.
/// Real coordinates are `(x₁, y₁, x₂, y₂, …)`; at the origin the metric is `(4/c)·I`.
pub fn fubini_study_chart(complex_dim: usize, c: f64) -> Result<Chart> {
    if complex_dim == 0 {
        return Err(Error::InvalidParameter("complex dimension must be positive".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("curvature {c} must be positive")));
    }
    let n = 2 * complex_dim;
    let metric = move |p: &[f64]| {
        let z = complex_coords(p);
        let r = 1.0 + z.iter().map(|w| w.norm_sqr()).sum::<f64>();
        let unit = |a: usize| if a.is_multiple_of(2) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
        Mat::from_fn(n, n, |a, b| {
            let (ka, kb) = (a / 2, b / 2);
            let (ua, ub) = (unit(a), unit(b));
            let inner = if ka == kb { ub.conj() * ua } else { Complex64::new(0.0, 0.0) };
            let h = (inner * r - z[ka].conj() * ua * (z[kb].conj() * ub).conj()) / (r * r);
            4.0 / c * h.re
        })
    };
    let j = standard_complex_structure::<f64>(complex_dim);
    Chart::new(metric, move |_| j.clone(), vec![(-2.0, 2.0); n]).map(Chart::declare_kahler)
}

fn complex_coords(p: &[f64]) -> Vec<Complex64> {
    p.chunks_exact(2).map(|w| Complex64::new(w[0], w[1])).collect()
}

/// Flat `Cⁿ` with its standard structure.
pub fn euclidean_chart(complex_dim: usize) -> Result<Chart> {
    let n = 2 * complex_dim;
    let j = standard_complex_structure::<f64>(complex_dim);
    Chart::new(move |_| Mat::identity(n), move |_| j.clone(), vec![(-1.0, 1.0); n]).map(Chart::declare_kahler)
}

/// Flat product `C^a × C^b` foliated by the first factor.
pub fn flat_product(complex_dim_v: usize, complex_dim_h: usize) -> Result<DistributionField> {
    let chart = euclidean_chart(complex_dim_v + complex_dim_h)?;
    DistributionField::coordinate(chart, (0..2 * complex_dim_v).collect())
}

/// `R⁴` with metric `diag(1, 1, φ, φ)`, `φ = exp(x₁ + x₁x₃)` varying along the
/// vertical axes `x₁, y₁`: Hermitian, but the foliation is not Riemannian.
pub fn sheared_product() -> Result<DistributionField> {
    let metric = |p: &[f64]| {
        let phi = (p[0] + p[0] * p[2]).exp();
        Mat::from_fn(4, 4, |a, b| {
            if a != b {
                0.0
            } else if a < 2 {
                1.0
            } else {
                phi
            }
        })
    };
    let j = standard_complex_structure::<f64>(2);
    let chart = Chart::new(metric, move |_| j.clone(), vec![(-1.0, 1.0); 4])?.declare_kahler();
    DistributionField::coordinate(chart, vec![0, 1])
}

/// Flat `R⁴` with the orthogonal complex structure `Q J₀ Qᵀ`, `Q` a rotation
/// in the `(x₁, x₂)` plane by the angle `x₁/2`: Hermitian but not Kähler.
pub fn rotated_structure_chart() -> Result<Chart> {
    let j0 = standard_complex_structure::<f64>(2);
    let j = move |p: &[f64]| {
        let (s, c) = (0.5 * p[0]).sin_cos();
        let mut q = Mat::identity(4);
        q[(0, 0)] = c;
        q[(0, 2)] = -s;
        q[(2, 0)] = s;
        q[(2, 2)] = c;
        &(&q * &j0) * &q.transpose()
    };
    Chart::new(|_| Mat::identity(4), j, vec![(-1.0, 1.0); 4])
}

/// Vertical frame `(u, Ju)` of `CP^{2k+1} → HP^k` at the affine point `z`.
/// The homogeneous lift `v = (1, z)` is paired with its quaternionic partner
/// `vj`, whose chart image is `u`.
pub fn twistor_vertical(p: &[f64]) -> Result<Vec<Vec<f64>>> {
    if p.is_empty() || p.len() % 4 != 2 {
        return Err(Error::InvalidParameter(format!(
            "twistor chart needs odd complex dimension, got real dimension {}",
            p.len()
        )));
    }
    let z = complex_coords(p);
    let mut v = vec![Complex64::new(1.0, 0.0)];
    v.extend(&z);
    let sigma: Vec<Complex64> = v.chunks_exact(2).flat_map(|w| [-w[1].conj(), w[0].conj()]).collect();
    let u: Vec<Complex64> = z.iter().enumerate().map(|(k, zk)| sigma[k + 1] - sigma[0] * zk).collect();
    let size = u.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    if !(size > 1e-8) {
        return Err(Error::DegenerateFrame(format!("fiber direction degenerates at {p:?}")));
    }
    let re: Vec<f64> = u.iter().flat_map(|w| [w.re, w.im]).collect();
    let im: Vec<f64> = u.iter().flat_map(|w| [-w.im, w.re]).collect();
    Ok(vec![re, im])
}

/// Fubini–Study chart of `CP^{complex_dim}` foliated by twistor fibres.
pub fn twistor_distribution(complex_dim: usize, c: f64) -> Result<DistributionField> {
    if complex_dim.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("twistor fibration needs odd complex dimension, got {complex_dim}")));
    }
    Ok(DistributionField::new(fubini_study_chart(complex_dim, c)?, twistor_vertical))
}

/// Coordinate-frame `A`, `T` and the vertical projector at a point.
struct CoordinateOneill {
    gamma: Tensor3<f64>,
    a: Tensor3<f64>,
    t: Tensor3<f64>,
}

fn coordinate_oneill(dist: &DistributionField, p: &[f64], cfg: &FdConfig) -> Result<CoordinateOneill> {
    let n = dist.chart.real_dim;
    let gamma = christoffel_raw(&dist.chart, p, cfg)?;
    let pv = dist.projector_at(p)?;
    let q = &Mat::identity(n) - &pv;
    let dp: Vec<Mat<f64>> = partials(&|x: &[f64]| Ok(dist.projector_at(x)?.into_vec()), p, cfg)?
        .into_iter()
        .map(|d| Mat::from_vec(n, n, d))
        .collect();
    let along = |x: &[f64]| -> Mat<f64> {
        let mut m = Mat::zeros(n, n);
        for (xl, dl) in x.iter().zip(&dp) {
            m = &m + &dl.scale(*xl);
        }
        m
    };
    // ∇_X(M e_j) for a projector field M, with dQ = −dP.
    let nabla = |x: &[f64], dm: &Mat<f64>, m: &Mat<f64>, j: usize| linalg::add(&dm.column(j), &gamma.eval(x, &m.column(j)));
    let mut a = vec![0.0; n * n * n];
    let mut t = vec![0.0; n * n * n];
    for i in 0..n {
        let x = q.column(i);
        let v = pv.column(i);
        let (dpx, dpv) = (along(&x), along(&v));
        let (dqx, dqv) = (dpx.scale(-1.0), dpv.scale(-1.0));
        for j in 0..n {
            let aij = linalg::add(&pv.matvec(&nabla(&x, &dqx, &q, j)), &q.matvec(&nabla(&x, &dpx, &pv, j)));
            let tij = linalg::add(&q.matvec(&nabla(&v, &dpv, &pv, j)), &pv.matvec(&nabla(&v, &dqv, &q, j)));
            a[(i * n + j) * n..(i * n + j + 1) * n].copy_from_slice(&aij);
            t[(i * n + j) * n..(i * n + j + 1) * n].copy_from_slice(&tij);
        }
    }
    Ok(CoordinateOneill { gamma, a: Tensor3::from_vec(n, a)?, t: Tensor3::from_vec(n, t)? })
}

/// `A` and `T` at `p` in chart coordinates, from covariant derivatives of the
/// vertical and horizontal projector fields. `parallel_mode` is left off.
pub fn oneill_from_chart(dist: &DistributionField, p: &[f64], cfg: &FdConfig) -> Result<ONeillTensors<f64>> {
    dist.chart.check_point(p, 2.0 * cfg.step)?;
    let split = dist.split_at(p)?;
    let c = coordinate_oneill(dist, p, cfg)?;
    ONeillTensors::new_unchecked(split, c.a, c.t, false)
}

/// Sup over unit vertical `V` and orthonormal horizontal `X, Y` of `(L_V g)(X, Y)`.
pub fn riemannian_foliation_residual(dist: &DistributionField, p: &[f64], cfg: &FdConfig) -> Result<f64> {
    let chart = &dist.chart;
    chart.check_point(p, 2.0 * cfg.step)?;
    let n = chart.real_dim;
    let split = dist.split_at(p)?;
    let g = chart.metric_at(p);
    let dg = partials(&|q: &[f64]| Ok(chart.metric_at(q).into_vec()), p, cfg)?;
    let frame = dist.frame_at(p)?;
    let mut worst: f64 = 0.0;
    for (idx, v) in frame.iter().enumerate() {
        let dv = partials(&|q: &[f64]| Ok(dist.frame_at(q)?[idx].clone()), p, cfg)?;
        let lie = Mat::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[k] * dg[k][i * n + j] + g[(k, j)] * dv[i][k] + g[(i, k)] * dv[j][k]).sum()
        });
        let scale = split.model().norm(v);
        for x in split.horizontal() {
            for y in split.horizontal() {
                worst = worst.max((linalg::dot(x, &lie.matvec(y)) / scale).abs());
            }
        }
    }
    Ok(worst)
}

/// Bott-connection derivatives of `A` and `T`, keyed `"i"`, `"iii"`, `"iv"`, `"v"`.
pub fn lemma_l1_derivative_residuals(dist: &DistributionField, p: &[f64], cfg: &FdConfig) -> Result<Residuals<f64>> {
    dist.chart.check_point(p, 4.0 * cfg.step)?;
    let n = dist.chart.real_dim;
    let split = dist.split_at(p)?;
    let model = split.model();
    let here = coordinate_oneill(dist, p, cfg)?;
    let da = partials(&|q: &[f64]| Ok(coordinate_oneill(dist, q, cfg)?.a.as_slice().to_vec()), p, cfg)?;
    let dt = partials(&|q: &[f64]| Ok(coordinate_oneill(dist, q, cfg)?.t.as_slice().to_vec()), p, cfg)?;
    let bott = Tensor3::from_fn(n, |i, j, k| here.gamma[(i, j, k)] - here.a[(i, j, k)] - here.t[(i, j, k)]);
    // (∇̄_X B)(Y, Z) for a coordinate tensor field B with partials dB.
    let cov = |b: &Tensor3<f64>, db: &[Vec<f64>], x: &[f64], y: &[f64], z: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (xl, dbl) in x.iter().zip(db) {
            let d = Tensor3::from_vec(n, dbl.clone()).expect("partials keep the tensor shape");
            linalg::axpy(*xl, &d.eval(y, z), &mut out);
        }
        let out = linalg::add(&out, &bott.eval(x, &b.eval(y, z)));
        let out = linalg::sub(&out, &b.eval(&bott.eval(x, y), z));
        linalg::sub(&out, &b.eval(y, &bott.eval(x, z)))
    };
    let (hb, vb) = (split.horizontal(), split.vertical());
    let frame = split.adapted_frame();
    let (mut r1, mut r3, mut r4, mut r5) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for x in hb {
        for y in hb {
            for z in hb {
                r1 = r1.max(model.norm(&cov(&here.a, &da, x, y, z)));
            }
            for v in vb {
                for w in vb {
                    let avxy = cov(&here.a, &da, v, x, y);
                    let awxy = cov(&here.a, &da, w, x, y);
                    r3 = r3.max((model.inner(&avxy, w) - model.inner(&awxy, v)).abs());
                    let tyvw = cov(&here.t, &dt, y, v, w);
                    let txvw = cov(&here.t, &dt, x, v, w);
                    r4 = r4.max((2.0 * model.inner(&avxy, w) - model.inner(&tyvw, x) + model.inner(&txvw, y)).abs());
                }
            }
            let axy = here.a.eval(x, y);
            for e in &frame {
                for f in &frame {
                    r5 = r5.max(model.norm(&cov(&here.a, &da, &axy, e, f)));
                }
            }
        }
    }
    Ok(Residuals::from([("i", r1), ("iii", r3), ("iv", r4), ("v", r5)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{const_hol_curvature, sectional};

    #[test]
    fn fubini_study_origin_metric() {
        let chart = fubini_study_chart(3, 4.0).unwrap();
        assert!((&chart.metric_at(&[0.0; 6]) - &Mat::identity(6)).max_abs() < 1e-15);
        let chart = fubini_study_chart(2, 2.0).unwrap();
        assert!((chart.metric_at(&[0.0; 4])[(1, 1)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn christoffel_vanishes_at_fubini_study_origin() {
        let chart = fubini_study_chart(3, 4.0).unwrap();
        let gam = christoffel_fd(&chart, &[0.0; 6], &FdConfig::default()).unwrap();
        assert!(gam.max_abs() < 1e-8);
    }

    #[test]
    fn round_sphere_has_curvature_four() {
        let chart = fubini_study_chart(1, 4.0).unwrap();
        for p in chart.sample_points(5, 0.8, 3) {
            let r = curvature_fd(&chart, &p, &FdConfig::default()).unwrap();
            let k = sectional(&r, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!((k - 4.0).abs() < 1e-6, "{k}");
        }
    }

    #[test]
    fn fubini_study_curvature_matches_space_form() {
        let chart = fubini_study_chart(3, 4.0).unwrap();
        let p = [0.1, -0.3, 0.25, 0.05, -0.2, 0.4];
        let r = curvature_fd(&chart, &p, &FdConfig::default()).unwrap();
        let exact = const_hol_curvature(&chart.model_at(&p).unwrap(), 4.0);
        assert!(r.dist(&exact) < 1e-6, "{}", r.dist(&exact));
        assert!(kahler_residual(&chart, &p, &FdConfig::default()).unwrap() < 1e-8);
    }

    #[test]
    fn margin_violation_is_reported() {
        let chart = euclidean_chart(1).unwrap();
        let err = curvature_fd(&chart, &[0.9995, 0.0], &FdConfig::default()).unwrap_err();
        assert!(matches!(err, Error::MarginViolation { axis: 0, .. }));
    }

    #[test]
    fn twistor_vertical_at_origin() {
        let frame = twistor_vertical(&[0.0; 6]).unwrap();
        assert_eq!(frame[0], vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(frame[1], vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(twistor_vertical(&[0.0; 4]).is_err());
    }

    #[test]
    fn flat_product_is_trivial() {
        let dist = flat_product(1, 1).unwrap();
        let p = [0.1, 0.2, -0.3, 0.4];
        let cfg = FdConfig::default();
        let t = oneill_from_chart(&dist, &p, &cfg).unwrap();
        assert!(t.a_tensor().max_abs() < 1e-10 && t.t_tensor().max_abs() < 1e-10);
        assert!(riemannian_foliation_residual(&dist, &p, &cfg).unwrap() < 1e-10);
        let l1 = lemma_l1_derivative_residuals(&dist, &p, &cfg).unwrap();
        assert!(l1.values().all(|r| *r < 1e-8));
    }

    #[test]
    fn negative_controls_fire() {
        let cfg = FdConfig::default();
        let p = [0.1, 0.2, -0.3, 0.4];
        let sheared = sheared_product().unwrap();
        assert!(riemannian_foliation_residual(&sheared, &p, &cfg).unwrap() > 1e-2);
        let l1 = lemma_l1_derivative_residuals(&sheared, &p, &cfg).unwrap();
        assert!(l1["i"] > 1e-2, "{l1:?}");
        let rotated = rotated_structure_chart().unwrap();
        assert!(kahler_residual(&rotated, &p, &cfg).unwrap() > 1e-2);
    }
}
