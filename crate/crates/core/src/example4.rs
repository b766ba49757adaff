//! Product of a flat complex line `U` with a foliated Kähler chart `N`, with
//! the `U`-metric twisted by a holomorphic function `f` on `N`.
//!
//! With `Φ = [[Re f, Im f], [Im f, −Re f]]` one has `Φ² = |f|²·I` and
//! `ΦJ₀ = −J₀Φ`, so `(1 ± Φ)⁻¹ = (1 ∓ Φ)/(1 − |f|²)` and
//!
//! * `g_U = (1 + Φ)⁻¹(1 − Φ) = (1 − Φ)²/(1 − |f|²)`,
//! * `J_U = (1 − Φ)⁻¹ J₀ (1 − Φ) = (1 + Φ) J₀ (1 − Φ)/(1 − |f|²)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::{kahler_residual, oneill_from_chart, riemannian_foliation_residual, Chart, DistributionField, FdConfig};
use crate::error::{Error, Result};
use crate::foliation::{classify_pointwise, oneill_norms, FoliationClass};
use crate::linalg::{self, Mat};

/// Polynomial in one complex variable `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    fn add(&self, other: &Self, sign: f64) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or_default();
        Self::new((0..n).map(|k| get(&self.coeffs, k) + get(&other.coeffs, k) * sign).collect())
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }
}

impl fmt::Display for ComplexPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c})*z"),
                _ => format!("({c})*z^{k}"),
            })
            .collect();
        if terms.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&terms.join(" + "))
        }
    }
}

/// Grammar, with `i` the imaginary unit and juxtaposition as product:
///
/// ```text
/// expr   := term (('+' | '-') term)*
/// term   := unary (('*' | '/')? unary)*      division by constants only
/// unary  := '-' unary | power
/// power  := atom ('^' integer)?
/// atom   := number | 'z' | 'i' | '(' expr ')'
/// ```
impl FromStr for ComplexPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        let mut parser = Parser { tokens, pos: 0 };
        let out = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Parse(format!("unexpected {:?} in {s:?}", parser.tokens[parser.pos])));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Z,
    I,
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        match c {
            ' ' | '\t' => k += 1,
            'z' | 'Z' => {
                out.push(Token::Z);
                k += 1;
            }
            'i' | 'I' | 'j' => {
                out.push(Token::I);
                k += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                out.push(Token::Op(c));
                k += 1;
            }
            d if d.is_ascii_digit() || d == '.' => {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                    k += 1;
                }
                if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                    let mut m = k + 1;
                    if m < chars.len() && (chars[m] == '+' || chars[m] == '-') {
                        m += 1;
                    }
                    if m < chars.len() && chars[m].is_ascii_digit() {
                        k = m;
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                    }
                }
                let text: String = chars[start..k].iter().collect();
                let v = text.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
                out.push(Token::Number(v));
            }
            other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ComplexPolynomial> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?, 1.0);
            } else if self.eat('-') {
                acc = acc.add(&self.term()?, -1.0);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ComplexPolynomial> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                if d.degree() != 0 || d.is_zero() {
                    return Err(Error::Parse("division only by nonzero constants".into()));
                }
                acc = acc.mul(&ComplexPolynomial::constant(d.coeffs[0].inv()));
            } else if matches!(self.peek(), Some(Token::Number(_) | Token::Z | Token::I | Token::Op('('))) {
                acc = acc.mul(&self.unary()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<ComplexPolynomial> {
        if self.eat('-') {
            return Ok(self.unary()?.mul(&ComplexPolynomial::constant(Complex64::new(-1.0, 0.0))));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<ComplexPolynomial> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let exp = match self.tokens.get(self.pos) {
            Some(Token::Number(v)) if v.fract() == 0.0 && *v >= 0.0 && *v <= 64.0 => *v as u32,
            Some(other) => return Err(Error::Parse(format!("exponent must be an integer in 0..=64, found {other:?}"))),
            None => return Err(Error::Parse("missing exponent after '^'".into())),
        };
        self.pos += 1;
        let mut out = ComplexPolynomial::constant(Complex64::new(1.0, 0.0));
        for _ in 0..exp {
            out = out.mul(&base);
        }
        Ok(out)
    }

    fn atom(&mut self) -> Result<ComplexPolynomial> {
        let tok = self.peek().cloned().ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Number(v) => Ok(ComplexPolynomial::constant(Complex64::new(v, 0.0))),
            Token::I => Ok(ComplexPolynomial::constant(Complex64::new(0.0, 1.0))),
            Token::Z => Ok(ComplexPolynomial::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])),
            Token::Op('(') => {
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing ')'".into()));
                }
                Ok(inner)
            }
            Token::Op(c) => Err(Error::Parse(format!("unexpected {c:?}"))),
        }
    }
}

/// Real dimension of the `U` factor; the `N` coordinates follow it.
pub const U_DIM: usize = 2;

/// `Φ` for the value `w = f(z)`.
pub fn phi(w: Complex64) -> Mat<f64> {
    Mat::from_rows(&[vec![w.re, w.im], vec![w.im, -w.re]])
}

/// The twisted product `U × N` and its foliation `V₀ ⊕ V₁`.
#[derive(Clone, Debug)]
pub struct Example4 {
    f: ComplexPolynomial,
    dist: DistributionField,
}

impl Example4 {
    pub fn f(&self) -> &ComplexPolynomial {
        &self.f
    }

    pub fn distribution(&self) -> &DistributionField {
        &self.dist
    }

    pub fn chart(&self) -> &Chart {
        self.dist.chart()
    }
}

/// `f` is evaluated at the first complex coordinate of the `N` chart. Every
/// sample point must satisfy `|f| < 1`, and the result is validated there.
pub fn example4_build(f: ComplexPolynomial, n_dist: &DistributionField, samples: &[Vec<f64>]) -> Result<Example4> {
    let n_chart = n_dist.chart().clone();
    let nd = n_chart.real_dim();
    let dim = U_DIM + nd;
    let value = {
        let f = f.clone();
        move |p: &[f64]| f.eval(Complex64::new(p[U_DIM], p[U_DIM + 1]))
    };
    for p in samples {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
        }
        let m = value(p).norm();
        if !(m < 1.0) {
            return Err(Error::ModulusViolation { point: p.clone(), modulus: m });
        }
    }
    let j0 = Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
    let (nm, nj) = (n_chart.clone(), n_chart.clone());
    let metric = {
        let value = value.clone();
        move |p: &[f64]| {
            let w = value(p);
            let one_minus = &Mat::identity(2) - &phi(w);
            let gu = (&one_minus * &one_minus).scale(1.0 / (1.0 - w.norm_sqr()));
            block(&gu, &nm.metric_at(&p[U_DIM..]))
        }
    };
    let j = move |p: &[f64]| {
        let w = value(p);
        let ph = phi(w);
        let ju = &(&(&Mat::identity(2) + &ph) * &j0) * &(&Mat::identity(2) - &ph);
        block(&ju.scale(1.0 / (1.0 - w.norm_sqr())), &nj.j_at(&p[U_DIM..]))
    };
    let mut domain = vec![(-1.0, 1.0); U_DIM];
    domain.extend_from_slice(n_chart.domain());
    let mut chart = Chart::new(metric, j, domain)?;
    if n_chart.is_kahler() {
        chart = chart.declare_kahler();
    }
    let inner = n_dist.clone();
    let dist = DistributionField::new(chart, move |p: &[f64]| {
        let mut frame: Vec<Vec<f64>> = (0..U_DIM).map(|a| linalg::unit(dim, a)).collect();
        for v in inner.frame_at(&p[U_DIM..])? {
            let mut w = vec![0.0; U_DIM];
            w.extend(v);
            frame.push(w);
        }
        Ok(frame)
    });
    for p in samples {
        dist.chart().model_at(p)?;
        dist.validate_at(p)?;
    }
    Ok(Example4 { f, dist })
}

fn block(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let (na, nb) = (a.rows(), b.rows());
    Mat::from_fn(na + nb, na + nb, |r, c| match (r < na, c < na) {
        (true, true) => a[(r, c)],
        (false, false) => b[(r - na, c - na)],
        _ => 0.0,
    })
}

/// `CP³` twistor foliation as the `N` factor.
pub fn twistor_n_factor() -> Result<DistributionField> {
    crate::chart::twistor_distribution(3, 4.0)
}

/// Remaining `N` coordinates of the default grid. On the slice where they
/// vanish the fibres are the `z`-planes, `f` is constant along `H` and `T`
/// vanishes identically, so the grid sits off that slice.
pub const DEFAULT_TRANSVERSE: [f64; 4] = [0.3, -0.2, 0.1, 0.25];

/// `side × side` grid with the first `N` coordinate ranging over `[-1, 1]²`,
/// the `U` coordinates zero and the other `N` coordinates set to `transverse`.
pub fn example4_grid(side: usize, transverse: &[f64]) -> Vec<Vec<f64>> {
    let at = |k: usize| if side <= 1 { 0.0 } else { -1.0 + 2.0 * k as f64 / (side - 1) as f64 };
    let mut out = Vec::with_capacity(side * side);
    for a in 0..side {
        for b in 0..side {
            let mut p = vec![0.0; U_DIM];
            p.extend([at(a), at(b)]);
            p.extend_from_slice(transverse);
            out.push(p);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example4Point {
    pub point: Vec<f64>,
    pub modulus: f64,
    pub j_square: f64,
    pub min_metric_eigenvalue: f64,
    pub kahler: f64,
    pub riemannian: f64,
    pub a_norm: f64,
    pub t_norm: f64,
    pub label: FoliationClass,
}

pub fn example4_verify(built: &Example4, samples: &[Vec<f64>], cfg: &FdConfig) -> Result<Vec<Example4Point>> {
    let chart = built.chart();
    let n = chart.real_dim();
    samples
        .iter()
        .map(|p| {
            let j = chart.j_at(p);
            let j_square = (&(&j * &j) + &Mat::identity(n)).max_abs();
            let (eig, _) = chart.metric_at(p).symmetric_eigen();
            let t = oneill_from_chart(&built.dist, p, cfg)?;
            let (a_norm, t_norm) = oneill_norms(&t);
            Ok(Example4Point {
                point: p.clone(),
                modulus: built.f.eval(Complex64::new(p[U_DIM], p[U_DIM + 1])).norm(),
                j_square,
                min_metric_eigenvalue: eig[0],
                kahler: kahler_residual(chart, p, cfg)?,
                riemannian: riemannian_foliation_residual(&built.dist, p, cfg)?,
                a_norm,
                t_norm,
                label: classify_pointwise(&t),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(s: &str) -> ComplexPolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn parser_examples() {
        let p = poly("0.3*z^2");
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coefficients()[2], Complex64::new(0.3, 0.0));
        let q = poly("(1+2i)z - 3 + z^2/2");
        assert_eq!(q.coefficients(), &[Complex64::new(-3.0, 0.0), Complex64::new(1.0, 2.0), Complex64::new(0.5, 0.0)]);
        assert!(poly("0").is_zero());
        assert_eq!(poly("-(z-1)^2").eval(Complex64::new(3.0, 0.0)), Complex64::new(-4.0, 0.0));
        assert!("z^".parse::<ComplexPolynomial>().is_err());
        assert!("1/z".parse::<ComplexPolynomial>().is_err());
        assert!("2 $ z".parse::<ComplexPolynomial>().is_err());
        assert!("(z".parse::<ComplexPolynomial>().is_err());
    }

    #[test]
    fn modulus_guard_names_the_point() {
        let n = twistor_n_factor().unwrap();
        let grid = example4_grid(4, &DEFAULT_TRANSVERSE);
        match example4_build(poly("2*z"), &n, &grid) {
            Err(Error::ModulusViolation { point, modulus }) => {
                assert!(modulus >= 1.0);
                assert_eq!(point.len(), 8);
            }
            other => panic!("expected a modulus violation, got {other:?}"),
        }
    }

    #[test]
    fn zero_function_is_a_product() {
        let n = twistor_n_factor().unwrap();
        let grid = example4_grid(2, &DEFAULT_TRANSVERSE);
        let built = example4_build(poly("0"), &n, &grid).unwrap();
        let p = &grid[1];
        let g = built.chart().metric_at(p);
        assert!((&g.submatrix(0, 0, 2, 2) - &Mat::identity(2)).max_abs() < 1e-15);
        let report = example4_verify(&built, &grid, &FdConfig::default()).unwrap();
        for r in report {
            assert!(r.t_norm < 1e-8);
            assert_eq!(r.label, FoliationClass::TotallyGeodesic);
        }
    }

    #[test]
    fn u_block_spectrum() {
        let w = Complex64::new(0.3, -0.2);
        let m = w.norm();
        let one_minus = &Mat::identity(2) - &phi(w);
        let gu = (&one_minus * &one_minus).scale(1.0 / (1.0 - m * m));
        let (eig, _) = gu.symmetric_eigen();
        assert!((eig[0] - (1.0 - m) / (1.0 + m)).abs() < 1e-14);
        assert!((eig[1] - (1.0 + m) / (1.0 - m)).abs() < 1e-14);
    }
}
