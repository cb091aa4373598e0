//! Holomorphic families of polynomial maps with marked critical points.
//!
//! A [`Family`] is a formula; [`Family::map_at`] instantiates it at a
//! parameter and returns a [`PolyMap`] holding the coefficients of `f_λ` in
//! `z` together with their parameter gradients and the marked critical
//! points. Every solver downstream works on instantiated maps, so the
//! coefficient tables are differentiated exactly once per parameter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// One term `coef · λ_1^{p_1} ⋯ λ_m^{p_m}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: C64,
    pub powers: Vec<u32>,
}

/// A polynomial in the parameter coordinates, stored as a term list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamPoly {
    pub terms: Vec<Monomial>,
}

impl ParamPoly {
    pub fn constant(value: C64, dim: usize) -> Self {
        ParamPoly {
            terms: vec![Monomial {
                coef: value,
                powers: vec![0; dim],
            }],
        }
    }

    /// The coordinate function `λ_k`.
    pub fn variable(k: usize, dim: usize) -> Self {
        let mut powers = vec![0; dim];
        powers[k] = 1;
        ParamPoly {
            terms: vec![Monomial { coef: ONE, powers }],
        }
    }

    pub fn eval(&self, lambda: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                t.powers
                    .iter()
                    .zip(lambda)
                    .fold(t.coef, |acc, (&p, &x)| acc * x.powu(p))
            })
            .sum()
    }

    /// Symbolic partial derivative in `λ_k`.
    pub fn partial(&self, k: usize) -> ParamPoly {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.powers.get(k).copied().unwrap_or(0) > 0)
            .map(|t| {
                let mut powers = t.powers.clone();
                let p = powers[k];
                powers[k] -= 1;
                Monomial {
                    coef: t.coef * p as f64,
                    powers,
                }
            })
            .collect();
        ParamPoly { terms }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.terms.iter().any(|t| t.powers.len() != dim) {
            return Err(Error::InvalidSpec(format!(
                "monomial exponent vector length differs from param_dim {dim}"
            )));
        }
        Ok(())
    }
}

/// Polynomial family with explicit coefficient tables in the parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericPolynomial {
    param_dim: usize,
    /// `coefficients[j]` multiplies `z^j`.
    coefficients: Vec<ParamPoly>,
    critical_points: Vec<ParamPoly>,
    coefficient_grad: Vec<Vec<ParamPoly>>,
    critical_grad: Vec<Vec<ParamPoly>>,
}

/// Rational family `N_λ/D_λ`. The kind is representable and evaluable, but
/// every solver in this crate refuses it with [`Error::NotPolynomial`].
#[derive(Clone, Debug, PartialEq)]
pub struct GenericRational {
    param_dim: usize,
    numerator: Vec<ParamPoly>,
    denominator: Vec<ParamPoly>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// `p_ζ(z) = z² + ζ`, critical point 0.
    Quadratic,
    /// `P_(c,a)(z) = z^d/d + Σ_{j=2}^{d-1} (-1)^{d-j} σ_{d-j}(c) z^j/j + a^d`,
    /// parameters `(c_1, …, c_{d-2}, a)`, critical points `0, c_1, …, c_{d-2}`.
    BrannerHubbard { degree: usize },
    GenericPolynomial(GenericPolynomial),
    Rational(GenericRational),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    kind: FamilyKind,
}

/// A marked critical point evaluated at one parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub index: usize,
    pub point: C64,
    /// Local degree of `f_λ` at the point; 2 means simple.
    pub local_degree: usize,
    pub simple: bool,
}

/// Result of [`Family::iterate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub points: Vec<C64>,
    pub escaped: bool,
    pub escape_time: Option<usize>,
}

impl Orbit {
    pub fn last(&self) -> C64 {
        *self.points.last().expect("orbit holds its start point")
    }
}

impl Family {
    pub fn quadratic() -> Self {
        Family {
            kind: FamilyKind::Quadratic,
        }
    }

    pub fn branner_hubbard(degree: usize) -> Result<Self> {
        if degree < 3 {
            return Err(Error::InvalidSpec(format!(
                "Branner-Hubbard family needs degree >= 3, got {degree}"
            )));
        }
        Ok(Family {
            kind: FamilyKind::BrannerHubbard { degree },
        })
    }

    pub fn cubic() -> Self {
        Family {
            kind: FamilyKind::BrannerHubbard { degree: 3 },
        }
    }

    /// Builds a polynomial family from coefficient tables. The marked critical
    /// points are checked against `f_λ' = 0` at a fixed set of sample parameters.
    pub fn generic(
        param_dim: usize,
        coefficients: Vec<ParamPoly>,
        critical_points: Vec<ParamPoly>,
    ) -> Result<Self> {
        if param_dim == 0 {
            return Err(Error::InvalidSpec("param_dim must be >= 1".into()));
        }
        if coefficients.len() < 3 {
            return Err(Error::InvalidSpec("degree must be >= 2".into()));
        }
        for p in coefficients.iter().chain(&critical_points) {
            p.check_dim(param_dim)?;
        }
        let grad = |p: &ParamPoly| (0..param_dim).map(|k| p.partial(k)).collect::<Vec<_>>();
        let generic = GenericPolynomial {
            param_dim,
            coefficient_grad: coefficients.iter().map(grad).collect(),
            critical_grad: critical_points.iter().map(grad).collect(),
            coefficients,
            critical_points,
        };
        let family = Family {
            kind: FamilyKind::GenericPolynomial(generic),
        };
        family.check_marked_critical_points()?;
        Ok(family)
    }

    pub fn rational(
        param_dim: usize,
        numerator: Vec<ParamPoly>,
        denominator: Vec<ParamPoly>,
    ) -> Result<Self> {
        if param_dim == 0 || numerator.is_empty() || denominator.is_empty() {
            return Err(Error::InvalidSpec("empty rational family".into()));
        }
        for p in numerator.iter().chain(&denominator) {
            p.check_dim(param_dim)?;
        }
        Ok(Family {
            kind: FamilyKind::Rational(GenericRational {
                param_dim,
                numerator,
                denominator,
            }),
        })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn is_polynomial(&self) -> bool {
        !matches!(self.kind, FamilyKind::Rational(_))
    }

    pub fn degree(&self) -> usize {
        match &self.kind {
            FamilyKind::Quadratic => 2,
            FamilyKind::BrannerHubbard { degree } => *degree,
            FamilyKind::GenericPolynomial(g) => g.coefficients.len() - 1,
            FamilyKind::Rational(r) => (r.numerator.len().max(r.denominator.len())) - 1,
        }
    }

    pub fn param_dim(&self) -> usize {
        match &self.kind {
            FamilyKind::Quadratic => 1,
            FamilyKind::BrannerHubbard { degree } => degree - 1,
            FamilyKind::GenericPolynomial(g) => g.param_dim,
            FamilyKind::Rational(r) => r.param_dim,
        }
    }

    pub fn num_critical(&self) -> usize {
        match &self.kind {
            FamilyKind::Quadratic => 1,
            FamilyKind::BrannerHubbard { degree } => degree - 1,
            FamilyKind::GenericPolynomial(g) => g.critical_points.len(),
            FamilyKind::Rational(_) => 0,
        }
    }

    /// Short human-readable descriptor, used in grid metadata and reports.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            FamilyKind::Quadratic => "quadratic".into(),
            FamilyKind::BrannerHubbard { degree } => format!("branner_hubbard(d={degree})"),
            FamilyKind::GenericPolynomial(g) => format!(
                "generic(d={}, m={}, terms={})",
                g.coefficients.len() - 1,
                g.param_dim,
                g.coefficients.iter().map(|c| c.terms.len()).sum::<usize>()
            ),
            FamilyKind::Rational(r) => format!("rational(m={})", r.param_dim),
        }
    }

    fn check_param(&self, lambda: &[C64]) -> Result<()> {
        if lambda.len() != self.param_dim() {
            return Err(Error::InvalidSpec(format!(
                "parameter has {} coordinates, family expects {}",
                lambda.len(),
                self.param_dim()
            )));
        }
        if lambda.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::InvalidSpec("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Instantiates `f_λ`. Fails with [`Error::NotPolynomial`] for rational kinds.
    pub fn map_at(&self, lambda: &[C64]) -> Result<PolyMap> {
        self.check_param(lambda)?;
        match &self.kind {
            FamilyKind::Quadratic => Ok(PolyMap::new(
                vec![lambda[0], ZERO, ONE],
                vec![vec![ONE, ZERO, ZERO]],
                vec![ZERO],
                vec![vec![ZERO]],
            )),
            FamilyKind::BrannerHubbard { degree } => Ok(branner_hubbard_map(*degree, lambda)),
            FamilyKind::GenericPolynomial(g) => {
                let m = g.param_dim;
                let coeffs = g.coefficients.iter().map(|p| p.eval(lambda)).collect();
                let param_coeffs = (0..m)
                    .map(|k| g.coefficient_grad.iter().map(|gr| gr[k].eval(lambda)).collect())
                    .collect();
                let critical = g.critical_points.iter().map(|p| p.eval(lambda)).collect();
                let critical_grad = g
                    .critical_grad
                    .iter()
                    .map(|gr| gr.iter().map(|p| p.eval(lambda)).collect())
                    .collect();
                Ok(PolyMap::new(coeffs, param_coeffs, critical, critical_grad))
            }
            FamilyKind::Rational(_) => Err(Error::NotPolynomial),
        }
    }

    /// Coefficients and marked critical points of `f_λ` without the
    /// parameter gradients; buffers are reused to keep grid sweeps cheap.
    pub fn coefficients_into(&self, lambda: &[C64], coeffs: &mut Vec<C64>, critical: &mut Vec<C64>) -> Result<()> {
        coeffs.clear();
        critical.clear();
        match &self.kind {
            FamilyKind::Quadratic => {
                coeffs.extend_from_slice(&[lambda[0], ZERO, ONE]);
                critical.push(ZERO);
            }
            FamilyKind::BrannerHubbard { degree } => {
                let d = *degree;
                let cs = &lambda[..d - 2];
                let sigma = elementary_symmetric(cs);
                coeffs.resize(d + 1, ZERO);
                coeffs[d] = C64::new(1.0 / d as f64, 0.0);
                for j in 2..d {
                    let sign = if (d - j) % 2 == 0 { 1.0 } else { -1.0 };
                    coeffs[j] = sigma[d - j] * (sign / j as f64);
                }
                coeffs[0] = lambda[d - 2].powu(d as u32);
                critical.push(ZERO);
                critical.extend_from_slice(cs);
            }
            FamilyKind::GenericPolynomial(g) => {
                coeffs.extend(g.coefficients.iter().map(|p| p.eval(lambda)));
                critical.extend(g.critical_points.iter().map(|p| p.eval(lambda)));
            }
            FamilyKind::Rational(_) => return Err(Error::NotPolynomial),
        }
        Ok(())
    }

    /// `f_λ(z)`; a non-finite result is reported as an escape event.
    pub fn eval(&self, lambda: &[C64], z: C64) -> Result<C64> {
        let v = match &self.kind {
            FamilyKind::Rational(r) => {
                self.check_param(lambda)?;
                let (n, _) = eval_table(&r.numerator, lambda, z);
                let (d, _) = eval_table(&r.denominator, lambda, z);
                n / d
            }
            _ => self.map_at(lambda)?.eval(z),
        };
        finite_or_escape(v, 1)
    }

    pub fn derivative_z(&self, lambda: &[C64], z: C64) -> Result<C64> {
        let v = match &self.kind {
            FamilyKind::Rational(r) => {
                self.check_param(lambda)?;
                let (n, dn) = eval_table(&r.numerator, lambda, z);
                let (d, dd) = eval_table(&r.denominator, lambda, z);
                (dn * d - n * dd) / (d * d)
            }
            _ => self.map_at(lambda)?.deriv(z),
        };
        finite_or_escape(v, 1)
    }

    /// Directional derivative `Σ_k dir_k ∂f_λ(z)/∂λ_k` at fixed `z`.
    pub fn derivative_param(&self, lambda: &[C64], z: C64, direction: &[C64]) -> Result<C64> {
        if direction.len() != self.param_dim() {
            return Err(Error::InvalidSpec("direction dimension mismatch".into()));
        }
        let v = match &self.kind {
            FamilyKind::Rational(r) => {
                self.check_param(lambda)?;
                let (n, _) = eval_table(&r.numerator, lambda, z);
                let (d, _) = eval_table(&r.denominator, lambda, z);
                let mut acc = ZERO;
                for (k, &dk) in direction.iter().enumerate() {
                    if dk == ZERO {
                        continue;
                    }
                    let dn = eval_partial_table(&r.numerator, lambda, z, k);
                    let dd = eval_partial_table(&r.denominator, lambda, z, k);
                    acc += dk * (dn * d - n * dd) / (d * d);
                }
                acc
            }
            _ => {
                let map = self.map_at(lambda)?;
                map.direction(direction).eval(z)
            }
        };
        finite_or_escape(v, 1)
    }

    /// Iterates up to `n` times, stopping at the first `|z| > escape_radius`.
    pub fn iterate(&self, lambda: &[C64], z: C64, n: usize, escape_radius: f64) -> Result<Orbit> {
        let step: Box<dyn Fn(C64) -> C64> = match &self.kind {
            FamilyKind::Rational(_) => Box::new(move |w| self.eval(lambda, w).unwrap_or(C64::new(f64::INFINITY, 0.0))),
            _ => {
                let map = self.map_at(lambda)?;
                Box::new(move |w| map.eval(w))
            }
        };
        let mut points = Vec::with_capacity(n + 1);
        points.push(z);
        let mut cur = z;
        for k in 1..=n {
            cur = step(cur);
            let finite = cur.re.is_finite() && cur.im.is_finite();
            if finite {
                points.push(cur);
            }
            if !finite || cur.norm() > escape_radius {
                return Ok(Orbit {
                    points,
                    escaped: true,
                    escape_time: Some(k),
                });
            }
        }
        Ok(Orbit {
            points,
            escaped: false,
            escape_time: None,
        })
    }

    /// Marked critical points with their local degrees.
    pub fn critical_points(&self, lambda: &[C64]) -> Result<Vec<CriticalPoint>> {
        let map = self.map_at(lambda)?;
        let pts = &map.critical;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if (pts[i] - pts[j]).norm() <= 1e-10 * (1.0 + pts[i].norm()) {
                    return Err(Error::CollidedCriticalPoints { i, j });
                }
            }
        }
        Ok(pts
            .iter()
            .enumerate()
            .map(|(index, &point)| {
                let local_degree = map.local_degree(point);
                CriticalPoint {
                    index,
                    point,
                    local_degree,
                    simple: local_degree == 2,
                }
            })
            .collect())
    }

    /// Default escape radius `max(1e3, 2 Σ|a_j| / |a_d|)`.
    pub fn default_escape_radius(&self, lambda: &[C64]) -> Result<f64> {
        Ok(self.map_at(lambda)?.escape_radius())
    }

    fn check_marked_critical_points(&self) -> Result<()> {
        let m = self.param_dim();
        for s in 0..4 {
            let lambda: Vec<C64> = (0..m)
                .map(|k| {
                    let t = 0.37 * (s as f64 + 1.0) + 0.11 * k as f64;
                    C64::new(t.cos() * 0.8, (1.3 * t).sin() * 0.6)
                })
                .collect();
            let map = self.map_at(&lambda)?;
            for (i, &c) in map.critical.iter().enumerate() {
                let scale = map
                    .dcoeffs
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a.norm() * c.norm().powi(j as i32))
                    .sum::<f64>()
                    .max(1.0);
                if map.deriv(c).norm() > 1e-9 * scale {
                    return Err(Error::InvalidSpec(format!(
                        "marked critical point {i} does not satisfy f'(c) = 0"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn finite_or_escape(v: C64, step: usize) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Escape { step })
    }
}

fn eval_table(table: &[ParamPoly], lambda: &[C64], z: C64) -> (C64, C64) {
    let coeffs: Vec<C64> = table.iter().map(|p| p.eval(lambda)).collect();
    horner2(&coeffs, z)
}

fn eval_partial_table(table: &[ParamPoly], lambda: &[C64], z: C64, k: usize) -> C64 {
    let coeffs: Vec<C64> = table.iter().map(|p| p.partial(k).eval(lambda)).collect();
    horner(&coeffs, z)
}

/// Elementary symmetric polynomials `σ_0..σ_n` of `xs`.
pub fn elementary_symmetric(xs: &[C64]) -> Vec<C64> {
    let mut sigma = vec![ZERO; xs.len() + 1];
    sigma[0] = ONE;
    for (i, &x) in xs.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            sigma[k] = sigma[k] + sigma[k - 1] * x;
        }
    }
    sigma
}

fn branner_hubbard_map(d: usize, lambda: &[C64]) -> PolyMap {
    let cs = &lambda[..d - 2];
    let a = lambda[d - 2];
    let sigma = elementary_symmetric(cs);
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut coeffs = vec![ZERO; d + 1];
    coeffs[d] = C64::new(1.0 / d as f64, 0.0);
    for j in 2..d {
        coeffs[j] = sigma[d - j] * (sign(d - j) / j as f64);
    }
    coeffs[0] = a.powu(d as u32);

    let mut param_coeffs = Vec::with_capacity(d - 1);
    for i in 0..d - 2 {
        let others: Vec<C64> = cs
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != i)
            .map(|(_, &x)| x)
            .collect();
        let sigma_i = elementary_symmetric(&others);
        let mut col = vec![ZERO; d + 1];
        for j in 2..d {
            let k = d - j;
            if k >= 1 {
                col[j] = sigma_i[k - 1] * (sign(k) / j as f64);
            }
        }
        param_coeffs.push(col);
    }
    let mut col_a = vec![ZERO; d + 1];
    col_a[0] = a.powu(d as u32 - 1) * d as f64;
    param_coeffs.push(col_a);

    let mut critical = vec![ZERO];
    critical.extend_from_slice(cs);
    let m = d - 1;
    let mut critical_grad = vec![vec![ZERO; m]];
    for i in 0..d - 2 {
        let mut g = vec![ZERO; m];
        g[i] = ONE;
        critical_grad.push(g);
    }
    PolyMap::new(coeffs, param_coeffs, critical, critical_grad)
}

/// `Σ coeffs[j] z^j`.
#[inline]
pub fn horner(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Value and first derivative.
#[inline]
pub fn horner2(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn derive(coeffs: &[C64]) -> Vec<C64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &c)| c * j as f64)
        .collect()
}

/// `f_λ` at a fixed parameter: coefficient tables and parameter gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    pub coeffs: Vec<C64>,
    pub dcoeffs: Vec<C64>,
    pub d2coeffs: Vec<C64>,
    /// `param_coeffs[k][j] = ∂a_j/∂λ_k`.
    pub param_coeffs: Vec<Vec<C64>>,
    pub critical: Vec<C64>,
    /// `critical_grad[i][k] = ∂c_i/∂λ_k`.
    pub critical_grad: Vec<Vec<C64>>,
}

/// Directional parameter derivative of a [`PolyMap`].
#[derive(Clone, Debug, PartialEq)]
pub struct MapDirection {
    /// Coefficients of `∂f/∂s` as a polynomial in `z`.
    pub coeffs: Vec<C64>,
    /// Coefficients of `∂²f/∂z∂s`.
    pub dcoeffs: Vec<C64>,
    /// `∂c_i/∂s` for each marked critical point.
    pub critical: Vec<C64>,
}

impl MapDirection {
    #[inline]
    pub fn eval(&self, z: C64) -> C64 {
        horner(&self.coeffs, z)
    }
    #[inline]
    pub fn deriv(&self, z: C64) -> C64 {
        horner(&self.dcoeffs, z)
    }
}

impl PolyMap {
    pub fn new(
        coeffs: Vec<C64>,
        param_coeffs: Vec<Vec<C64>>,
        critical: Vec<C64>,
        critical_grad: Vec<Vec<C64>>,
    ) -> Self {
        let dcoeffs = derive(&coeffs);
        let d2coeffs = derive(&dcoeffs);
        PolyMap {
            coeffs,
            dcoeffs,
            d2coeffs,
            param_coeffs,
            critical,
            critical_grad,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> C64 {
        self.coeffs[self.degree()]
    }

    #[inline]
    pub fn eval(&self, z: C64) -> C64 {
        horner(&self.coeffs, z)
    }
    #[inline]
    pub fn deriv(&self, z: C64) -> C64 {
        horner(&self.dcoeffs, z)
    }
    #[inline]
    pub fn deriv2(&self, z: C64) -> C64 {
        horner(&self.d2coeffs, z)
    }

    pub fn direction(&self, dir: &[C64]) -> MapDirection {
        let n = self.coeffs.len();
        let mut coeffs = vec![ZERO; n];
        for (k, &dk) in dir.iter().enumerate() {
            if dk == ZERO {
                continue;
            }
            for (c, &p) in coeffs.iter_mut().zip(&self.param_coeffs[k]) {
                *c += dk * p;
            }
        }
        let critical = self
            .critical_grad
            .iter()
            .map(|g| g.iter().zip(dir).map(|(&a, &b)| a * b).sum())
            .collect();
        MapDirection {
            dcoeffs: derive(&coeffs),
            coeffs,
            critical,
        }
    }

    /// `max(1e3, 2 Σ_j |a_j| / |a_d|)`.
    pub fn escape_radius(&self) -> f64 {
        let lead = self.leading().norm();
        let sum: f64 = self.coeffs.iter().map(|c| c.norm()).sum();
        (2.0 * sum / lead).max(1e3)
    }

    /// Radius outside which `|f(z)| > |z|`: `max(1, (1 + Σ_{j<d}|a_j|)/|a_d|)`.
    pub fn filled_julia_bound(&self) -> f64 {
        let d = self.degree();
        let lower: f64 = self.coeffs[..d].iter().map(|c| c.norm()).sum();
        ((1.0 + lower) / self.leading().norm()).max(1.0)
    }

    /// Order of contact of `f` at `z`: smallest `k ≥ 1` with `f^{(k)}(z) ≠ 0`.
    pub fn local_degree(&self, z: C64) -> usize {
        let mut c = self.coeffs.clone();
        let scale: f64 = c.iter().map(|a| a.norm()).sum::<f64>() * (1.0 + z.norm()).powi(self.degree() as i32);
        // Taylor coefficients at z via repeated synthetic division.
        let n = c.len();
        let mut taylor = Vec::with_capacity(n);
        for _ in 0..n {
            let mut acc = ZERO;
            for a in c.iter_mut().rev() {
                let next = acc * z + *a;
                *a = acc;
                acc = next;
            }
            taylor.push(acc);
            c.pop();
        }
        taylor
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, t)| t.norm() > 1e-10 * scale)
            .map(|(k, _)| k)
            .unwrap_or(self.degree())
    }
}

/// JSON description of a family.
///
/// ```json
/// {"kind": "quadratic"}
/// {"kind": "branner_hubbard", "degree": 3}
/// {"kind": "generic", "degree": 2, "params": {"dim": 1,
///    "coefficients": [[{"coef": [0,0], "powers": [1]}], [], [{"coef": [1,0], "powers": [0]}]],
///    "critical_points": [[]]}}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FamilyParamsDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParamsDoc {
    pub dim: usize,
    #[serde(default)]
    pub coefficients: Vec<ParamPoly>,
    #[serde(default)]
    pub critical_points: Vec<ParamPoly>,
    #[serde(default)]
    pub numerator: Vec<ParamPoly>,
    #[serde(default)]
    pub denominator: Vec<ParamPoly>,
}

impl FamilyDoc {
    pub fn into_family(self) -> Result<Family> {
        match self.kind.as_str() {
            "quadratic" => {
                if self.degree.is_some_and(|d| d != 2) {
                    return Err(Error::InvalidSpec("quadratic family has degree 2".into()));
                }
                Ok(Family::quadratic())
            }
            "branner_hubbard" => Family::branner_hubbard(
                self.degree
                    .ok_or_else(|| Error::InvalidSpec("branner_hubbard needs a degree".into()))?,
            ),
            "generic" => {
                let p = self
                    .params
                    .ok_or_else(|| Error::InvalidSpec("generic family needs params".into()))?;
                let family = Family::generic(p.dim, p.coefficients, p.critical_points)?;
                if self.degree.is_some_and(|d| d != family.degree()) {
                    return Err(Error::InvalidSpec("degree disagrees with coefficient table".into()));
                }
                Ok(family)
            }
            "rational" => {
                let p = self
                    .params
                    .ok_or_else(|| Error::InvalidSpec("rational family needs params".into()))?;
                Family::rational(p.dim, p.numerator, p.denominator)
            }
            other => Err(Error::InvalidSpec(format!("unknown family kind '{other}'"))),
        }
    }
}

impl From<&Family> for FamilyDoc {
    fn from(f: &Family) -> Self {
        match &f.kind {
            FamilyKind::Quadratic => FamilyDoc {
                kind: "quadratic".into(),
                degree: Some(2),
                params: None,
            },
            FamilyKind::BrannerHubbard { degree } => FamilyDoc {
                kind: "branner_hubbard".into(),
                degree: Some(*degree),
                params: None,
            },
            FamilyKind::GenericPolynomial(g) => FamilyDoc {
                kind: "generic".into(),
                degree: Some(g.coefficients.len() - 1),
                params: Some(FamilyParamsDoc {
                    dim: g.param_dim,
                    coefficients: g.coefficients.clone(),
                    critical_points: g.critical_points.clone(),
                    numerator: vec![],
                    denominator: vec![],
                }),
            },
            FamilyKind::Rational(r) => FamilyDoc {
                kind: "rational".into(),
                degree: None,
                params: Some(FamilyParamsDoc {
                    dim: r.param_dim,
                    coefficients: vec![],
                    critical_points: vec![],
                    numerator: r.numerator.clone(),
                    denominator: r.denominator.clone(),
                }),
            },
        }
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FamilyDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FamilyDoc::deserialize(d)?
            .into_family()
            .map_err(serde::de::Error::custom)
    }
}
