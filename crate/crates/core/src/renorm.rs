//! Quadratic-like renormalization windows: superattracting anchors, the
//! rescaled return map, baby Mandelbrot sets, straightening diagnostics,
//! product embeddings and dimension estimates.
//!
//! A window along a 1-d slice is the affine chart `s = s_c + ζ·scale` in
//! slice coordinates, fitted so that `ζ = 0` and `ζ = −1` land on the
//! superattracting parameters of periods `n₁` and `2n₁`. The return map
//! `F = f^{n₁}` is read in the coordinate `w = A(z − c)` with `A = F''(c)/2`,
//! where it reads `w ↦ w² + ζ + h(w, ζ)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{cycles_dividing, exact_period, solve_per, Cycle};
use crate::error::{Error, Result};
use crate::family::{Family, PolyMap, C64};
use crate::grid::{Bitmap, GridBox, Lattice};
use crate::jet::{iterate_with_derivative, orbit_jet};
use crate::linalg::{matrix_from_rows, solve, CVector};
use crate::misiurewicz::{certify, MisiurewiczCertificate, MisiurewiczConstraint};
use crate::newton::{newton, NewtonOptions};
use crate::roots::{aberth, accept};
use crate::slice::{Corrector, ParameterSlice, Relation, SlicePoint};
use crate::tolerances::{CyclesTol, MisiurewiczTol, RenormTol};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

const PROXY_SCOPE: &str =
    "hybrid conjugacy checked through observable consequences only (center periods, attracting multipliers, neutral solvability)";

// ---------------------------------------------------------------------------
// the model family z² + ζ

/// Smallest `q ≤ max_q` with `g_ζ^q(0) ≈ 0`.
pub fn model_center_period(zeta: C64, max_q: usize) -> Option<usize> {
    let mut z = ZERO;
    for q in 1..=max_q {
        z = z * z + zeta;
        if !(z.norm() < 1e3) {
            return None;
        }
        if z.norm() <= 1e-7 {
            return Some(q);
        }
    }
    None
}

/// Minimal `(m, p)` with `g^{m+p}(0) = g^m(0)` landing on a repelling cycle.
pub fn model_misiurewicz_labels(zeta: C64, max_n: usize) -> Option<(usize, usize)> {
    let mut orbit = vec![ZERO];
    for _ in 0..2 * max_n {
        let z = *orbit.last().unwrap();
        orbit.push(z * z + zeta);
    }
    for total in 2..=2 * max_n {
        for m in 1..total {
            let p = total - m;
            if m > max_n || p > max_n {
                continue;
            }
            if (orbit[m + p] - orbit[m]).norm() <= 1e-7 * (1.0 + orbit[m].norm()) {
                let rho: C64 = (m..m + p).map(|j| orbit[j] * 2.0).product();
                return (rho.norm() > 1.0 + 1e-8).then_some((m, p));
            }
        }
    }
    None
}

/// Centers of the hyperbolic components of exact period `q` of the model
/// Mandelbrot set.
pub fn model_centers(q: usize) -> Result<Vec<C64>> {
    if q == 0 || q > 16 {
        return Err(Error::InvalidSpec("model center period must be in 1..=16".into()));
    }
    let degree = 1usize << (q - 1);
    let ratio = |zeta: C64| {
        let (mut z, mut dz) = (ZERO, ZERO);
        for _ in 0..q {
            dz = z * dz * 2.0 + ONE;
            z = z * z + zeta;
        }
        z / dz
    };
    let roots = accept(aberth(degree, ratio, 2.0, 2000, 1e-15), 1e-10)?;
    Ok(roots
        .into_iter()
        .filter(|&r| model_center_period(r, q) == Some(q))
        .collect())
}

// ---------------------------------------------------------------------------
// windows

/// Where to look for the superattracting center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSearch {
    /// Start, in slice coordinates (the slice is based at the certificate).
    pub seed: C64,
    pub radius: f64,
    /// Candidate return times are multiples of the landing period up to this.
    pub max_return: usize,
    /// Overrides the slice direction (parameter-space vector).
    pub direction: Option<Vec<C64>>,
}

impl Default for WindowSearch {
    fn default() -> Self {
        WindowSearch {
            seed: ZERO,
            radius: 0.1,
            max_return: 24,
            direction: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormWindow {
    pub slice: ParameterSlice,
    pub critical: usize,
    pub return_time: usize,
    /// Slice coordinate of the period-`n₁` center (`ζ = 0`).
    pub s_center: C64,
    /// `ψ(ζ) = s_center + ζ·scale`.
    pub scale: C64,
    pub lambda_center: Vec<C64>,
    /// Period-`2n₁` center (`ζ = −1`).
    pub lambda_anchor: Vec<C64>,
    pub radius: f64,
    pub h_sup: f64,
    pub delta: f64,
    pub epsilon_ok: bool,
}

/// The return map in the rescaled coordinate at one parameter.
pub struct ReturnMap {
    pub lambda: Vec<C64>,
    pub map: PolyMap,
    pub critical_point: C64,
    /// `A = F''(c)/2`.
    pub rescale: C64,
    pub n: usize,
}

impl ReturnMap {
    pub fn new(family: &Family, lambda: Vec<C64>, critical: usize, n: usize) -> Result<Self> {
        let map = family.map_at(&lambda)?;
        let c = map.critical[critical];
        let jet = orbit_jet(&map, &[], c, &[], n);
        let rescale = jet.d2z / 2.0;
        if !(rescale.norm() > 0.0 && rescale.norm().is_finite()) {
            return Err(Error::ChartDegenerate(rescale.norm()));
        }
        Ok(ReturnMap {
            lambda,
            map,
            critical_point: c,
            rescale,
            n,
        })
    }

    /// `w ↦ A(F(c + w/A) − c)`; non-finite once the orbit overflows.
    pub fn apply(&self, w: C64) -> C64 {
        let mut z = self.critical_point + w / self.rescale;
        for _ in 0..self.n {
            z = self.map.eval(z);
            if !(z.norm() < 1e150) {
                return C64::new(f64::INFINITY, 0.0);
            }
        }
        self.rescale * (z - self.critical_point)
    }

    /// `ζ` read off the return map: the constant term `F(0)` in `w`.
    pub fn dynamical_zeta(&self) -> C64 {
        self.apply(ZERO)
    }
}

impl RenormWindow {
    pub fn s_of(&self, zeta: C64) -> C64 {
        self.s_center + zeta * self.scale
    }

    pub fn zeta_of(&self, s: C64) -> C64 {
        (s - self.s_center) / self.scale
    }

    /// `ψ(ζ)` on the (corrected) slice.
    pub fn point(&self, family: &Family, zeta: C64) -> Result<SlicePoint> {
        self.slice.point(family, &[self.s_of(zeta)], None)
    }

    pub fn return_map(&self, family: &Family, zeta: C64) -> Result<ReturnMap> {
        let p = self.point(family, zeta)?;
        ReturnMap::new(family, p.lambda, self.critical, self.return_time)
    }

    /// `WindowTooDistorted` unless `h_sup < δ_emp`.
    pub fn require_epsilon_ok(&self) -> Result<()> {
        if self.epsilon_ok {
            Ok(())
        } else {
            Err(Error::WindowTooDistorted {
                h_sup: self.h_sup,
                delta: self.delta,
            })
        }
    }
}

/// Unit vector with its largest component real positive.
fn normalize_direction(mut v: Vec<C64>) -> Vec<C64> {
    let big = v.iter().cloned().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ONE);
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || big.norm() == 0.0 {
        return v;
    }
    let phase = big.conj() / big.norm();
    v.iter_mut().for_each(|x| *x = *x * phase / norm);
    v
}

/// Parameter directions `v_j` along which only the `j`-th constraint of the
/// certificate moves to first order (columns of the inverse χ-Jacobian).
pub fn factor_directions(family: &Family, cert: &MisiurewiczCertificate) -> Result<Vec<Vec<C64>>> {
    let k = cert.constraints.len();
    let sp = cert.slice.point(family, &cert.s, None)?;
    let chi = matrix_from_rows(&cert.chi_jacobian);
    if chi.nrows() != chi.ncols() {
        return Err(Error::InvalidSpec("certificate Jacobian is not square".into()));
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let e = CVector::from_fn(k, |r, _| if r == j { ONE } else { ZERO });
        let col = solve(&chi, &e).ok_or(Error::DegenerateJacobian {
            det_abs: cert.chi_det.norm(),
            threshold: 0.0,
        })?;
        let mut v = vec![ZERO; family.param_dim()];
        for (l, tan) in sp.tangents.iter().enumerate() {
            for (x, t) in v.iter_mut().zip(tan) {
                *x += col[l] * t;
            }
        }
        out.push(normalize_direction(v));
    }
    Ok(out)
}

/// The 1-d slice through the certificate along factor `j`, with the other
/// constraints held by the corrector.
pub fn factor_slice(
    family: &Family,
    cert: &MisiurewiczCertificate,
    j: usize,
    direction: Option<Vec<C64>>,
) -> Result<ParameterSlice> {
    let dirs = factor_directions(family, cert)?;
    let mut relations = Vec::new();
    let mut cdirs = Vec::new();
    for (i, c) in cert.constraints.iter().enumerate() {
        if i != j {
            relations.push(c.relation());
            cdirs.push(dirs[i].clone());
        }
    }
    if let Some(corr) = &cert.slice.corrector {
        relations.extend(corr.relations.iter().cloned());
        cdirs.extend(corr.directions.iter().cloned());
    }
    let corrector = (!relations.is_empty()).then_some(Corrector {
        relations,
        directions: cdirs,
    });
    let slice = ParameterSlice {
        base: cert.lambda.clone(),
        directions: vec![direction.map(normalize_direction).unwrap_or_else(|| dirs[j].clone())],
        corrector,
    };
    slice.validate(family)?;
    Ok(slice)
}

/// Newton on relations along a slice, kept within `leash` of `center`.
fn relation_newton(
    family: &Family,
    slice: &ParameterSlice,
    relations: &[Relation],
    seed: &[C64],
    max_step: f64,
    leash: Option<(C64, f64)>,
) -> Result<(Vec<C64>, SlicePoint, f64)> {
    let mut warm: Option<Vec<C64>> = None;
    // deep windows cannot reach much below 1e-12: ∂f^n/∂λ grows like d^n
    let opts = NewtonOptions {
        residual: 1e-9,
        max_iter: 100,
        max_backtracks: 30,
        max_step,
    };
    let out = newton(
        seed,
        |s| {
            if let Some((c, r)) = leash {
                if (s[0] - c).norm() > r {
                    return Err(Error::NotFound("left the search disk".into()));
                }
            }
            let p = slice.point(family, s, warm.as_deref())?;
            if slice.corrector.is_some() {
                warm = Some(p.t.clone());
            }
            let map = family.map_at(&p.lambda)?;
            let dirs: Vec<_> = p.tangents.iter().map(|d| map.direction(d)).collect();
            let mut f = Vec::new();
            let mut rows = Vec::new();
            for r in relations {
                let (v, g) = r.value_and_grad(&map, &dirs)?;
                f.push(v);
                rows.push(g);
            }
            Ok((f, matrix_from_rows(&rows)))
        },
        &opts,
    )?;
    let p = slice.point(family, &out.x, warm.as_deref())?;
    Ok((out.x, p, out.residual))
}

/// Superattracting parameter of exact period `n` for critical `i` near `seed`.
fn center_near(
    family: &Family,
    slice: &ParameterSlice,
    critical: usize,
    n: usize,
    seed: C64,
    spread: f64,
    accept_radius: f64,
) -> Option<(C64, Vec<C64>)> {
    let ctol = CyclesTol::default();
    let rel = [Relation::Periodic { critical, n }];
    let mut best: Option<(C64, Vec<C64>)> = None;
    let seeds = std::iter::once(seed).chain((0..6).map(|k| seed + C64::from_polar(spread, std::f64::consts::TAU * k as f64 / 6.0)));
    for s0 in seeds {
        let Ok((s, p, _)) = relation_newton(family, slice, &rel, &[s0], accept_radius / 4.0, Some((seed, 2.0 * accept_radius))) else {
            continue;
        };
        if (s[0] - seed).norm() > accept_radius {
            continue;
        }
        let Ok(map) = family.map_at(&p.lambda) else { continue };
        if exact_period(&map, map.critical[critical], n, &ctol) != n {
            continue;
        }
        if best.as_ref().map_or(true, |(b, _)| (s[0] - seed).norm() < (b - seed).norm()) {
            best = Some((s[0], p.lambda));
        }
    }
    best
}

/// Chart scale `s_c − s_{−1}` from the period-`2n` center next to the
/// period-`n` center at `s_c`, and the anchor parameter.
pub(crate) fn anchor_on_slice(family: &Family, slice: &ParameterSlice, critical: usize, n: usize, s_c: C64) -> Result<(C64, Vec<C64>)> {
    // first guess from the multiplier derivative: ζ ≈ ρ/2 near 0
    let p = slice.point(family, &[s_c], None)?;
    let map = family.map_at(&p.lambda)?;
    let dirs = [map.direction(&p.tangents[0])];
    let c = map.critical[critical];
    let jet = orbit_jet(&map, &dirs, c, &[ZERO], n);
    let drho = jet.dzs[0] + jet.d2z * jet.ds[0] / (ONE - jet.dz);
    if !(drho.norm() > 0.0 && drho.norm().is_finite()) {
        return Err(Error::ChartDegenerate(0.0));
    }
    let est = C64::new(2.0, 0.0) / drho;
    let (s_m1, lambda_anchor) =
        center_near(family, slice, critical, 2 * n, s_c - est, 0.25 * est.norm(), 0.75 * est.norm()).ok_or(Error::NoCenterFound)?;
    Ok((s_c - s_m1, lambda_anchor))
}

/// Locates a renormalization window of critical point `critical` near the
/// certificate parameter.
///
/// A window whose distortion `h_sup` exceeds `δ_emp` is still returned, with
/// `epsilon_ok = false`; see [`RenormWindow::require_epsilon_ok`].
pub fn find_renorm_window(
    family: &Family,
    cert: &MisiurewiczCertificate,
    critical: usize,
    search: &WindowSearch,
    tol: &RenormTol,
) -> Result<RenormWindow> {
    let j = cert
        .constraints
        .iter()
        .position(|c| c.critical == critical)
        .ok_or_else(|| Error::InvalidSpec(format!("certificate has no constraint on critical point {critical}")))?;
    let slice = factor_slice(family, cert, j, search.direction.clone())?;
    window_on_slice(family, slice, critical, cert.constraints[j].p, search, tol)
}

/// [`find_renorm_window`] on a given 1-d slice.
pub fn window_on_slice(
    family: &Family,
    slice: ParameterSlice,
    critical: usize,
    period: usize,
    search: &WindowSearch,
    tol: &RenormTol,
) -> Result<RenormWindow> {
    if slice.dim() != 1 || period == 0 {
        return Err(Error::InvalidSpec("window search needs a 1-d slice and a landing period".into()));
    }
    let mut found = None;
    let mut n1 = period;
    while n1 <= search.max_return.max(period) {
        if let Some(c) = center_near(family, &slice, critical, n1, search.seed, search.radius / 2.0, search.radius) {
            found = Some(c);
            break;
        }
        n1 += period;
    }
    let (s_c, lambda_center) = found.ok_or(Error::NoCenterFound)?;

    let (scale, lambda_anchor) = anchor_on_slice(family, &slice, critical, n1, s_c)?;
    if scale.norm() < tol.chart_degenerate {
        return Err(Error::ChartDegenerate(scale.norm()));
    }
    let mut w = RenormWindow {
        slice,
        critical,
        return_time: n1,
        s_center: s_c,
        scale,
        lambda_center,
        lambda_anchor,
        radius: tol.radius,
        h_sup: f64::INFINITY,
        delta: tol.delta_emp,
        epsilon_ok: false,
    };
    // finite so that the window survives a JSON round trip
    w.h_sup = estimate_h_sup(family, &w, tol.h_samples).min(f64::MAX);
    w.epsilon_ok = w.h_sup < w.delta;
    Ok(w)
}

/// `sup |A(F(c + w/A) − c) − w² − ζ|` over a polar sample of `D(0,R)²`.
pub fn estimate_h_sup(family: &Family, window: &RenormWindow, n: usize) -> f64 {
    let n = n.max(2);
    let r = window.radius;
    let polar = |idx: usize| {
        let (i, j) = (idx / n, idx % n);
        C64::from_polar(r * (i + 1) as f64 / n as f64, std::f64::consts::TAU * j as f64 / n as f64)
    };
    let mut zetas: Vec<C64> = (0..n * n).map(polar).collect();
    zetas.push(ZERO);
    zetas
        .par_iter()
        .map(|&zeta| {
            let Ok(rm) = window.return_map(family, zeta) else {
                return f64::INFINITY;
            };
            let mut worst: f64 = 0.0;
            for idx in 0..n * n {
                let w = polar(idx);
                let h = (rm.apply(w) - w * w - zeta).norm();
                worst = worst.max(if h.is_finite() { h } else { f64::INFINITY });
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

// ---------------------------------------------------------------------------
// baby Mandelbrot sets

#[derive(Clone, Debug)]
pub struct BabyMandelbrot {
    pub window: RenormWindow,
    pub grid: Bitmap,
    pub max_iter: usize,
    pub resolution: usize,
}

impl BabyMandelbrot {
    /// Member count over that of the model set on the same ζ-grid.
    pub fn area_ratio(&self, model: &Bitmap) -> f64 {
        self.grid.count() as f64 / model.count().max(1) as f64
    }
}

/// Whether the rescaled critical orbit at `ζ` stays in `D(0,R)`.
pub fn baby_member(family: &Family, window: &RenormWindow, zeta: C64, max_iter: usize) -> bool {
    let Ok(rm) = window.return_map(family, zeta) else {
        return false;
    };
    let mut w = ZERO;
    for _ in 0..max_iter {
        w = rm.apply(w);
        if !(w.norm() <= window.radius) {
            return false;
        }
    }
    true
}

/// The square ζ-grid `[−R_param, R_param]²` used for baby copies.
pub fn zeta_lattice(r_param: f64, resolution: usize) -> Result<Lattice> {
    Lattice::new(GridBox::centered(0.0, 0.0, r_param), resolution, resolution)
}

pub fn baby_mandelbrot(
    family: &Family,
    window: &RenormWindow,
    resolution: usize,
    max_iter: usize,
    tol: &RenormTol,
) -> Result<BabyMandelbrot> {
    let lattice = zeta_lattice(tol.r_param, resolution)?;
    let bits: Vec<bool> = (0..lattice.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % lattice.nx, idx / lattice.nx);
            baby_member(family, window, C64::new(lattice.x(i), lattice.y(j)), max_iter)
        })
        .collect();
    Ok(BabyMandelbrot {
        window: window.clone(),
        grid: Bitmap { lattice, bits },
        max_iter,
        resolution,
    })
}

/// The model set on a ζ-lattice with the same escape test (radius `R`).
pub fn model_mandelbrot(lattice: &Lattice, radius: f64, max_iter: usize) -> Bitmap {
    Bitmap::from_fn(lattice.clone(), |i, j| {
        let zeta = C64::new(lattice.x(i), lattice.y(j));
        let mut z = ZERO;
        for _ in 0..max_iter {
            z = z * z + zeta;
            if !(z.norm() <= radius) {
                return false;
            }
        }
        true
    })
}

// ---------------------------------------------------------------------------
// straightening diagnostics

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StraightenMode {
    Center,
    Multiplier,
    Neutral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraighteningDiagnostic {
    pub mode: StraightenMode,
    pub zeta: C64,
    pub model_period: usize,
    pub family_period: usize,
    pub lambda: Vec<C64>,
    pub s: C64,
    pub model_multiplier: C64,
    pub multiplier: C64,
    /// `|s_solved − ψ(ζ)|` in slice coordinates (neutral mode).
    pub distance: f64,
    /// Pass threshold of the mode's main quantity.
    pub bound: f64,
    pub passed: bool,
    pub scope: String,
}

fn polish_periodic(map: &PolyMap, z0: C64, p: usize) -> C64 {
    let mut z = z0;
    for _ in 0..30 {
        let (w, dw, esc) = iterate_with_derivative(map, z, p);
        if esc || (dw - ONE).norm() == 0.0 {
            break;
        }
        let step = (w - z) / (dw - ONE);
        z -= step;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Attracting cycle of the model at `ζ`: `(period, point, multiplier)`.
fn model_attracting(zeta: C64) -> Option<(usize, C64, C64)> {
    let mut z = ZERO;
    for _ in 0..4000 {
        z = z * z + zeta;
        if !(z.norm() < 1e3) {
            return None;
        }
    }
    let mut w = z;
    for q in 1..=64 {
        w = w * w + zeta;
        if (w - z).norm() < 1e-9 {
            let mut pt = z;
            // Newton polish of g^q(z) = z
            for _ in 0..20 {
                let (mut a, mut da) = (pt, ONE);
                for _ in 0..q {
                    da *= a * 2.0;
                    a = a * a + zeta;
                }
                if (da - ONE).norm() == 0.0 {
                    break;
                }
                pt -= (a - pt) / (da - ONE);
            }
            let mut rho = ONE;
            let mut a = pt;
            for _ in 0..q {
                rho *= a * 2.0;
                a = a * a + zeta;
            }
            return (rho.norm() < 1.0).then_some((q, pt, rho));
        }
    }
    None
}

/// Neutral cycle of the model at `ζ` of smallest period `q ≤ 8`, preferring
/// multipliers away from 1.
fn model_neutral(zeta: C64) -> Option<(usize, C64, C64)> {
    let quad = Family::quadratic();
    let ctol = CyclesTol::default();
    let mut fallback = None;
    for q in 1..=8 {
        let Ok(cycles) = cycles_dividing(&quad, &[zeta], q, &ctol) else { continue };
        for c in cycles.iter().filter(|c| c.period == q) {
            if (c.multiplier.norm() - 1.0).abs() < 1e-6 {
                let hit = (q, c.points[0], c.multiplier / c.multiplier.norm());
                if (c.multiplier - ONE).norm() > 1e-3 {
                    return Some(hit);
                }
                fallback.get_or_insert(hit);
            }
        }
    }
    fallback
}

pub fn straightening_check(
    family: &Family,
    window: &RenormWindow,
    zeta: C64,
    mode: StraightenMode,
    tol: &RenormTol,
) -> Result<StraighteningDiagnostic> {
    if !(zeta.norm() <= window.radius) {
        return Err(Error::OutsideChart(zeta));
    }
    let ctol = CyclesTol::default();
    let n1 = window.return_time;
    let s0 = window.s_of(zeta);
    let mut d = StraighteningDiagnostic {
        mode,
        zeta,
        model_period: 0,
        family_period: 0,
        lambda: vec![],
        s: s0,
        model_multiplier: ZERO,
        multiplier: ZERO,
        distance: 0.0,
        bound: 0.0,
        passed: false,
        scope: PROXY_SCOPE.to_string(),
    };
    match mode {
        StraightenMode::Center => {
            let q = model_center_period(zeta, 64).ok_or_else(|| Error::PolishFailed(format!("ζ = {zeta} is not a model center")))?;
            let n = q * n1;
            let step = window.scale.norm() / 4.0;
            let (s, p, _) = relation_newton(
                family,
                &window.slice,
                &[Relation::Periodic { critical: window.critical, n }],
                &[s0],
                step,
                None,
            )
            .map_err(|e| Error::PolishFailed(e.to_string()))?;
            let map = family.map_at(&p.lambda)?;
            let c = map.critical[window.critical];
            let period = exact_period(&map, c, n, &ctol);
            let cyc = Cycle::from_point(&map, polish_periodic(&map, c, period), period, &ctol);
            d.model_period = q;
            d.family_period = period;
            d.lambda = p.lambda;
            d.s = s[0];
            d.multiplier = cyc.multiplier;
            d.distance = (s[0] - s0).norm();
            d.bound = tol.center_multiplier;
            d.passed = period == n && cyc.multiplier.norm() < tol.center_multiplier;
        }
        StraightenMode::Multiplier => {
            let (q, _, w_model) =
                model_attracting(zeta).ok_or_else(|| Error::PolishFailed(format!("ζ = {zeta} has no attracting model cycle")))?;
            let p = window.point(family, zeta)?;
            let map = family.map_at(&p.lambda)?;
            let n = q * n1;
            let mut z = map.critical[window.critical];
            for _ in 0..4000 * n1 {
                z = map.eval(z);
                if !(z.norm() < 1e100) {
                    return Err(Error::PolishFailed("critical orbit escapes".into()));
                }
            }
            let pt = polish_periodic(&map, z, n);
            let period = exact_period(&map, pt, n, &ctol);
            let cyc = Cycle::from_point(&map, pt, period, &ctol);
            d.model_period = q;
            d.family_period = period;
            d.lambda = p.lambda;
            d.model_multiplier = w_model;
            d.multiplier = cyc.multiplier;
            d.distance = (cyc.multiplier - w_model).norm();
            d.bound = tol.straighten;
            d.passed = period == n && d.distance <= tol.straighten;
        }
        StraightenMode::Neutral => {
            let (q, z_model, w) =
                model_neutral(zeta).ok_or_else(|| Error::PolishFailed(format!("ζ = {zeta} has no neutral model cycle")))?;
            let rm = window.return_map(family, zeta)?;
            let seed_z = rm.critical_point + z_model / rm.rescale;
            let sol = solve_per(family, &window.slice, q * n1, w, s0, seed_z, &ctol)
                .map_err(|e| Error::PolishFailed(e.to_string()))?;
            d.model_period = q;
            d.family_period = sol.cycle.period;
            d.lambda = sol.lambda;
            d.s = sol.s;
            d.model_multiplier = w;
            d.multiplier = sol.cycle.multiplier;
            d.distance = (sol.s - s0).norm();
            d.bound = 5.0 * window.h_sup * window.scale.norm();
            d.passed = d.distance <= d.bound;
        }
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// product embeddings

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub search: WindowSearch,
    /// Seed of the shuffled retry order.
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            search: WindowSearch::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorTarget {
    Center { period: usize },
    Misiurewicz { m: usize, p: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorDiagnostic {
    pub factor: usize,
    pub critical: usize,
    pub zeta: C64,
    pub return_time: usize,
    pub target: FactorTarget,
    /// `|E_j(λ)|` of the factor's defining relation.
    pub residual: f64,
    /// Critical cycle multiplier (centers) or landing multiplier.
    pub multiplier: C64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductEmbeddingSample {
    pub model_input: Vec<C64>,
    pub lambda: Vec<C64>,
    pub windows: Vec<RenormWindow>,
    pub per_factor_diagnostics: Vec<FactorDiagnostic>,
    pub residual: f64,
    pub sweeps: usize,
    pub order: Vec<usize>,
    /// Joint certificate when every factor targets a Misiurewicz point.
    pub certificate: Option<MisiurewiczCertificate>,
    pub scope: String,
}

#[derive(Clone)]
struct Factor {
    critical: usize,
    direction: Vec<C64>,
    relation: Relation,
    target: FactorTarget,
    step: f64,
}

fn factor_value(family: &Family, lambda: &[C64], f: &Factor) -> Result<(C64, C64)> {
    let map = family.map_at(lambda)?;
    let (v, g) = f.relation.value_and_grad(&map, &[map.direction(&f.direction)])?;
    Ok((v, g[0]))
}

fn joint_residual(family: &Family, lambda: &[C64], factors: &[Factor]) -> f64 {
    factors
        .iter()
        .map(|f| factor_value(family, lambda, f).map_or(f64::INFINITY, |(v, _)| v.norm()))
        .fold(0.0, f64::max)
}

/// One-variable Newton for factor `f` along its direction from `lambda`.
fn factor_solve(family: &Family, lambda: &mut [C64], f: &Factor) -> Result<()> {
    let mut best = factor_value(family, lambda, f)?.0.norm();
    for _ in 0..60 {
        let (v, dv) = factor_value(family, lambda, f)?;
        if v.norm() <= 1e-15 || dv.norm() == 0.0 {
            return Ok(());
        }
        let mut t = -v / dv;
        if t.norm() > f.step {
            t *= f.step / t.norm();
        }
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<C64> = lambda.iter().zip(&f.direction).map(|(l, d)| l + t * d).collect();
            if let Ok((vt, _)) = factor_value(family, &trial, f) {
                if vt.norm() < best {
                    lambda.copy_from_slice(&trial);
                    best = vt.norm();
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok(());
        }
    }
    Ok(())
}

fn alternate(family: &Family, start: &[C64], factors: &[Factor], order: &[usize], tol: &RenormTol) -> Result<(Vec<C64>, f64, usize)> {
    let mut lambda = start.to_vec();
    let mut res = f64::INFINITY;
    for sweep in 1..=tol.max_sweeps {
        for &j in order {
            factor_solve(family, &mut lambda, &factors[j])?;
        }
        res = joint_residual(family, &lambda, factors);
        if !res.is_finite() {
            break;
        }
        if res <= tol.embed_residual {
            return Ok((lambda, res, sweep));
        }
    }
    Err(Error::AlternationDiverged {
        residual: res,
        sweeps: tol.max_sweeps,
    })
}

fn factor_diagnostics(
    family: &Family,
    lambda: &[C64],
    factors: &[Factor],
    windows: &[RenormWindow],
    model_input: &[C64],
    tol: &RenormTol,
) -> Result<(Vec<FactorDiagnostic>, Vec<MisiurewiczConstraint>)> {
    let map = family.map_at(lambda)?;
    let ctol = CyclesTol::default();
    let mtol = MisiurewiczTol::default();
    let mut diags = Vec::with_capacity(factors.len());
    let mut mis = Vec::new();
    for (j, (f, w)) in factors.iter().zip(windows).enumerate() {
        let (v, _) = factor_value(family, lambda, f)?;
        let c = map.critical[f.critical];
        let (multiplier, passed) = match (f.target, f.relation) {
            (FactorTarget::Center { .. }, Relation::Periodic { n, .. }) => {
                let period = exact_period(&map, c, n, &ctol);
                let cyc = Cycle::from_point(&map, polish_periodic(&map, c, period), period, &ctol);
                (cyc.multiplier, period == n && cyc.multiplier.norm() < tol.center_multiplier)
            }
            (FactorTarget::Misiurewicz { .. }, Relation::Preperiodic { m, p, .. }) => {
                mis.push(MisiurewiczConstraint::new(f.critical, m, p));
                let mut x = c;
                for _ in 0..m {
                    x = map.eval(x);
                }
                let period = exact_period(&map, x, p, &ctol);
                let cyc = Cycle::from_point(&map, polish_periodic(&map, x, period), period, &ctol);
                (cyc.multiplier, cyc.multiplier.norm() > 1.0 + mtol.repelling_margin)
            }
            _ => unreachable!("factor relations follow their targets"),
        };
        let d = FactorDiagnostic {
            factor: j,
            critical: f.critical,
            zeta: model_input[j],
            return_time: w.return_time,
            target: f.target,
            residual: v.norm(),
            multiplier,
            passed: passed && v.norm() <= tol.embed_residual,
        };
        if !d.passed {
            return Err(Error::FactorDiagnosticFailed(j, format!("{d:?}")));
        }
        diags.push(d);
    }
    Ok((diags, mis))
}

/// Fixed ascending order first, then one shuffled retry.
fn alternate_with_retry(
    family: &Family,
    start: &[C64],
    factors: &[Factor],
    seed: u64,
    tol: &RenormTol,
) -> Result<(Vec<C64>, f64, usize, Vec<usize>)> {
    let natural: Vec<usize> = (0..factors.len()).collect();
    match alternate(family, start, factors, &natural, tol) {
        Ok((l, r, s)) => Ok((l, r, s, natural)),
        Err(_) => {
            let mut order = natural;
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (l, r, s) = alternate(family, start, factors, &order, tol)?;
            Ok((l, r, s, order))
        }
    }
}

/// Parameter realizing the model inputs `ζ_j` in the windows of the
/// certificate's critical points, by alternating one-variable solves.
pub fn product_embedding_sample(
    family: &Family,
    cert: &MisiurewiczCertificate,
    model_input: &[C64],
    cfg: &EmbedConfig,
    tol: &RenormTol,
) -> Result<ProductEmbeddingSample> {
    let k = cert.constraints.len();
    if model_input.len() != k {
        return Err(Error::InvalidSpec("one model input per certificate constraint".into()));
    }
    if !cert.transverse {
        return Err(Error::DegenerateJacobian {
            det_abs: cert.transversality_det.norm(),
            threshold: MisiurewiczTol::default().transversality,
        });
    }
    let dirs = factor_directions(family, cert)?;
    let mut windows = Vec::with_capacity(k);
    let mut factors = Vec::with_capacity(k);
    let mut start = cert.lambda.clone();
    for (j, (&zeta, con)) in model_input.iter().zip(&cert.constraints).enumerate() {
        let slice = factor_slice(family, cert, j, None)?;
        let w = window_on_slice(family, slice, con.critical, con.p, &cfg.search, tol)?;
        let n1 = w.return_time;
        let (relation, target) = if let Some(q) = model_center_period(zeta, 64) {
            (Relation::Periodic { critical: con.critical, n: q * n1 }, FactorTarget::Center { period: q })
        } else if let Some((m, p)) = model_misiurewicz_labels(zeta, 8) {
            (
                Relation::Preperiodic {
                    critical: con.critical,
                    m: m * n1,
                    p: p * n1,
                },
                FactorTarget::Misiurewicz { m, p },
            )
        } else {
            return Err(Error::FactorDiagnosticFailed(j, format!("model input {zeta} is neither a center nor a Misiurewicz point")));
        };
        let p = w.point(family, zeta)?;
        for (x, (a, b)) in start.iter_mut().zip(p.lambda.iter().zip(&cert.lambda)) {
            *x += a - b;
        }
        factors.push(Factor {
            critical: con.critical,
            direction: dirs[j].clone(),
            relation,
            target,
            step: w.scale.norm(),
        });
        windows.push(w);
    }

    // stage 1: the product of the two centers, where local charts are refit
    let centers: Vec<Factor> = factors
        .iter()
        .zip(&windows)
        .map(|(f, w)| Factor {
            relation: Relation::Periodic {
                critical: f.critical,
                n: w.return_time,
            },
            target: FactorTarget::Center { period: 1 },
            direction: f.direction.clone(),
            ..*f
        })
        .collect();
    let (base, _, _, _) = alternate_with_retry(family, &start, &centers, cfg.seed, tol)?;
    let mut offset = vec![ZERO; base.len()];
    if model_input.iter().any(|z| z.norm() != 0.0) {
        for (j, f) in factors.iter_mut().enumerate() {
            let line = ParameterSlice::line(base.clone(), f.direction.clone());
            let (scale, _) = anchor_on_slice(family, &line, f.critical, windows[j].return_time, ZERO)?;
            f.step = scale.norm();
            for (x, d) in offset.iter_mut().zip(&f.direction) {
                *x += model_input[j] * scale * d;
            }
        }
    }
    // stage 2: the requested targets; when the linear chart misses, retry
    // from slightly rescaled offsets
    let mut last_err = None;
    let mut solved = None;
    for t in [1.0, 0.99, 1.01, 0.97, 1.03, 0.94, 1.06] {
        let start: Vec<C64> = base.iter().zip(&offset).map(|(b, o)| b + o * t).collect();
        let attempt = alternate_with_retry(family, &start, &factors, cfg.seed, tol)
            .and_then(|(l, r, s, o)| factor_diagnostics(family, &l, &factors, &windows, model_input, tol).map(|d| (l, r, s, o, d)));
        match attempt {
            Ok(x) => {
                solved = Some(x);
                break;
            }
            Err(e) => last_err = Some(e),
        }
        if offset.iter().all(|o| o.norm() == 0.0) {
            break;
        }
    }
    let (lambda, residual, sweeps, order, (diags, mis)) = match solved {
        Some(x) => x,
        None => return Err(last_err.unwrap_or(Error::NoCenterFound)),
    };
    let mtol = MisiurewiczTol::default();
    let certificate = if mis.len() == k {
        let slice = ParameterSlice {
            base: lambda.clone(),
            directions: dirs.clone(),
            corrector: None,
        };
        certify(family, &slice, &mis, &vec![ZERO; k], &mtol).ok()
    } else {
        None
    };
    Ok(ProductEmbeddingSample {
        model_input: model_input.to_vec(),
        lambda,
        windows,
        per_factor_diagnostics: diags,
        residual,
        sweeps,
        order,
        certificate,
        scope: PROXY_SCOPE.to_string(),
    })
}

// ---------------------------------------------------------------------------
// dimension and Hölder estimates

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    pub n: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if xs.len() > 2 && sxx > 0.0 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    LineFit {
        slope,
        intercept,
        r2,
        slope_stderr,
        n: xs.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDimension {
    pub dimension: f64,
    pub fit: LineFit,
    /// `(box size, occupied boxes)` per scale.
    pub counts: Vec<(f64, usize)>,
}

/// Box-counting dimension of a bitmap over dyadic box sizes `2^j` pixels,
/// `j_min ≤ j ≤ j_max` (default: `0 ..= log2(min side) − 2`).
pub fn boxdim(bitmap: &Bitmap, scales: Option<(u32, u32)>) -> Result<BoxDimension> {
    let lat = &bitmap.lattice;
    let side = lat.nx.min(lat.ny);
    let top = (usize::BITS - 1 - side.leading_zeros()).saturating_sub(2);
    let (lo, hi) = scales.unwrap_or((0, top));
    let hi = hi.min(top);
    let available = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
    if available < 4 {
        return Err(Error::InsufficientScales { needed: 4, available });
    }
    let mut counts = Vec::new();
    for j in lo..=hi {
        let b = 1usize << j;
        let (bx, by) = (lat.nx.div_ceil(b), lat.ny.div_ceil(b));
        let mut occ = vec![false; bx * by];
        for y in 0..lat.ny {
            for x in 0..lat.nx {
                if bitmap.get(x, y) {
                    occ[(y / b) * bx + x / b] = true;
                }
            }
        }
        counts.push((b as f64 * lat.hx(), occ.iter().filter(|&&o| o).count()));
    }
    if counts.iter().any(|&(_, c)| c == 0) {
        return Err(Error::InsufficientSpread("empty set".into()));
    }
    box_fit(counts)
}

/// Box counting for a planar point set at box sizes `L/2^j`.
pub fn boxdim_points(points: &[(f64, f64)], levels: (u32, u32)) -> Result<BoxDimension> {
    let (lo, hi) = levels;
    let available = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
    if available < 4 {
        return Err(Error::InsufficientScales { needed: 4, available });
    }
    if points.is_empty() {
        return Err(Error::InsufficientSpread("empty set".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let l = (x1 - x0).max(y1 - y0);
    if !(l > 0.0) {
        return Err(Error::InsufficientSpread("all points coincide".into()));
    }
    let mut counts = Vec::new();
    for j in lo..=hi {
        let eps = l / (1u64 << j) as f64;
        let mut cells: Vec<(i64, i64)> = points
            .iter()
            .map(|&(x, y)| {
                // closed box: the far edge belongs to the last cell
                let last = (1i64 << j) - 1;
                let cell = |v: f64| (v / eps).floor().min(last as f64) as i64;
                (cell(x - x0), cell(y - y0))
            })
            .collect();
        cells.sort_unstable();
        cells.dedup();
        counts.push((eps, cells.len()));
    }
    box_fit(counts)
}

fn box_fit(counts: Vec<(f64, usize)>) -> Result<BoxDimension> {
    let xs: Vec<f64> = counts.iter().map(|&(e, _)| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, c)| (c as f64).ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(BoxDimension {
        dimension: fit.slope,
        fit,
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub exponent: f64,
    /// 95% confidence interval of the exponent.
    pub ci: (f64, f64),
    pub r2: f64,
    pub n: usize,
    pub decades: f64,
}

/// Regression exponent of `log(parameter distance)` against
/// `log(model distance)`.
pub fn holder_exponent_probe(samples: &[(f64, f64)]) -> Result<HolderFit> {
    if samples.len() < 50 {
        return Err(Error::InsufficientSpread(format!("{} sample pairs, need 50", samples.len())));
    }
    if samples.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite())) {
        return Err(Error::InsufficientSpread("distances must be positive and finite".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let decades = (hi - lo) / std::f64::consts::LN_10;
    if decades < 2.0 {
        return Err(Error::InsufficientSpread(format!("model distances span {decades:.2} decades, need 2")));
    }
    let fit = fit_line(&xs, &ys);
    let half = 1.96 * fit.slope_stderr;
    Ok(HolderFit {
        exponent: fit.slope,
        ci: (fit.slope - half, fit.slope + half),
        r2: fit.r2,
        n: fit.n,
        decades,
    })
}

/// Model centers of period `≤ max_q` paired with the family's centers in the
/// window; returns all pairwise `(model distance, slice distance)`.
pub fn window_center_samples(family: &Family, window: &RenormWindow, max_q: usize) -> Result<Vec<(f64, f64)>> {
    let ctol = CyclesTol::default();
    let mut model = Vec::new();
    for q in 1..=max_q {
        for z in model_centers(q)? {
            model.push((q, z));
        }
    }
    let step = window.scale.norm() / 16.0;
    let solved: Vec<Option<(C64, C64)>> = model
        .par_iter()
        .map(|&(q, zeta)| {
            let n = q * window.return_time;
            let rel = [Relation::Periodic { critical: window.critical, n }];
            let (s, p, _) = relation_newton(family, &window.slice, &rel, &[window.s_of(zeta)], step, None).ok()?;
            let map = family.map_at(&p.lambda).ok()?;
            if exact_period(&map, map.critical[window.critical], n, &ctol) != n {
                return None;
            }
            // must come back to the same model center
            let back = window.zeta_of(s[0]);
            let nearest = model
                .iter()
                .filter(|(qq, _)| *qq == q)
                .min_by(|a, b| (a.1 - back).norm().total_cmp(&(b.1 - back).norm()))?;
            ((nearest.1 - zeta).norm() == 0.0).then_some((zeta, s[0]))
        })
        .collect();
    let pts: Vec<(C64, C64)> = solved.into_iter().flatten().collect();
    let mut out = Vec::new();
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            out.push(((pts[a].0 - pts[b].0).norm(), (pts[a].1 - pts[b].1).norm()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_center_counts() {
        let counts: Vec<usize> = (1..=6).map(|q| model_centers(q).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 3, 6, 15, 27]);
        let p3 = model_centers(3).unwrap();
        assert!(p3.iter().any(|z| (z - C64::new(-1.754877666246693, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn model_labels() {
        assert_eq!(model_misiurewicz_labels(C64::new(-2.0, 0.0), 8), Some((2, 1)));
        assert_eq!(model_misiurewicz_labels(C64::new(0.0, 1.0), 8), Some((2, 2)));
        assert_eq!(model_misiurewicz_labels(ZERO, 8), None);
        assert_eq!(model_center_period(C64::new(-1.0, 0.0), 8), Some(2));
        assert_eq!(model_center_period(C64::new(-2.0, 0.0), 8), None);
    }

    fn square(n: usize, f: impl Fn(usize, usize) -> bool) -> Bitmap {
        Bitmap::from_fn(Lattice::new(GridBox::new(0.0, 1.0, 0.0, 1.0), n, n).unwrap(), f)
    }

    #[test]
    fn box_dimension_of_simple_sets() {
        let filled = boxdim(&square(256, |_, _| true), None).unwrap();
        assert!((filled.dimension - 2.0).abs() < 0.05, "{}", filled.dimension);
        let segment = boxdim(&square(256, |_, j| j == 100), None).unwrap();
        assert!((segment.dimension - 1.0).abs() < 0.05, "{}", segment.dimension);
        assert!(matches!(
            boxdim(&square(16, |_, _| true), None),
            Err(Error::InsufficientScales { needed: 4, .. })
        ));
        let pts: Vec<(f64, f64)> = (0..4096).map(|i| (i as f64 / 4096.0, 0.3)).collect();
        let line = boxdim_points(&pts, (1, 8)).unwrap();
        assert!((line.dimension - 1.0).abs() < 0.05);
    }

    #[test]
    fn holder_probe_on_synthetic_maps() {
        let affine: Vec<(f64, f64)> = (0..80).map(|i| {
            let d = 10f64.powf(-3.0 + 3.0 * i as f64 / 79.0);
            (d, 0.37 * d)
        }).collect();
        let fit = holder_exponent_probe(&affine).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.02 && fit.r2 > 0.999);

        let constant: Vec<(f64, f64)> = affine.iter().map(|&(d, _)| (d, 0.0)).collect();
        assert!(matches!(holder_exponent_probe(&constant), Err(Error::InsufficientSpread(_))));
        let narrow: Vec<(f64, f64)> = (0..80).map(|i| (1.0 + i as f64 / 80.0, 2.0)).collect();
        assert!(matches!(holder_exponent_probe(&narrow), Err(Error::InsufficientSpread(_))));
        assert!(matches!(holder_exponent_probe(&affine[..10]), Err(Error::InsufficientSpread(_))));
    }

    #[test]
    fn line_fit_is_exact_on_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14 && f.r2 > 1.0 - 1e-14);
    }
}
