//! Periodic cycles, the `Per_n(w)` solver, multiplier continuation and
//! parameters with several prescribed neutral cycles.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Family, MapDirection, PolyMap, C64};
use crate::jet::{iterate_with_derivative, orbit_jet};
use crate::linalg::{matrix_from_rows, numerical_rank, singular_values, CMatrix};
use crate::newton::{newton, NewtonOptions};
use crate::roots::{aberth, accept};
use crate::slice::ParameterSlice;
use crate::tolerances::CyclesTol;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Classification {
    Superattracting,
    Attracting,
    /// `theta = arg(m) / 2π ∈ [0, 1)`.
    Neutral { theta: f64 },
    Repelling,
}

pub fn classify(m: C64, tol: &CyclesTol) -> Classification {
    let r = m.norm();
    if r < tol.superattracting {
        Classification::Superattracting
    } else if (r - 1.0).abs() <= tol.neutral_band {
        Classification::Neutral {
            theta: (m.arg() / TAU).rem_euclid(1.0),
        }
    } else if r < 1.0 {
        Classification::Attracting
    } else {
        Classification::Repelling
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub points: Vec<C64>,
    pub period: usize,
    pub multiplier: C64,
    pub classification: Classification,
    /// `|f(z_{p-1}) − z_0|`.
    pub residual: f64,
    /// Number of times the cycle is counted among the roots of
    /// `f^n(z) = z` (1 unless cycles merge).
    pub multiplicity: usize,
}

impl Cycle {
    /// The orbit of `z` of length `period`.
    pub fn from_point(map: &PolyMap, z: C64, period: usize, tol: &CyclesTol) -> Cycle {
        let mut points = Vec::with_capacity(period);
        let mut m = ONE;
        let mut w = z;
        for _ in 0..period {
            points.push(w);
            m *= map.deriv(w);
            w = map.eval(w);
        }
        Cycle {
            points,
            period,
            multiplier: m,
            classification: classify(m, tol),
            residual: (w - z).norm(),
            multiplicity: 1,
        }
    }

    /// Smallest distance between a point of `self` and a point of `other`.
    pub fn separation(&self, other: &Cycle) -> f64 {
        self.points
            .iter()
            .flat_map(|a| other.points.iter().map(move |b| (a - b).norm()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, z: C64, radius: f64) -> bool {
        self.points.iter().any(|p| (p - z).norm() <= radius * (1.0 + z.norm()))
    }

    /// Re-derives every stored invariant at `lambda`; returns the names of
    /// the ones that fail.
    pub fn check(&self, family: &Family, lambda: &[C64], tol: &CyclesTol) -> Result<Vec<String>> {
        let map = family.map_at(lambda)?;
        let mut bad = Vec::new();
        if self.points.len() != self.period || self.period == 0 {
            bad.push("cycle.length".to_string());
            return Ok(bad);
        }
        for (j, &z) in self.points.iter().enumerate() {
            let next = self.points[(j + 1) % self.period];
            if (map.eval(z) - next).norm() > tol.cycle_residual * (1.0 + next.norm()) {
                bad.push("cycle.residual".to_string());
                break;
            }
        }
        let m: C64 = self.points.iter().map(|&z| map.deriv(z)).product();
        if (m - self.multiplier).norm() > 1e-10 * (1.0 + m.norm()) {
            bad.push("cycle.multiplier".to_string());
        }
        if classify(self.multiplier, tol) != self.classification {
            bad.push("cycle.classification".to_string());
        }
        if exact_period(&map, self.points[0], self.period, tol) != self.period {
            bad.push("cycle.exact_period".to_string());
        }
        Ok(bad)
    }
}

/// Smallest `p | n` with `|f^p(z) − z| ≤ tol.cycle_residual · (1 + |z|)`.
pub fn exact_period(map: &PolyMap, z: C64, n: usize, tol: &CyclesTol) -> usize {
    let mut w = z;
    for p in 1..n {
        w = map.eval(w);
        if n % p == 0 && (w - z).norm() <= tol.cycle_residual * (1.0 + z.norm()) {
            return p;
        }
    }
    n
}

/// Every cycle whose period divides `n`, with multiplicities such that
/// `Σ period · multiplicity = d^n`.
pub fn cycles_dividing(family: &Family, lambda: &[C64], n: usize, tol: &CyclesTol) -> Result<Vec<Cycle>> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    if n == 0 {
        return Err(Error::InvalidSpec("period must be at least 1".into()));
    }
    let map = family.map_at(lambda)?;
    let d = map.degree() as u64;
    let degree = d.checked_pow(n as u32).filter(|&v| v <= tol.max_degree);
    let Some(degree) = degree else {
        return Err(Error::PeriodTooLarge {
            n,
            degree: d.saturating_pow(n as u32),
            limit: tol.max_degree,
        });
    };
    let dn = (d as f64).powi(n as i32);
    let ratio = |z: C64| {
        let (w, dw, esc) = iterate_with_derivative(&map, z, n);
        if esc {
            return z / dn;
        }
        (w - z) / (dw - ONE)
    };
    let out = aberth(degree as usize, ratio, map.filled_julia_bound(), 800, 1e-14);
    let roots = accept(out, 1e-6)?;

    let mut cycles: Vec<Cycle> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for r in roots {
        let z = polish_fixed_point(&map, r, n);
        let p = exact_period(&map, z, n, tol);
        if let Some(k) = cycles.iter().position(|c| c.period == p && c.contains(z, tol.separation)) {
            counts[k] += 1;
            continue;
        }
        cycles.push(Cycle::from_point(&map, z, p, tol));
        counts.push(1);
    }
    for (c, &k) in cycles.iter_mut().zip(&counts) {
        c.multiplicity = (k as f64 / c.period as f64).round().max(1.0) as usize;
    }
    Ok(cycles)
}

/// All cycles of exact period `n` at `lambda`.
pub fn periodic_points(family: &Family, lambda: &[C64], n: usize, tol: &CyclesTol) -> Result<Vec<Cycle>> {
    Ok(cycles_dividing(family, lambda, n, tol)?
        .into_iter()
        .filter(|c| c.period == n)
        .collect())
}

fn polish_fixed_point(map: &PolyMap, z0: C64, n: usize) -> C64 {
    let mut z = z0;
    let (w, _, _) = iterate_with_derivative(map, z, n);
    let mut res = (w - z).norm();
    for _ in 0..4 {
        let (w, dw, esc) = iterate_with_derivative(map, z, n);
        if esc || (dw - ONE).norm() == 0.0 {
            break;
        }
        let cand = z - (w - z) / (dw - ONE);
        let (wc, _, esc) = iterate_with_derivative(map, cand, n);
        let rc = (wc - cand).norm();
        if esc || !(rc < res) {
            break;
        }
        z = cand;
        res = rc;
    }
    z
}

/// `k` cycle targets `(period, multiplier)` solved jointly in `k` slice
/// coordinates; unknown vector `[s_1..s_k, z_1..z_k]`.
struct CycleSystem<'a> {
    family: &'a Family,
    slice: &'a ParameterSlice,
    targets: Vec<(usize, C64)>,
    t_warm: Option<Vec<C64>>,
}

struct Evaluated {
    lambda: Vec<C64>,
    map: PolyMap,
    tangents: Vec<MapDirection>,
}

impl CycleSystem<'_> {
    fn k(&self) -> usize {
        self.targets.len()
    }

    fn at(&mut self, s: &[C64]) -> Result<Evaluated> {
        let p = self.slice.point(self.family, s, self.t_warm.as_deref())?;
        if self.slice.corrector.is_some() {
            self.t_warm = Some(p.t.clone());
        }
        let map = self.family.map_at(&p.lambda)?;
        let tangents = p.tangents.iter().map(|d| map.direction(d)).collect();
        Ok(Evaluated {
            lambda: p.lambda,
            map,
            tangents,
        })
    }

    fn eval(&mut self, x: &[C64]) -> Result<(Vec<C64>, CMatrix)> {
        let k = self.k();
        let ds = self.slice.dim();
        let e = self.at(&x[..ds])?;
        let mut f = Vec::with_capacity(2 * k);
        let mut rows = Vec::with_capacity(2 * k);
        let zeros = vec![ZERO; ds];
        for (j, &(n, w)) in self.targets.iter().enumerate() {
            let z = x[ds + j];
            let jet = orbit_jet(&e.map, &e.tangents, z, &zeros, n);
            if jet.escaped {
                return Err(Error::Escape { step: n });
            }
            let mut r1 = vec![ZERO; ds + k];
            let mut r2 = vec![ZERO; ds + k];
            r1[..ds].copy_from_slice(&jet.ds);
            r2[..ds].copy_from_slice(&jet.dzs);
            r1[ds + j] = jet.dz - ONE;
            r2[ds + j] = jet.d2z;
            f.push(jet.z - z);
            f.push(jet.dz - w);
            rows.push(r1);
            rows.push(r2);
        }
        Ok((f, matrix_from_rows(&rows)))
    }

    /// `∂ρ_j/∂s_l` for the multipliers of the continued cycles.
    fn multiplier_jacobian(&mut self, x: &[C64]) -> Result<CMatrix> {
        let ds = self.slice.dim();
        let e = self.at(&x[..ds])?;
        let zeros = vec![ZERO; ds];
        let rows: Vec<Vec<C64>> = self
            .targets
            .iter()
            .enumerate()
            .map(|(j, &(n, _))| {
                let jet = orbit_jet(&e.map, &e.tangents, x[ds + j], &zeros, n);
                (0..ds)
                    .map(|l| jet.dzs[l] - jet.d2z * jet.ds[l] / (jet.dz - ONE))
                    .collect()
            })
            .collect();
        Ok(matrix_from_rows(&rows))
    }
}

fn newton_opts(tol: &CyclesTol) -> NewtonOptions {
    NewtonOptions {
        residual: tol.newton_residual,
        max_iter: tol.max_newton,
        max_backtracks: tol.max_backtracks,
        max_step: 1.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerSolution {
    pub lambda: Vec<C64>,
    /// Slice coordinate of `lambda`.
    pub s: C64,
    pub cycle: Cycle,
    pub residual: f64,
}

/// Parameter on a 1-d slice with a cycle of exact period `n` and multiplier `w`.
pub fn solve_per(
    family: &Family,
    slice: &ParameterSlice,
    n: usize,
    w: C64,
    seed_s: C64,
    seed_z: C64,
    tol: &CyclesTol,
) -> Result<PerSolution> {
    if (w - ONE).norm() < 1e-12 {
        return Err(Error::InvalidSpec("multiplier w = 1 is outside the solver contract".into()));
    }
    solve_per_inner(family, slice, n, w, seed_s, seed_z, tol, false)
}

#[allow(clippy::too_many_arguments)]
fn solve_per_inner(
    family: &Family,
    slice: &ParameterSlice,
    n: usize,
    w: C64,
    seed_s: C64,
    seed_z: C64,
    tol: &CyclesTol,
    allow_divisor: bool,
) -> Result<PerSolution> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    if slice.dim() != 1 || n == 0 {
        return Err(Error::InvalidSpec("solve_per needs a 1-d slice and n ≥ 1".into()));
    }
    let mut sys = CycleSystem {
        family,
        slice,
        targets: vec![(n, w)],
        t_warm: None,
    };
    let out = newton(&[seed_s, seed_z], |x| sys.eval(x), &newton_opts(tol))?;
    let e = sys.at(&out.x[..1])?;
    let p = exact_period(&e.map, out.x[1], n, tol);
    if p != n && !allow_divisor {
        return Err(Error::WrongExactPeriod { requested: n, found: p });
    }
    Ok(PerSolution {
        lambda: e.lambda,
        s: out.x[0],
        cycle: Cycle::from_point(&e.map, out.x[1], p, tol),
        residual: out.residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationPoint {
    pub theta: f64,
    pub lambda: Vec<C64>,
    pub s: C64,
    pub z: C64,
    pub multiplier: C64,
    pub residual: f64,
    /// The solved orbit has exact period a proper divisor of `n` (only at
    /// `w = 1`, where the period-`n` cycle merges with a parabolic one).
    pub parabolic: bool,
}

/// Follows `Per_n(e^{2πiθ})` on a 1-d slice from `θ_a` to `θ_b`.
#[allow(clippy::too_many_arguments)]
pub fn continue_per(
    family: &Family,
    slice: &ParameterSlice,
    n: usize,
    theta_a: f64,
    theta_b: f64,
    steps: usize,
    seed_s: C64,
    seed_z: C64,
    tol: &CyclesTol,
) -> Result<Vec<ContinuationPoint>> {
    let w_of = |t: f64| C64::from_polar(1.0, TAU * t);
    let solve_at = |t: f64, s: C64, z: C64| -> Result<ContinuationPoint> {
        let w = w_of(t);
        let at_one = (w - ONE).norm() < 1e-12;
        let sol = solve_per_inner(family, slice, n, w, s, z, tol, at_one)?;
        Ok(ContinuationPoint {
            theta: t,
            parabolic: sol.cycle.period != n,
            lambda: sol.lambda,
            s: sol.s,
            z: sol.cycle.points[0],
            multiplier: sol.cycle.multiplier,
            residual: sol.residual,
        })
    };
    let first = solve_at(theta_a, seed_s, seed_z)?;
    let mut path = vec![first];
    if theta_a == theta_b || steps == 0 {
        return Ok(path);
    }
    let nominal = (theta_b - theta_a) / steps as f64;
    let mut dt = nominal;
    let mut t = theta_a;
    let remaining = |t: f64| (theta_b - t) * nominal.signum();
    while remaining(t) > 1e-15 {
        if dt.abs() > remaining(t) {
            dt = remaining(t) * nominal.signum();
        }
        let last = path.last().unwrap().clone();
        // secant predictor in (s, z) per unit θ
        let (ps, pz) = if path.len() >= 2 {
            let prev = &path[path.len() - 2];
            let h = last.theta - prev.theta;
            (
                last.s + (last.s - prev.s) * (dt / h),
                last.z + (last.z - prev.z) * (dt / h),
            )
        } else {
            (last.s, last.z)
        };
        let target = t + dt;
        // leaving a parabolic point the cycle splits off like a square root
        // of w - 1; seed off the degenerate point in a few directions
        let attempt = if last.parabolic {
            let r = 0.5 * (w_of(target) - ONE).norm().sqrt();
            (0..4)
                .map(|q| C64::from_polar(r, TAU * (q as f64 + 0.5) / 4.0))
                .find_map(|off| solve_at(target, ps, pz + off).ok())
                .ok_or(Error::NoConvergence {
                    residual: f64::INFINITY,
                    iterations: 0,
                })
        } else {
            solve_at(target, ps, pz)
        };
        let attempt = attempt.and_then(|p| {
            // reject jumps to another branch: the move must stay comparable
            // to the predicted one
            let moved = (p.s - last.s).norm();
            let predicted = (ps - last.s).norm().max(1e-3 * dt.abs());
            if path.len() >= 2 && moved > 10.0 * predicted + 1e-9 {
                Err(Error::NoConvergence {
                    residual: moved,
                    iterations: 0,
                })
            } else {
                Ok(p)
            }
        });
        match attempt {
            Ok(p) => {
                t = target;
                path.push(p);
                if dt.abs() < nominal.abs() {
                    dt = (dt * 2.0).clamp(-nominal.abs(), nominal.abs());
                }
            }
            Err(_) => {
                dt *= 0.5;
                if dt.abs() < tol.continuation_step_min {
                    return Err(Error::ContinuationStalled {
                        theta: t,
                        path: path.into_iter().map(|p| (p.theta, p.lambda)).collect(),
                    });
                }
            }
        }
    }
    Ok(path)
}

/// Targets for [`solve_multi_neutral`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeutralTargetSpec {
    pub periods: Vec<usize>,
    pub thetas: Vec<f64>,
}

impl NeutralTargetSpec {
    pub fn new(periods: Vec<usize>, thetas: Vec<f64>) -> Result<Self> {
        let s = NeutralTargetSpec { periods, thetas };
        s.validate(None)?;
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.periods.len()
    }

    pub fn validate(&self, family: Option<&Family>) -> Result<()> {
        if self.periods.is_empty() || self.periods.len() != self.thetas.len() {
            return Err(Error::InvalidSpec("need k ≥ 1 periods and as many thetas".into()));
        }
        if self.periods.contains(&0) {
            return Err(Error::InvalidSpec("periods must be positive".into()));
        }
        for &t in &self.thetas {
            if !t.is_finite() || (t - t.round()).abs() < 1e-12 {
                return Err(Error::InvalidSpec(format!("theta {t} must not be an integer")));
            }
        }
        if let Some(f) = family {
            if self.k() > f.num_critical() {
                return Err(Error::InvalidSpec("more neutral targets than critical points".into()));
            }
        }
        Ok(())
    }

    pub fn multipliers(&self) -> Vec<C64> {
        self.thetas.iter().map(|&t| C64::from_polar(1.0, TAU * t)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeutralSeed {
    pub s: Vec<C64>,
    pub z: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeutralSolution {
    pub lambda: Vec<C64>,
    pub s: Vec<C64>,
    pub cycles: Vec<Cycle>,
    pub residual: f64,
    pub jacobian_rank: usize,
    pub singular_values: Vec<f64>,
    /// `None` for a single cycle.
    pub min_cycle_separation: Option<f64>,
}

impl NeutralSolution {
    /// Re-derives the solution's invariants from scratch.
    pub fn check(&self, family: &Family, spec: &NeutralTargetSpec, tol: &CyclesTol) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        if self.cycles.len() != spec.k() {
            bad.push("neutral.cycle_count".to_string());
            return Ok(bad);
        }
        for (c, (&n, w)) in self.cycles.iter().zip(spec.periods.iter().zip(spec.multipliers())) {
            bad.extend(c.check(family, &self.lambda, tol)?);
            if c.period != n {
                bad.push("neutral.period".to_string());
            }
            if (c.multiplier - w).norm() > 1e-8 {
                bad.push("neutral.multiplier".to_string());
            }
        }
        let mut sep = f64::INFINITY;
        for a in 0..self.cycles.len() {
            for b in a + 1..self.cycles.len() {
                sep = sep.min(self.cycles[a].separation(&self.cycles[b]));
            }
        }
        if sep <= tol.separation {
            bad.push("neutral.separation".to_string());
        }
        // recount among all cycles of the target periods; past the
        // enumeration budget, re-solve each cycle locally instead
        let map = family.map_at(&self.lambda)?;
        for ((&n, w), c) in spec.periods.iter().zip(spec.multipliers()).zip(&self.cycles) {
            let found = match periodic_points(family, &self.lambda, n, tol) {
                Ok(all) => all.iter().any(|c| (c.multiplier - w).norm() < 1e-6),
                Err(Error::PeriodTooLarge { .. } | Error::RootSolveFailure { .. }) => {
                    let z = repolish(&map, c.points[0], n);
                    let again = Cycle::from_point(&map, z, n, tol);
                    c.contains(z, 1e-8) && (again.multiplier - w).norm() < 1e-6
                }
                Err(e) => return Err(e),
            };
            if !found {
                bad.push("neutral.recount".to_string());
            }
        }
        bad.sort();
        bad.dedup();
        Ok(bad)
    }
}

/// Newton on `f^n(z) = z` from `z0`.
fn repolish(map: &PolyMap, z0: C64, n: usize) -> C64 {
    let mut z = z0;
    for _ in 0..30 {
        let (w, dw, esc) = iterate_with_derivative(map, z, n);
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

/// Parameter on a `k`-d slice carrying `k` distinct cycles with the target
/// periods and multipliers `e^{2πiθ_j}`. Seeds are tried in order; the
/// certified solution with the smallest residual wins.
pub fn solve_multi_neutral(
    family: &Family,
    slice: &ParameterSlice,
    spec: &NeutralTargetSpec,
    seeds: &[NeutralSeed],
    tol: &CyclesTol,
) -> Result<NeutralSolution> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    spec.validate(Some(family))?;
    if slice.dim() != spec.k() {
        return Err(Error::InvalidSpec("slice dimension must equal k".into()));
    }
    let mut best: Option<NeutralSolution> = None;
    let mut last_err = Error::NoConvergence {
        residual: f64::INFINITY,
        iterations: 0,
    };
    for seed in seeds {
        match solve_neutral_seed(family, slice, spec, seed, tol) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.residual < b.residual) {
                    best = Some(sol);
                }
            }
            Err(e) => {
                // keep the most informative failure
                let rank = |e: &Error| match e {
                    Error::RankDeficient { .. } => 3,
                    Error::CyclesCollided { .. } => 2,
                    Error::WrongExactPeriod { .. } => 1,
                    _ => 0,
                };
                if rank(&e) >= rank(&last_err) {
                    last_err = e;
                }
            }
        }
    }
    best.ok_or(last_err)
}

fn solve_neutral_seed(
    family: &Family,
    slice: &ParameterSlice,
    spec: &NeutralTargetSpec,
    seed: &NeutralSeed,
    tol: &CyclesTol,
) -> Result<NeutralSolution> {
    let k = spec.k();
    if seed.s.len() != k || seed.z.len() != k {
        return Err(Error::InvalidSpec("seed dimensions must equal k".into()));
    }
    let mut sys = CycleSystem {
        family,
        slice,
        targets: spec.periods.iter().cloned().zip(spec.multipliers()).collect(),
        t_warm: None,
    };
    let x0: Vec<C64> = seed.s.iter().chain(&seed.z).cloned().collect();
    let out = newton(&x0, |x| sys.eval(x), &newton_opts(tol))?;
    let e = sys.at(&out.x[..k])?;
    let mut cycles = Vec::with_capacity(k);
    for (j, &n) in spec.periods.iter().enumerate() {
        let p = exact_period(&e.map, out.x[k + j], n, tol);
        if p != n {
            return Err(Error::WrongExactPeriod { requested: n, found: p });
        }
        cycles.push(Cycle::from_point(&e.map, out.x[k + j], n, tol));
    }
    let mut min_sep = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            let sep = cycles[a].separation(&cycles[b]);
            if sep <= tol.separation {
                return Err(Error::CyclesCollided { i: a, j: b, separation: sep });
            }
            min_sep = min_sep.min(sep);
        }
    }
    let jm = sys.multiplier_jacobian(&out.x)?;
    let rank = numerical_rank(&jm, tol.rank_rel);
    if rank < k {
        return Err(Error::RankDeficient { rank, expected: k });
    }
    Ok(NeutralSolution {
        lambda: e.lambda,
        s: out.x[..k].to_vec(),
        cycles,
        residual: out.residual,
        jacobian_rank: rank,
        singular_values: singular_values(&jm),
        min_cycle_separation: min_sep.is_finite().then_some(min_sep),
    })
}

/// Seeds at the given slice coordinates: for each target, the first point
/// of the not-yet-used cycle of the target period whose multiplier is
/// closest to the target.
pub fn neutral_seeds(
    family: &Family,
    slice: &ParameterSlice,
    spec: &NeutralTargetSpec,
    coords: &[Vec<C64>],
    tol: &CyclesTol,
) -> Vec<NeutralSeed> {
    let mut out = Vec::new();
    for s in coords {
        let Ok(p) = slice.point(family, s, None) else {
            continue;
        };
        let mut z = Vec::with_capacity(spec.k());
        let mut used: Vec<(usize, C64)> = Vec::new();
        for (&n, w) in spec.periods.iter().zip(spec.multipliers()) {
            let Ok(cycles) = periodic_points(family, &p.lambda, n, tol) else {
                break;
            };
            let pick = cycles
                .iter()
                .filter(|c| !used.iter().any(|&(m, q)| m == n && c.contains(q, 1e-9)))
                .min_by(|a, b| (a.multiplier - w).norm().total_cmp(&(b.multiplier - w).norm()));
            let Some(c) = pick else {
                break;
            };
            used.push((n, c.points[0]));
            z.push(c.points[0]);
        }
        if z.len() == spec.k() {
            out.push(NeutralSeed { s: s.clone(), z });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> CyclesTol {
        CyclesTol::default()
    }

    #[test]
    fn periodic_point_examples() {
        let f = Family::quadratic();
        let z0 = [C64::new(0.0, 0.0)];
        let mut c1 = periodic_points(&f, &z0, 1, &tol()).unwrap();
        c1.sort_by(|a, b| a.points[0].re.total_cmp(&b.points[0].re));
        assert_eq!(c1.len(), 2);
        assert!(c1[0].points[0].norm() < 1e-12 && c1[0].multiplier.norm() < 1e-12);
        assert!((c1[1].points[0] - 1.0).norm() < 1e-12 && (c1[1].multiplier - 2.0).norm() < 1e-12);

        let c2 = periodic_points(&f, &z0, 2, &tol()).unwrap();
        assert_eq!(c2.len(), 1);
        let w = C64::from_polar(1.0, TAU / 3.0);
        assert!(c2[0].contains(w, 1e-10) && c2[0].contains(w.conj(), 1e-10));
        assert!((c2[0].multiplier - 4.0).norm() < 1e-10);

        let c = periodic_points(&f, &[C64::new(-1.0, 0.0)], 2, &tol()).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].contains(ZERO, 1e-12) && c[0].contains(C64::new(-1.0, 0.0), 1e-12));
        assert_eq!(c[0].classification, Classification::Superattracting);
    }

    #[test]
    fn root_count_with_multiplicity() {
        let f = Family::cubic();
        let lam = [C64::new(0.3, -0.2), C64::new(0.6, 0.4)];
        for n in 1..=4 {
            let cs = cycles_dividing(&f, &lam, n, &tol()).unwrap();
            let total: usize = cs.iter().map(|c| c.period * c.multiplicity).sum();
            assert_eq!(total, 3usize.pow(n as u32), "n = {n}");
        }
        // parabolic merge: z^2 + 1/4 has a double fixed point at 1/2
        let cs = cycles_dividing(&Family::quadratic(), &[C64::new(0.25, 0.0)], 1, &tol()).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].multiplicity, 2);
    }

    #[test]
    fn period_too_large() {
        let f = Family::quadratic();
        assert!(matches!(
            periodic_points(&f, &[ZERO], 13, &tol()),
            Err(Error::PeriodTooLarge { .. })
        ));
    }

    #[test]
    fn solve_per_examples() {
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let s = solve_per(&f, &sl, 1, ZERO, C64::new(0.1, 0.1), C64::new(0.1, 0.0), &tol()).unwrap();
        assert!(s.lambda[0].norm() < 1e-10);
        assert!(matches!(
            solve_per(&f, &sl, 1, ONE, ZERO, ZERO, &tol()),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn wrong_exact_period_is_reported() {
        // multiplier 0.25 at period 2: seeding at the fixed point of
        // multiplier 0.5 converges to a period-1 cycle
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let w1 = C64::new(0.5, 0.0);
        let zeta = w1 / 2.0 - w1 * w1 / 4.0;
        let r = solve_per(&f, &sl, 2, w1 * w1, zeta, w1 / 2.0, &tol());
        assert!(matches!(r, Err(Error::WrongExactPeriod { requested: 2, found: 1 })), "{r:?}");
    }

    #[test]
    fn continuation_closes_the_cardioid() {
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let path = continue_per(&f, &sl, 1, 0.0, 1.0, 256, C64::new(0.25, 0.0), C64::new(0.5, 0.0), &tol()).unwrap();
        let first = path.first().unwrap();
        let last = path.last().unwrap();
        assert!((last.theta - 1.0).abs() < 1e-15);
        assert!((first.lambda[0] - last.lambda[0]).norm() < 1e-8);
        for p in &path {
            let w = C64::from_polar(1.0, TAU * p.theta);
            assert!((p.lambda[0] - (w / 2.0 - w * w / 4.0)).norm() < 1e-9);
        }
        let single = continue_per(&f, &sl, 1, 0.3, 0.3, 10, C64::new(0.25, 0.3), C64::new(0.5, 0.3), &tol()).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn continuation_of_period_two_circle() {
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let path = continue_per(&f, &sl, 2, 0.0, 1.0, 128, C64::new(-0.75, 0.0), C64::new(-0.5, 0.0), &tol());
        let path = match path {
            Ok(p) => p,
            Err(Error::ContinuationStalled { theta, path }) => panic!("stalled at {theta}: {:?}", &path[..path.len().min(4)]),
            Err(e) => panic!("{e:?}"),
        };
        assert!(path.first().unwrap().parabolic);
        for p in &path {
            let w = C64::from_polar(1.0, TAU * p.theta);
            assert!((p.lambda[0] - (w / 4.0 - 1.0)).norm() < 1e-8, "{p:?}");
        }
    }
}
