//! Parameters where marked critical points land on repelling cycles, with
//! transversality certificates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::currents::critical_escape_time;
use crate::cycles::{exact_period, Cycle};
use crate::error::{Error, Result};
use crate::family::{Family, PolyMap, C64};
use crate::jet::{critical_jet, iterate_with_derivative, orbit_jet};
use crate::linalg::{determinant, matrix_from_rows, numerical_rank, row_norm_product, rows_of, CMatrix};
use crate::newton::{newton, NewtonOptions};
use crate::potential::cell_seed;
use crate::slice::{ParameterSlice, Relation};
use crate::tolerances::{CyclesTol, MisiurewiczTol};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `f^{m+p}(c_i) = f^m(c_i)` with `f^m(c_i)` on a repelling cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MisiurewiczConstraint {
    pub critical: usize,
    pub m: usize,
    pub p: usize,
}

impl MisiurewiczConstraint {
    pub fn new(critical: usize, m: usize, p: usize) -> Self {
        MisiurewiczConstraint { critical, m, p }
    }

    pub fn relation(&self) -> Relation {
        Relation::Preperiodic {
            critical: self.critical,
            m: self.m,
            p: self.p,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisiurewiczCertificate {
    pub lambda: Vec<C64>,
    /// Slice the constraints were solved on; the Jacobians are taken with
    /// respect to its coordinates.
    pub slice: ParameterSlice,
    pub s: Vec<C64>,
    /// Constraints relabelled with their minimal preperiod and period.
    pub constraints: Vec<MisiurewiczConstraint>,
    pub landing_cycles: Vec<Cycle>,
    pub landing_cycle_multipliers: Vec<C64>,
    /// `max_i |f^{m_i+p_i}(c_i) − f^{m_i}(c_i)|`.
    pub residual: f64,
    /// `∂χ_i/∂s_l` with `χ_i = f^{m_i}(c_i) − a_i`, `a_i` the continued
    /// landing point.
    pub chi_jacobian: Vec<Vec<C64>>,
    pub chi_det: C64,
    /// Determinant of the Jacobian of the collision map
    /// `G_i = f^{m_i+p_i}(c_i) − f^{m_i}(c_i)`; equals
    /// `Π (ρ_i − 1) · chi_det`.
    pub transversality_det: C64,
    pub jacobian_rank: usize,
    pub transverse: bool,
    /// Floating-point certificate with margins, not interval arithmetic.
    pub certification: String,
}

const CERTIFICATION: &str = "double precision with residual and margin checks";

fn validate(family: &Family, slice: &ParameterSlice, constraints: &[MisiurewiczConstraint], distinct: bool) -> Result<()> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    slice.validate(family)?;
    let k = constraints.len();
    if k == 0 || k != slice.dim() {
        return Err(Error::InvalidSpec("need as many constraints as slice directions".into()));
    }
    for c in constraints {
        if c.m == 0 || c.p == 0 || c.critical >= family.num_critical() {
            return Err(Error::InvalidSpec(format!("invalid constraint {c:?}")));
        }
    }
    if distinct {
        for a in 0..k {
            for b in a + 1..k {
                if constraints[a].critical == constraints[b].critical {
                    return Err(Error::InvalidSpec("constraints must use distinct critical points".into()));
                }
            }
        }
    }
    Ok(())
}

/// `(G, ∂G/∂s)` at slice coordinate `s`.
fn collision_system(
    family: &Family,
    slice: &ParameterSlice,
    constraints: &[MisiurewiczConstraint],
    s: &[C64],
    t_warm: &mut Option<Vec<C64>>,
) -> Result<(Vec<C64>, CMatrix)> {
    let p = slice.point(family, s, t_warm.as_deref())?;
    if slice.corrector.is_some() {
        *t_warm = Some(p.t.clone());
    }
    let map = family.map_at(&p.lambda)?;
    let dirs: Vec<_> = p.tangents.iter().map(|d| map.direction(d)).collect();
    let mut f = Vec::with_capacity(constraints.len());
    let mut rows = Vec::with_capacity(constraints.len());
    for c in constraints {
        let (v, g) = c.relation().value_and_grad(&map, &dirs)?;
        f.push(v);
        rows.push(g);
    }
    Ok((f, matrix_from_rows(&rows)))
}

/// Minimal `(m, p)` for critical point `i` whose orbit is (numerically)
/// preperiodic with the requested labels, plus the polished landing point.
fn minimal_labels(map: &PolyMap, c: MisiurewiczConstraint, tol: &CyclesTol) -> (MisiurewiczConstraint, C64) {
    let mut orbit = vec![map.critical[c.critical]];
    for _ in 0..c.m + c.p {
        let z = *orbit.last().unwrap();
        orbit.push(map.eval(z));
    }
    let x = orbit[c.m];
    let p = exact_period(map, x, c.p, tol);
    let a = polish_periodic(map, x, p);
    // smallest j whose iterate already sits on the cycle of a
    let mut cyc = vec![a];
    for _ in 1..p {
        let z = *cyc.last().unwrap();
        cyc.push(map.eval(z));
    }
    let on_cycle = |z: C64| cyc.iter().any(|q| (q - z).norm() <= 1e-7 * (1.0 + z.norm()));
    let m = (0..=c.m).find(|&j| on_cycle(orbit[j])).unwrap_or(c.m);
    // landing point of the relabelled constraint
    let landing = cyc
        .iter()
        .cloned()
        .min_by(|u, v| (u - orbit[m]).norm().total_cmp(&(v - orbit[m]).norm()))
        .unwrap();
    (MisiurewiczConstraint::new(c.critical, m, p), landing)
}

fn polish_periodic(map: &PolyMap, z0: C64, p: usize) -> C64 {
    let mut z = z0;
    for _ in 0..20 {
        let (w, dw, esc) = iterate_with_derivative(map, z, p);
        if esc {
            break;
        }
        let den = dw - ONE;
        if den.norm() < 1e-300 {
            break;
        }
        let step = (w - z) / den;
        z -= step;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Solves the constraints and assembles the certificate without refusing
/// degenerate Jacobians (the returned certificate records `transverse`).
pub fn solve_uncertified(
    family: &Family,
    slice: &ParameterSlice,
    constraints: &[MisiurewiczConstraint],
    seed: &[C64],
    tol: &MisiurewiczTol,
) -> Result<MisiurewiczCertificate> {
    validate(family, slice, constraints, false)?;
    let mut warm = None;
    let opts = NewtonOptions {
        residual: tol.residual,
        max_iter: 200,
        max_backtracks: 40,
        max_step: 0.5,
    };
    let out = newton(
        seed,
        |s| collision_system(family, slice, constraints, s, &mut warm),
        &opts,
    )?;
    certify(family, slice, constraints, &out.x, tol)
}

/// Builds the certificate at slice coordinate `s` (assumed solved).
pub fn certify(
    family: &Family,
    slice: &ParameterSlice,
    constraints: &[MisiurewiczConstraint],
    s: &[C64],
    tol: &MisiurewiczTol,
) -> Result<MisiurewiczCertificate> {
    let ctol = CyclesTol::default();
    let sp = slice.point(family, s, None)?;
    let map = family.map_at(&sp.lambda)?;
    family.critical_points(&sp.lambda)?;
    let dirs: Vec<_> = sp.tangents.iter().map(|d| map.direction(d)).collect();
    let k = constraints.len();
    let zeros = vec![ZERO; dirs.len()];

    let mut labels = Vec::with_capacity(k);
    let mut landing_cycles = Vec::with_capacity(k);
    let mut chi_rows = Vec::with_capacity(k);
    let mut g_rows = Vec::with_capacity(k);
    let mut residual: f64 = 0.0;
    for (idx, &c) in constraints.iter().enumerate() {
        let (lab, a) = minimal_labels(&map, c, &ctol);
        let cycle = Cycle::from_point(&map, a, lab.p, &ctol);
        if cycle.multiplier.norm() <= 1.0 + tol.repelling_margin {
            return Err(Error::LandingNotRepelling {
                index: idx,
                modulus: cycle.multiplier.norm(),
            });
        }
        let (g, grow) = lab.relation().value_and_grad(&map, &dirs)?;
        residual = residual.max(g.norm());
        // ∂a/∂s from f^p(a) = a
        let ja = orbit_jet(&map, &dirs, a, &zeros, lab.p);
        let jx = critical_jet(&map, &dirs, lab.critical, lab.m);
        let row: Vec<C64> = (0..dirs.len())
            .map(|l| jx.ds[l] + ja.ds[l] / (ja.dz - ONE))
            .collect();
        chi_rows.push(row);
        g_rows.push(grow);
        labels.push(lab);
        landing_cycles.push(cycle);
    }
    let chi = matrix_from_rows(&chi_rows);
    let gj = matrix_from_rows(&g_rows);
    let (chi_det, transversality_det, transverse) = if chi.nrows() == chi.ncols() {
        let det = determinant(&gj);
        let ok = det.norm() > tol.transversality * row_norm_product(&gj);
        (determinant(&chi), det, ok)
    } else {
        (ZERO, ZERO, false)
    };
    Ok(MisiurewiczCertificate {
        lambda: sp.lambda,
        slice: slice.clone(),
        s: s.to_vec(),
        constraints: labels,
        landing_cycle_multipliers: landing_cycles.iter().map(|c| c.multiplier).collect(),
        landing_cycles,
        residual,
        chi_jacobian: rows_of(&chi),
        chi_det,
        transversality_det,
        jacobian_rank: numerical_rank(&gj, 1e-8),
        transverse,
        certification: CERTIFICATION.to_string(),
    })
}

/// Certified Misiurewicz parameter on a `k`-d slice.
pub fn solve_misiurewicz(
    family: &Family,
    slice: &ParameterSlice,
    constraints: &[MisiurewiczConstraint],
    seed: &[C64],
    tol: &MisiurewiczTol,
) -> Result<MisiurewiczCertificate> {
    validate(family, slice, constraints, true)?;
    let cert = solve_uncertified(family, slice, constraints, seed, tol)?;
    if cert.residual > tol.residual {
        return Err(Error::NoConvergence {
            residual: cert.residual,
            iterations: 0,
        });
    }
    if !cert.transverse {
        return Err(Error::DegenerateJacobian {
            det_abs: cert.transversality_det.norm(),
            threshold: tol.transversality,
        });
    }
    Ok(cert)
}

impl MisiurewiczCertificate {
    /// Recomputes every invariant from the family; returns failed names.
    pub fn check(&self, family: &Family, tol: &MisiurewiczTol) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        let k = self.constraints.len();
        if self.landing_cycles.len() != k || self.landing_cycle_multipliers.len() != k || self.chi_jacobian.len() != k {
            bad.push("certificate.shape".to_string());
            return Ok(bad);
        }
        let sp = self.slice.point(family, &self.s, None)?;
        let dist: f64 = sp.lambda.iter().zip(&self.lambda).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if dist > 1e-9 {
            bad.push("certificate.lambda".to_string());
        }
        let fresh = match certify(family, &self.slice, &self.constraints, &self.s, tol) {
            Ok(c) => c,
            Err(Error::LandingNotRepelling { .. }) => {
                bad.push("certificate.repelling".to_string());
                return Ok(bad);
            }
            Err(e) => return Err(e),
        };
        if fresh.residual > tol.residual {
            bad.push("certificate.residual".to_string());
        }
        if fresh.constraints != self.constraints {
            bad.push("certificate.minimal_labels".to_string());
        }
        let close = |a: C64, b: C64, rel: f64| (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()));
        for (a, b) in fresh.landing_cycle_multipliers.iter().zip(&self.landing_cycle_multipliers) {
            if !close(*a, *b, 1e-8) {
                bad.push("certificate.landing_multiplier".to_string());
            }
        }
        if self.landing_cycle_multipliers.iter().any(|m| m.norm() <= 1.0 + tol.repelling_margin) {
            bad.push("certificate.repelling".to_string());
        }
        if !close(fresh.transversality_det, self.transversality_det, 1e-6) || !close(fresh.chi_det, self.chi_det, 1e-6) {
            bad.push("certificate.determinant".to_string());
        }
        for (r1, r2) in fresh.chi_jacobian.iter().zip(&self.chi_jacobian) {
            if r1.len() != r2.len() || r1.iter().zip(r2).any(|(a, b)| !close(*a, *b, 1e-6)) {
                bad.push("certificate.chi_jacobian".to_string());
                break;
            }
        }
        if fresh.transverse != self.transverse {
            bad.push("certificate.transverse".to_string());
        }
        // forward orbit round trip
        let map = family.map_at(&self.lambda)?;
        for (c, cyc) in self.constraints.iter().zip(&self.landing_cycles) {
            let mut z = map.critical[c.critical];
            for step in 0..c.m + 3 * c.p {
                z = map.eval(z);
                if step + 1 >= c.m && !cyc.contains(z, 1e-8) {
                    bad.push("certificate.orbit_round_trip".to_string());
                    break;
                }
            }
        }
        bad.sort();
        bad.dedup();
        Ok(bad)
    }
}

/// Retries from random nearby seeds until a transverse certificate appears.
pub fn transversality_rescue(
    family: &Family,
    cert: &MisiurewiczCertificate,
    budget: usize,
    seed: u64,
    tol: &MisiurewiczTol,
) -> Result<MisiurewiczCertificate> {
    if cert.transverse {
        return Ok(cert.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..budget {
        let r = 1e-3 * (1.0 + attempt as f64);
        let s: Vec<C64> = cert
            .s
            .iter()
            .map(|&x| x + C64::from_polar(r * rng.gen::<f64>(), std::f64::consts::TAU * rng.gen::<f64>()))
            .collect();
        if let Ok(c) = solve_uncertified(family, &cert.slice, &cert.constraints, &s, tol) {
            if c.transverse && c.residual <= tol.residual {
                return Ok(c);
            }
        }
    }
    Err(Error::RescueExhausted { attempts: budget })
}

/// Polydisc-like box `|Re(λ_k − c_k)|, |Im(λ_k − c_k)| ≤ half_width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBox {
    pub center: Vec<C64>,
    pub half_width: f64,
}

impl ParamBox {
    pub fn contains(&self, lambda: &[C64]) -> bool {
        lambda.iter().zip(&self.center).all(|(l, c)| {
            let d = l - c;
            d.re.abs() <= self.half_width && d.im.abs() <= self.half_width
        })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<C64> {
        self.center
            .iter()
            .map(|c| {
                c + C64::new(
                    rng.gen_range(-self.half_width..=self.half_width),
                    rng.gen_range(-self.half_width..=self.half_width),
                )
            })
            .collect()
    }
}

/// Search configuration of [`multi_misiurewicz_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub window: ParamBox,
    pub k: usize,
    pub max_preperiod: usize,
    pub max_period: usize,
    pub n_seeds: usize,
    pub seed: u64,
    /// Take the preperiod of an escaping critical point from its escape
    /// time at the start (a few steps short of it) instead of at random.
    #[serde(default)]
    pub escape_guided: bool,
}

/// Orbit length scanned for escape by guided sweeps.
const ESCAPE_SCAN: usize = 20_000;

/// All constraint shapes on `k` distinct critical points.
fn shapes(family: &Family, k: usize, max_m: usize, max_p: usize) -> Vec<Vec<MisiurewiczConstraint>> {
    let q = family.num_critical();
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    // increasing critical index tuples
    fn crit_sets(q: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..q {
            cur.push(i);
            crit_sets(q, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut sets = Vec::new();
    crit_sets(q, k, 0, &mut Vec::new(), &mut sets);
    let per = max_m * max_p;
    for set in sets {
        let total = per.pow(k as u32);
        for code in 0..total {
            let mut c = code;
            for slot in idx.iter_mut() {
                *slot = c % per;
                c /= per;
            }
            out.push(
                set.iter()
                    .zip(&idx)
                    .map(|(&i, &v)| MisiurewiczConstraint::new(i, 1 + v / max_p, 1 + v % max_p))
                    .collect(),
            );
        }
    }
    out
}

/// Multi-start search for `k`-fold Misiurewicz parameters in a window.
/// Deduplicated at `tol.dedup` and sorted by residual.
pub fn multi_misiurewicz_sweep(family: &Family, cfg: &SweepConfig, tol: &MisiurewiczTol) -> Result<Vec<MisiurewiczCertificate>> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    let m = family.param_dim();
    if cfg.k == 0 || cfg.k > m || cfg.k > family.num_critical() || cfg.window.center.len() != m {
        return Err(Error::InvalidSpec("sweep needs 1 ≤ k ≤ param_dim and a matching window".into()));
    }
    let shapes = shapes(family, cfg.k, cfg.max_preperiod.max(1), cfg.max_period.max(1));
    let found: Vec<Option<MisiurewiczCertificate>> = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, idx as u64));
            let mut shape = shapes[rng.gen_range(0..shapes.len())].clone();
            let start = cfg.window.sample(&mut rng);
            if cfg.escape_guided {
                for con in shape.iter_mut() {
                    if let Ok(Some(n)) = critical_escape_time(family, &start, con.critical, ESCAPE_SCAN) {
                        con.m = n.saturating_sub(rng.gen_range(0..4)).max(1);
                        con.p = rng.gen_range(1..=cfg.max_period.max(1));
                    }
                }
            }
            let slice = if cfg.k == m {
                ParameterSlice::full(family)
            } else {
                let mut s = ParameterSlice::full(family);
                s.base = start.clone();
                s.directions.truncate(cfg.k);
                s
            };
            let seed_s: Vec<C64> = if cfg.k == m { start } else { vec![ZERO; cfg.k] };
            let cert = solve_misiurewicz(family, &slice, &shape, &seed_s, tol).ok()?;
            cfg.window.contains(&cert.lambda).then_some(cert)
        })
        .collect();
    Ok(dedup_certificates(found.into_iter().flatten().collect(), tol.dedup))
}

/// Keeps the lowest-residual certificate per parameter cluster.
pub fn dedup_certificates(mut certs: Vec<MisiurewiczCertificate>, radius: f64) -> Vec<MisiurewiczCertificate> {
    certs.sort_by(|a, b| {
        a.residual.total_cmp(&b.residual).then_with(|| {
            let key = |c: &MisiurewiczCertificate| c.lambda.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>();
            key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut out: Vec<MisiurewiczCertificate> = Vec::new();
    for c in certs {
        let dup = out.iter().any(|o| {
            o.lambda
                .iter()
                .zip(&c.lambda)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
                <= radius
        });
        if !dup {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> MisiurewiczTol {
        MisiurewiczTol::default()
    }

    #[test]
    fn chebyshev_parameter() {
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let c = solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 2, 1)], &[C64::new(-1.9, 0.0)], &tol()).unwrap();
        assert!((c.lambda[0] + 2.0).norm() < 1e-12);
        assert!((c.landing_cycles[0].points[0] - 2.0).norm() < 1e-12);
        assert!((c.landing_cycle_multipliers[0] - 4.0).norm() < 1e-10);
        assert!((c.transversality_det + 8.0).norm() < 1e-6);
        // χ' = (2ζ + 1) + 1/sqrt(1 - 4ζ) at ζ = -2
        assert!((c.chi_det + 8.0 / 3.0).norm() < 1e-9);
        assert!(c.check(&f, &tol()).unwrap().is_empty());
    }

    #[test]
    fn parameter_i() {
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let c = solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 2, 2)], &[C64::new(0.0, 0.9)], &tol()).unwrap();
        assert!((c.lambda[0] - C64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((c.landing_cycle_multipliers[0] - C64::new(4.0, 4.0)).norm() < 1e-8);
        let cyc = &c.landing_cycles[0];
        assert!(cyc.contains(C64::new(-1.0, 1.0), 1e-10) && cyc.contains(C64::new(0.0, -1.0), 1e-10));
    }

    #[test]
    fn landing_on_a_superattracting_cycle_is_refused() {
        // from 1/4, Newton on f^2(0) = f(0) reaches ζ = 0, where the
        // critical point is itself fixed
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let r = solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 1, 1)], &[C64::new(0.25, 0.0)], &tol());
        assert!(matches!(r, Err(Error::LandingNotRepelling { .. })), "{r:?}");
    }

    #[test]
    fn non_minimal_labels_are_relabelled() {
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let c = solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 3, 2)], &[C64::new(-1.98, 0.0)], &tol()).unwrap();
        assert!((c.lambda[0] + 2.0).norm() < 1e-10);
        assert_eq!(c.constraints[0], MisiurewiczConstraint::new(0, 2, 1));
    }

    #[test]
    fn empty_sweep() {
        let f = Family::quadratic();
        let cfg = SweepConfig {
            window: ParamBox { center: vec![C64::new(-0.85, 0.0)], half_width: 1.35 },
            k: 1,
            max_preperiod: 3,
            max_period: 2,
            n_seeds: 0,
            seed: 3,
            escape_guided: false,
        };
        assert!(multi_misiurewicz_sweep(&f, &cfg, &tol()).unwrap().is_empty());
    }

    #[test]
    fn passthrough_and_doubled_constraints() {
        let f = Family::quadratic();
        let sl = ParameterSlice::full_line(&f);
        let c = solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 2, 1)], &[C64::new(-1.9, 0.0)], &tol()).unwrap();
        assert_eq!(transversality_rescue(&f, &c, 4, 1, &tol()).unwrap(), c);

        let cubic = Family::cubic();
        let full = ParameterSlice::full(&cubic);
        let doubled = [MisiurewiczConstraint::new(1, 2, 1), MisiurewiczConstraint::new(1, 2, 1)];
        assert!(matches!(
            solve_misiurewicz(&cubic, &full, &doubled, &[C64::new(1.0, 0.2), C64::new(0.5, 0.5)], &tol()),
            Err(Error::InvalidSpec(_))
        ));
    }

    fn cubic_sweep() -> Vec<MisiurewiczCertificate> {
        let cfg = SweepConfig {
            window: ParamBox { center: vec![ZERO; 2], half_width: 2.0 },
            k: 2,
            max_preperiod: 4,
            max_period: 3,
            n_seeds: 512,
            seed: 7,
            escape_guided: false,
        };
        multi_misiurewicz_sweep(&Family::cubic(), &cfg, &tol()).unwrap()
    }

    #[test]
    fn cubic_sweep_is_rank_two() {
        let f = Family::cubic();
        let certs = cubic_sweep();
        assert!(!certs.is_empty());
        for c in &certs {
            assert_eq!(c.jacobian_rank, 2);
            assert!(c.transverse && c.residual <= 1e-10);
            assert!(c.check(&f, &tol()).unwrap().is_empty(), "{:?}", c.lambda);
        }
        for w in certs.windows(2) {
            assert!(w[0].residual <= w[1].residual);
        }
    }

    #[test]
    fn quadratic_sweep_recovers_known_points() {
        let cfg = SweepConfig {
            window: ParamBox { center: vec![C64::new(-0.85, 0.0)], half_width: 1.35 },
            k: 1,
            max_preperiod: 3,
            max_period: 2,
            n_seeds: 256,
            seed: 1,
            escape_guided: false,
        };
        let certs = multi_misiurewicz_sweep(&Family::quadratic(), &cfg, &tol()).unwrap();
        for target in [C64::new(-2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
            assert!(certs.iter().any(|c| (c.lambda[0] - target).norm() < 1e-9), "{target}");
        }
    }

    #[test]
    fn rescue_recertifies_near_a_sweep_parameter() {
        let f = Family::cubic();
        let c = &cubic_sweep()[0];
        let strict = MisiurewiczTol { transversality: 1e6, ..tol() };
        let degenerate = certify(&f, &c.slice, &c.constraints, &c.s, &strict).unwrap();
        assert!(!degenerate.transverse);
        let fixed = transversality_rescue(&f, &degenerate, 64, 5, &tol()).unwrap();
        assert!(fixed.transverse && fixed.residual <= 1e-10);
    }

    #[test]
    fn doubled_constraint_cannot_be_rescued() {
        let f = Family::cubic();
        let c = &cubic_sweep()[0];
        let row = c.constraints[1];
        let doubled = certify(&f, &c.slice, &[row, row], &c.s, &tol()).unwrap();
        assert!(!doubled.transverse);
        assert_eq!(doubled.transversality_det.norm(), 0.0);
        assert!(matches!(
            transversality_rescue(&f, &doubled, 16, 5, &tol()),
            Err(Error::RescueExhausted { attempts: 16 })
        ));
    }

    #[test]
    fn determinant_under_reordering_and_scaling() {
        let f = Family::cubic();
        let c = &cubic_sweep()[0];
        let swapped: Vec<_> = c.constraints.iter().rev().cloned().collect();
        let r = certify(&f, &c.slice, &swapped, &c.s, &tol()).unwrap();
        assert!((r.transversality_det + c.transversality_det).norm() <= 1e-9 * c.transversality_det.norm());

        let (a, b) = (C64::new(0.5, 2.0), C64::new(-3.0, 0.25));
        let mut scaled = c.slice.clone();
        scaled.directions[0].iter_mut().for_each(|x| *x *= a);
        scaled.directions[1].iter_mut().for_each(|x| *x *= b);
        let s = vec![c.s[0] / a, c.s[1] / b];
        let r = certify(&f, &scaled, &c.constraints, &s, &tol()).unwrap();
        assert!((r.transversality_det - c.transversality_det * a * b).norm() <= 1e-8 * r.transversality_det.norm());
        assert_eq!(r.transverse, c.transverse);
    }
}
