//! Batch experiments composing the solvers: neutral parameters near
//! Misiurewicz parameters and back, and a probe for parameters where one
//! critical point is active and the other passive.
//!
//! Distances are Euclidean in the family's parameter chart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::currents::{activity_test, bif_density, Activity, ActivityVerdict};
use crate::cycles::{solve_multi_neutral, NeutralSeed, NeutralSolution, NeutralTargetSpec};
use crate::error::{Error, Result};
use crate::family::{Family, C64};
use crate::grid::{Chart, GridBox, Lattice};
use crate::misiurewicz::{multi_misiurewicz_sweep, MisiurewiczCertificate, ParamBox, SweepConfig};
use crate::potential::cell_seed;
use crate::renorm::{anchor_on_slice, product_embedding_sample, EmbedConfig, ReturnMap, WindowSearch};
use crate::slice::ParameterSlice;
use crate::tolerances::{CurrentsTol, Tolerances};

const ZERO: C64 = C64::new(0.0, 0.0);

const SUCCESS_RULE: &str = "our operationalization: every radius yields a parameter within that radius \
     and the distance curve is nonincreasing";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub radii: Vec<f64>,
    /// Attempts per radius.
    pub n_seeds: usize,
    pub seed: u64,
    /// Largest return time of the windows used to seed neutral solves.
    pub max_return: usize,
    pub max_preperiod: usize,
    pub max_period: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            radii: vec![0.2, 0.1, 0.05, 0.02],
            n_seeds: 256,
            seed: 0,
            max_return: 24,
            max_preperiod: 6,
            max_period: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialCertificate {
    Neutral(NeutralSolution),
    Misiurewicz(MisiurewiczCertificate),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub radius: f64,
    /// The parameter the search was centred on.
    pub start: Vec<C64>,
    pub found: Vec<C64>,
    pub distance: f64,
    pub residual: f64,
    pub certificate: TrialCertificate,
    /// Failed invariants on an independent re-check (empty when clean).
    pub recheck: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkPoint {
    pub radius: f64,
    pub attempts: usize,
    pub successes: usize,
    /// Nearest verified parameter, `None` for a miss.
    pub distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityExperimentReport {
    pub experiment: String,
    pub k: usize,
    pub thetas: Vec<f64>,
    pub family: String,
    pub center: Vec<C64>,
    pub trials: Vec<Trial>,
    pub shrink_curve: Vec<ShrinkPoint>,
    pub success: bool,
    pub success_rule: String,
}

impl DensityExperimentReport {
    fn new(name: &str, family: &Family, spec: &NeutralTargetSpec, center: Vec<C64>) -> Self {
        DensityExperimentReport {
            experiment: name.to_string(),
            k: spec.k(),
            thetas: spec.thetas.clone(),
            family: family.descriptor(),
            center,
            trials: Vec::new(),
            shrink_curve: Vec::new(),
            success: false,
            success_rule: SUCCESS_RULE.to_string(),
        }
    }

    pub fn nonincreasing(&self) -> bool {
        let d: Vec<f64> = self.shrink_curve.iter().map(|p| p.distance.unwrap_or(f64::INFINITY)).collect();
        d.windows(2).all(|w| w[1] <= w[0])
    }

    fn finish(&mut self) {
        let all_hit = self
            .shrink_curve
            .iter()
            .all(|p| p.distance.is_some_and(|d| d <= p.radius));
        self.success = all_hit && self.nonincreasing() && self.trials.iter().all(|t| t.recheck.is_empty());
    }

    /// Fixed-width text table of the shrink curve.
    pub fn summary(&self) -> String {
        let mut s = format!("{} (k = {}, {})\n  radius    attempts  hits  distance\n", self.experiment, self.k, self.family);
        for p in &self.shrink_curve {
            let d = p.distance.map_or("miss".to_string(), |d| format!("{d:.3e}"));
            s.push_str(&format!("  {:<9} {:<9} {:<5} {}\n", p.radius, p.attempts, p.successes, d));
        }
        s.push_str(&format!("  success: {} ({})\n", self.success, self.success_rule));
        s
    }
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Model parameter of `z² + ζ` whose fixed point has multiplier `w`.
fn model_root(w: C64) -> (C64, C64) {
    (w / 2.0 - w * w / 4.0, w / 2.0)
}

/// One neutral solve seeded from the product of two window centers.
fn neutral_attempt(
    family: &Family,
    cert: &MisiurewiczCertificate,
    spec: &NeutralTargetSpec,
    search: WindowSearch,
    seed: u64,
    tol: &Tolerances,
) -> Result<NeutralSolution> {
    let k = spec.k();
    // the distortion estimate is irrelevant here; keep it cheap
    let mut rtol = tol.renorm.clone();
    rtol.h_samples = 2;
    let cfg = EmbedConfig { search, seed };
    let centers = product_embedding_sample(family, cert, &vec![ZERO; k], &cfg, &rtol)?;
    let base = centers.lambda;
    let targets = spec.multipliers();
    let mut offsets = vec![ZERO; base.len()];
    let mut dirs = Vec::with_capacity(k);
    let mut zs = Vec::with_capacity(k);
    let mut periods = Vec::with_capacity(k);
    for (j, w) in centers.windows.iter().enumerate() {
        let v = w.slice.directions[0].clone();
        let line = ParameterSlice::line(base.clone(), v.clone());
        let (scale, _) = anchor_on_slice(family, &line, w.critical, w.return_time, ZERO)?;
        let (zeta, _) = model_root(targets[j]);
        for (o, d) in offsets.iter_mut().zip(&v) {
            *o += zeta * scale * d;
        }
        dirs.push(v);
        periods.push(w.return_time);
    }
    let spec_n = NeutralTargetSpec::new(periods, spec.thetas.clone())?;
    let mut seeds = Vec::new();
    for t in [1.0, 0.97, 1.03] {
        let lambda: Vec<C64> = base.iter().zip(&offsets).map(|(b, o)| b + o * t).collect();
        zs.clear();
        for (j, w) in centers.windows.iter().enumerate() {
            let rm = ReturnMap::new(family, lambda.clone(), w.critical, w.return_time)?;
            let (_, z_model) = model_root(targets[j]);
            zs.push(rm.critical_point + z_model / rm.rescale);
        }
        seeds.push((lambda, zs.clone()));
    }
    let mut last = Error::NotFound("no neutral seed".into());
    for (lambda, z) in seeds {
        let slice = ParameterSlice {
            base: lambda,
            directions: dirs.clone(),
            corrector: None,
        };
        let seed = NeutralSeed { s: vec![ZERO; k], z };
        match solve_multi_neutral(family, &slice, &spec_n, &[seed], &tol.cycles) {
            Ok(sol) => return Ok(sol),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn random_in_disk(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    let rho = r * rng.gen::<f64>().sqrt();
    C64::from_polar(rho, std::f64::consts::TAU * rng.gen::<f64>())
}

/// From a rank-`k` Misiurewicz parameter, neutral parameters with
/// multipliers `e^{2πiθ_j}` in shrinking balls around it.
///
/// Each attempt picks a random search disk inside the ball along every
/// factor direction, solves for the product of the window centers found
/// there, and seeds the neutral solve at the model parameters carrying the
/// target multipliers.
pub fn experiment_prerep_to_neutral(
    family: &Family,
    certificates: &[MisiurewiczCertificate],
    spec: &NeutralTargetSpec,
    cfg: &ExperimentConfig,
    tol: &Tolerances,
) -> Result<DensityExperimentReport> {
    spec.validate(Some(family))?;
    let k = spec.k();
    let cert = certificates
        .iter()
        .find(|c| c.constraints.len() == k && c.jacobian_rank == k && c.transverse)
        .ok_or(Error::NoCertificateAvailable(k))?;
    let mut report = DensityExperimentReport::new("prerep_to_neutral", family, spec, cert.lambda.clone());
    for (ri, &r) in cfg.radii.iter().enumerate() {
        let found: Vec<Option<NeutralSolution>> = (0..cfg.n_seeds)
            .into_par_iter()
            .map(|idx| {
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, (ri * cfg.n_seeds + idx) as u64));
                let search = WindowSearch {
                    seed: random_in_disk(&mut rng, r / 2.0),
                    radius: r / 2.0,
                    max_return: cfg.max_return,
                    direction: None,
                };
                let sol = neutral_attempt(family, cert, spec, search, rng.gen(), tol).ok()?;
                (distance(&sol.lambda, &cert.lambda) <= r).then_some(sol)
            })
            .collect();
        let successes = found.iter().flatten().count();
        let best = found
            .into_iter()
            .flatten()
            .min_by(|a, b| distance(&a.lambda, &cert.lambda).total_cmp(&distance(&b.lambda, &cert.lambda)));
        let d = best.as_ref().map(|s| distance(&s.lambda, &cert.lambda));
        report.shrink_curve.push(ShrinkPoint {
            radius: r,
            attempts: cfg.n_seeds,
            successes,
            distance: d,
        });
        if let Some(sol) = best {
            let periods = sol.cycles.iter().map(|c| c.period).collect();
            let recheck = sol.check(family, &NeutralTargetSpec::new(periods, spec.thetas.clone())?, &tol.cycles)?;
            report.trials.push(Trial {
                radius: r,
                start: cert.lambda.clone(),
                found: sol.lambda.clone(),
                distance: d.unwrap_or(f64::INFINITY),
                residual: sol.residual,
                certificate: TrialCertificate::Neutral(sol),
                recheck,
            });
        }
    }
    report.finish();
    Ok(report)
}

/// From a neutral parameter, Misiurewicz sweeps restricted to shrinking
/// balls around it. Empty sweeps are reported as misses.
pub fn experiment_neutral_to_prerep(
    family: &Family,
    solution: &NeutralSolution,
    spec: &NeutralTargetSpec,
    cfg: &ExperimentConfig,
    tol: &Tolerances,
) -> Result<DensityExperimentReport> {
    spec.validate(Some(family))?;
    let k = spec.k();
    let center = solution.lambda.clone();
    let mut report = DensityExperimentReport::new("neutral_to_prerep", family, spec, center.clone());
    let m = family.param_dim();
    for (ri, &r) in cfg.radii.iter().enumerate() {
        // the box of half-width r/√(2m) lies inside the r-ball
        let sweep = SweepConfig {
            window: ParamBox {
                center: center.clone(),
                half_width: r / (2.0 * m as f64).sqrt(),
            },
            k,
            max_preperiod: cfg.max_preperiod,
            max_period: cfg.max_period,
            n_seeds: cfg.n_seeds,
            seed: cell_seed(cfg.seed, ri as u64),
            escape_guided: true,
        };
        let certs: Vec<MisiurewiczCertificate> = multi_misiurewicz_sweep(family, &sweep, &tol.misiurewicz)?
            .into_iter()
            .filter(|c| c.jacobian_rank == k && distance(&c.lambda, &center) <= r)
            .collect();
        let successes = certs.len();
        let best = certs
            .into_iter()
            .min_by(|a, b| distance(&a.lambda, &center).total_cmp(&distance(&b.lambda, &center)));
        let d = best.as_ref().map(|c| distance(&c.lambda, &center));
        report.shrink_curve.push(ShrinkPoint {
            radius: r,
            attempts: cfg.n_seeds,
            successes,
            distance: d,
        });
        if let Some(cert) = best {
            let recheck = cert.check(family, &tol.misiurewicz)?;
            report.trials.push(Trial {
                radius: r,
                start: center.clone(),
                found: cert.lambda.clone(),
                distance: d.unwrap_or(f64::INFINITY),
                residual: cert.residual,
                certificate: TrialCertificate::Misiurewicz(cert),
                recheck,
            });
        }
    }
    report.finish();
    Ok(report)
}

// ---------------------------------------------------------------------------
// stratification

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StratificationConfig {
    /// Ball centers per axis of the window.
    pub resolution: usize,
    /// Density lattice per axis inside a candidate ball.
    pub density_resolution: usize,
    pub depth: usize,
    pub activity_depth: usize,
    /// Passive mass must be at most this fraction of the active mass.
    pub ratio: f64,
}

impl Default for StratificationConfig {
    fn default() -> Self {
        StratificationConfig {
            resolution: 16,
            density_resolution: 64,
            depth: 200,
            activity_depth: 200,
            ratio: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallProbe {
    pub center: (f64, f64),
    pub radius: f64,
    pub verdicts: Vec<ActivityVerdict>,
    /// `T_c` mass of each critical point over the ball's square.
    pub masses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratificationReport {
    pub family: String,
    pub chart: String,
    pub window: GridBox,
    pub found: Option<BallProbe>,
    pub active: Option<usize>,
    /// Status counts `[active, passive, undecided]` per critical point.
    pub evidence: Vec<[usize; 3]>,
    pub candidates_tested: usize,
}

impl StratificationReport {
    pub fn summary(&self) -> String {
        let mut s = format!("stratification ({}, {})\n", self.family, self.chart);
        for (i, e) in self.evidence.iter().enumerate() {
            s.push_str(&format!("  c{i}: active {} passive {} undecided {}\n", e[0], e[1], e[2]));
        }
        match (&self.found, self.active) {
            (Some(b), Some(a)) => s.push_str(&format!(
                "  ball at ({:.6}, {:.6}) radius {:.3e}: c{a} active, masses {:?}\n",
                b.center.0, b.center.1, b.radius, b.masses
            )),
            _ => s.push_str(&format!("  no qualifying ball among {} candidates\n", self.candidates_tested)),
        }
        s
    }
}

/// Scans a chart window for a ball where exactly one critical point is
/// active and the bifurcation-current mass of the passive ones is
/// negligible against it.
///
/// Returns [`Error::NotFound`] carrying the summary of the scanned evidence
/// when no ball qualifies.
pub fn experiment_stratification(
    family: &Family,
    chart: &Chart,
    window: GridBox,
    cfg: &StratificationConfig,
    tol: &CurrentsTol,
) -> Result<StratificationReport> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    let q = family.num_critical();
    let mut report = StratificationReport {
        family: family.descriptor(),
        chart: chart.describe(),
        window,
        found: None,
        active: None,
        evidence: vec![[0; 3]; q],
        candidates_tested: 0,
    };
    if window.is_degenerate() || cfg.resolution == 0 {
        return Err(Error::NotFound(report.summary()));
    }
    let lattice = Lattice::new(window, cfg.resolution, cfg.resolution)?;
    let radius = 0.5 * lattice.hx().min(lattice.hy());
    let dir = chart.ex.clone();
    let cells: Vec<(usize, usize)> = (0..lattice.ny).flat_map(|j| (0..lattice.nx).map(move |i| (i, j))).collect();
    let verdicts: Result<Vec<Vec<ActivityVerdict>>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let lam = chart.at(lattice.x(i), lattice.y(j));
            (0..q)
                .map(|c| activity_test(family, c, &lam, &dir, radius, cfg.activity_depth, tol))
                .collect()
        })
        .collect();
    let verdicts = verdicts?;
    for v in &verdicts {
        for (c, vc) in v.iter().enumerate() {
            let slot = match vc.status {
                Activity::Active => 0,
                Activity::Passive => 1,
                Activity::Undecided => 2,
            };
            report.evidence[c][slot] += 1;
        }
    }
    for (&(i, j), v) in cells.iter().zip(&verdicts) {
        let active: Vec<usize> = (0..q).filter(|&c| v[c].status == Activity::Active).collect();
        let passive = v.iter().filter(|x| x.status == Activity::Passive).count();
        if active.len() != 1 || passive != q - 1 {
            continue;
        }
        report.candidates_tested += 1;
        let (x, y) = (lattice.x(i), lattice.y(j));
        let ball = Lattice::new(GridBox::centered(x, y, radius), cfg.density_resolution, cfg.density_resolution)?;
        let masses: Result<Vec<f64>> = (0..q)
            .map(|c| bif_density(family, c, chart, ball, cfg.depth, tol).map(|d| d.positive_mass()))
            .collect();
        let masses = masses?;
        let a = active[0];
        let passive_ok = (0..q).filter(|&c| c != a).all(|c| masses[c] <= cfg.ratio * masses[a]);
        if masses[a] > 0.0 && passive_ok {
            report.found = Some(BallProbe {
                center: (x, y),
                radius,
                verdicts: v.clone(),
                masses,
            });
            report.active = Some(a);
            return Ok(report);
        }
    }
    Err(Error::NotFound(report.summary()))
}
