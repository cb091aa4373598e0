//! Green functions, equilibrium-measure sampling and Lyapunov exponents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{horner, Family, PolyMap, C64};
use crate::roots::poly_roots;
use crate::tolerances::PotentialTol;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenEvaluation {
    pub value: f64,
    pub depth: usize,
    pub converged: bool,
}

/// Bailout used for the telescoped Green formula, capped so that one more
/// iterate cannot overflow.
pub fn green_bailout(map: &PolyMap, requested: f64) -> f64 {
    bailout_for(&map.coeffs, requested)
}

pub fn bailout_for(coeffs: &[C64], requested: f64) -> f64 {
    let d = (coeffs.len() - 1) as f64;
    requested.min(10f64.powf(250.0 / d)).max(escape_radius_of(coeffs))
}

fn escape_radius_of(coeffs: &[C64]) -> f64 {
    let lead = coeffs[coeffs.len() - 1].norm();
    let sum: f64 = coeffs.iter().map(|c| c.norm()).sum();
    (2.0 * sum / lead).max(1e3)
}

/// `G(z) = lim d^{-n} log|f^n(z)|` with leading-coefficient normalization.
pub fn green_map(map: &PolyMap, z: C64, max_depth: usize, bailout: f64) -> GreenEvaluation {
    green_coeffs(&map.coeffs, z, max_depth, bailout)
}

/// [`green_map`] on a bare coefficient table.
pub fn green_coeffs(coeffs: &[C64], z: C64, max_depth: usize, bailout: f64) -> GreenEvaluation {
    let d = (coeffs.len() - 1) as f64;
    let correction = coeffs[coeffs.len() - 1].norm().ln() / (d - 1.0);
    let escape = escape_radius_of(coeffs);
    let mut w = z;
    let mut scale = 1.0;
    for n in 0..=max_depth {
        let r = w.norm();
        if r > bailout || !r.is_finite() {
            if !r.is_finite() {
                // overflowed between checks; fall back to the previous depth
                break;
            }
            return GreenEvaluation {
                value: ((r.ln() + correction) * scale).max(0.0),
                depth: n,
                converged: true,
            };
        }
        if n == max_depth {
            if r > escape {
                return GreenEvaluation {
                    value: ((r.ln() + correction) * scale).max(f64::MIN_POSITIVE),
                    depth: n,
                    converged: false,
                };
            }
            break;
        }
        w = horner(coeffs, w);
        scale /= d;
    }
    GreenEvaluation {
        value: 0.0,
        depth: max_depth,
        converged: true,
    }
}

pub fn green(family: &Family, lambda: &[C64], z: C64, max_depth: usize) -> Result<GreenEvaluation> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    let map = family.map_at(lambda)?;
    let bailout = green_bailout(&map, PotentialTol::default().green_bailout);
    Ok(green_map(&map, z, max_depth, bailout))
}

/// `d^{-n} · ½ log(1 + |f^n(z)|²)`: the potential of `d^{-n} (f^n)^* ω_FS`
/// evaluated at a fixed depth. Smooth in the parameter at every depth.
pub fn fubini_study_potential(coeffs: &[C64], z: C64, depth: usize, bailout: f64) -> f64 {
    let d = (coeffs.len() - 1) as f64;
    let log_lead = coeffs[coeffs.len() - 1].norm().ln();
    let mut w = z;
    let mut scale = 1.0;
    for k in 0..depth {
        let r = w.norm();
        if r > bailout {
            // log|z_n| ≈ d^{n-k} log|z_k| + log|a_d| (d^{n-k} - 1)/(d - 1)
            let tail = d.powi((depth - k) as i32);
            let log_n = tail * r.ln() + log_lead * (tail - 1.0) / (d - 1.0);
            return log_n * scale / tail;
        }
        w = horner(coeffs, w);
        scale /= d;
    }
    let r = w.norm();
    let half_log = if r > 1e100 { r.ln() } else { 0.5 * (1.0 + r * r).ln() };
    half_log * scale
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSample {
    pub points: Vec<C64>,
    pub seed: u64,
    pub burn_in: usize,
}

/// All `d` solutions of `f(w) = z`.
fn preimages(map: &PolyMap, z: C64) -> Result<Vec<C64>> {
    if map.degree() == 2 && map.coeffs[1] == C64::new(0.0, 0.0) {
        let w = ((z - map.coeffs[0]) / map.coeffs[2]).sqrt();
        return Ok(vec![w, -w]);
    }
    let mut c = map.coeffs.clone();
    c[0] -= z;
    poly_roots(&c, 400, 1e-14)
}

/// Random backward orbit: each step applies a uniformly chosen inverse branch.
pub fn equilibrium_sample_map(
    map: &PolyMap,
    n_points: usize,
    seed: u64,
    tol: &PotentialTol,
) -> Result<EquilibriumSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    if n_points == 0 {
        return Ok(EquilibriumSample {
            points,
            seed,
            burn_in: tol.burn_in,
        });
    }
    let start_radius = 10.0 * map.filled_julia_bound();
    let mut z = C64::from_polar(start_radius, rng.gen_range(0.0..std::f64::consts::TAU));
    let d = map.degree();
    for step in 0..(tol.burn_in + n_points) {
        let pre = preimages(map, z)?;
        let mut idx = rng.gen_range(0..d);
        for _ in 0..tol.branch_retries {
            // a branch sitting on a critical point makes log|f'| singular
            if map.deriv(pre[idx]).norm() > 1e-12 {
                break;
            }
            idx = rng.gen_range(0..d);
        }
        z = pre[idx];
        if step >= tol.burn_in {
            points.push(z);
        }
    }
    Ok(EquilibriumSample {
        points,
        seed,
        burn_in: tol.burn_in,
    })
}

pub fn equilibrium_sample(
    family: &Family,
    lambda: &[C64],
    n_points: usize,
    seed: u64,
) -> Result<EquilibriumSample> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    let map = family.map_at(lambda)?;
    equilibrium_sample_map(&map, n_points, seed, &PotentialTol::default())
}

/// Monte Carlo Lyapunov exponent with the Green-formula cross-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: Vec<C64>,
    /// Mean of `log|f'|` over the equilibrium sample.
    pub l_mc: f64,
    /// `log d + Σ_c G(c)` over all critical points of `f` (with multiplicity).
    pub l_green: f64,
    /// Batch-means standard error of `l_mc`.
    pub stderr: f64,
    pub n_points: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl LyapunovEstimate {
    /// Agreement of the two estimators in units of the standard error.
    /// An absolute floor of 1e-9 absorbs rounding when the sample has zero
    /// variance (e.g. `z²`, where `log|f'|` is constant on the Julia set).
    pub fn agrees_within(&self, sigmas: f64) -> bool {
        (self.l_mc - self.l_green).abs() <= sigmas * self.stderr + 1e-9
    }
}

/// Batch-means standard error with `⌊√n⌋` batches.
pub fn batch_means_stderr(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 4 {
        return f64::INFINITY;
    }
    let batches = (n as f64).sqrt().floor() as usize;
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// `log d + Σ G(c)` over the roots of `f'`.
pub fn lyapunov_green_formula(map: &PolyMap, tol: &PotentialTol) -> Result<f64> {
    let crit = poly_roots(&map.dcoeffs, 400, 1e-14)?;
    let bailout = green_bailout(map, tol.green_bailout);
    let sum: f64 = crit
        .iter()
        .map(|&c| green_map(map, c, tol.crosscheck_depth, bailout).value)
        .sum();
    Ok((map.degree() as f64).ln() + sum)
}

pub fn lyapunov_with(
    family: &Family,
    lambda: &[C64],
    n_points: usize,
    seed: u64,
    tol: &PotentialTol,
) -> Result<LyapunovEstimate> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    let map = family.map_at(lambda)?;
    let sample = equilibrium_sample_map(&map, n_points, seed, tol)?;
    let logs: Vec<f64> = sample.points.iter().map(|&z| map.deriv(z).norm().ln()).collect();
    let l_mc = if logs.is_empty() {
        f64::NAN
    } else {
        logs.iter().sum::<f64>() / logs.len() as f64
    };
    Ok(LyapunovEstimate {
        lambda: lambda.to_vec(),
        l_mc,
        l_green: lyapunov_green_formula(&map, tol)?,
        stderr: batch_means_stderr(&logs),
        n_points,
        seed,
        burn_in: tol.burn_in,
    })
}

pub fn lyapunov(family: &Family, lambda: &[C64], n_points: usize, seed: u64) -> Result<LyapunovEstimate> {
    lyapunov_with(family, lambda, n_points, seed, &PotentialTol::default())
}

/// Per-cell seed derived from `(seed, cell index)`.
pub fn cell_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut x = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Lyapunov table over many parameters, one RNG stream per parameter.
pub fn lyapunov_table(
    family: &Family,
    lambdas: &[Vec<C64>],
    n_points: usize,
    seed: u64,
) -> Result<Vec<LyapunovEstimate>> {
    lambdas
        .par_iter()
        .enumerate()
        .map(|(i, l)| lyapunov(family, l, n_points, cell_seed(seed, i as u64)))
        .collect()
}

/// CSV with columns `re(λ_k)…, im(λ_k)…, L_mc, L_green, stderr, n_points, seed`.
pub fn lyapunov_csv(rows: &[LyapunovEstimate]) -> String {
    let m = rows.first().map_or(0, |r| r.lambda.len());
    let mut s = String::new();
    for k in 0..m {
        s.push_str(&format!("re_lambda{k},"));
    }
    for k in 0..m {
        s.push_str(&format!("im_lambda{k},"));
    }
    s.push_str("L_mc,L_green,stderr,n_points,seed\n");
    for r in rows {
        for x in &r.lambda {
            s.push_str(&format!("{:e},", x.re));
        }
        for x in &r.lambda {
            s.push_str(&format!("{:e},", x.im));
        }
        s.push_str(&format!(
            "{:e},{:e},{:e},{},{}\n",
            r.l_mc, r.l_green, r.stderr, r.n_points, r.seed
        ));
    }
    s
}

pub fn samples_csv(sample: &EquilibriumSample) -> String {
    let mut s = String::from("re,im\n");
    for z in &sample.points {
        s.push_str(&format!("{:e},{:e}\n", z.re, z.im));
    }
    s
}
