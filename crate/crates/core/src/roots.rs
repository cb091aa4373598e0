//! Simultaneous root finding (Aberth–Ehrlich) for polynomials given only
//! through their Newton ratio `p/p'`.
//!
//! Working from the ratio lets the solver handle `f^{∘n}(z) − z` and
//! `f_ζ^{∘q}(0)` by iteration instead of expanding them into monomials,
//! which is badly conditioned at high degree.

use crate::error::{Error, Result};
use crate::family::{horner2, C64};

#[derive(Clone, Debug)]
pub struct AberthOutcome {
    pub roots: Vec<C64>,
    /// Size of the last correction applied to each root.
    pub last_step: Vec<f64>,
    pub converged: Vec<bool>,
    pub iterations: usize,
}

impl AberthOutcome {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Runs Aberth–Ehrlich iteration for a degree-`degree` polynomial with all
/// roots inside `|z| ≤ radius`. `ratio(z)` must return `p(z)/p'(z)`.
pub fn aberth<F: Fn(C64) -> C64>(
    degree: usize,
    ratio: F,
    radius: f64,
    max_iter: usize,
    tol: f64,
) -> AberthOutcome {
    let n = degree;
    let mut roots: Vec<C64> = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * (k as f64 + 0.25) / n as f64 + 0.4;
            // slight radial jitter breaks the symmetry of real polynomials
            let r = radius * (1.0 + 0.01 * ((k * 7919) % 13) as f64 / 13.0);
            C64::from_polar(r, t)
        })
        .collect();
    let mut converged = vec![false; n];
    let mut last_step = vec![f64::INFINITY; n];
    let mut iterations = 0;
    while iterations < max_iter && !converged.iter().all(|&c| c) {
        iterations += 1;
        for k in 0..n {
            if converged[k] {
                continue;
            }
            let zk = roots[k];
            let nr = ratio(zk);
            if !(nr.re.is_finite() && nr.im.is_finite()) {
                // exact root or overflow; leave the point in place
                last_step[k] = 0.0;
                converged[k] = true;
                continue;
            }
            let mut s = C64::new(0.0, 0.0);
            for (j, &zj) in roots.iter().enumerate() {
                if j != k {
                    let diff = zk - zj;
                    if diff.norm_sqr() > 0.0 {
                        s += diff.inv();
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - nr * s;
            let w = if denom.norm() > 1e-300 { nr / denom } else { nr };
            let w = if w.re.is_finite() && w.im.is_finite() { w } else { nr };
            roots[k] = zk - w;
            last_step[k] = w.norm();
            if w.norm() <= tol * (1.0 + roots[k].norm()) {
                converged[k] = true;
            }
        }
    }
    AberthOutcome {
        roots,
        last_step,
        converged,
        iterations,
    }
}

/// Roots of `Σ coeffs[j] z^j`.
pub fn poly_roots(coeffs: &[C64], max_iter: usize, tol: f64) -> Result<Vec<C64>> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().map_or(false, |x| x.norm() == 0.0) {
        c.pop();
    }
    let degree = c.len() - 1;
    if degree == 0 {
        return Ok(vec![]);
    }
    let lead = c[degree].norm();
    // Fujiwara-style bound on root moduli
    let radius = c[..degree]
        .iter()
        .enumerate()
        .map(|(j, a)| 2.0 * (a.norm() / lead).powf(1.0 / (degree - j) as f64))
        .fold(1e-3, f64::max);
    let out = aberth(
        degree,
        |z| {
            let (p, dp) = horner2(&c, z);
            p / dp
        },
        radius * 0.5,
        max_iter,
        tol,
    );
    accept(out, 1e-7)
}

/// Accepts an outcome when every root has converged or its last correction
/// is below `loose` (clusters at multiple roots converge only linearly).
pub fn accept(out: AberthOutcome, loose: f64) -> Result<Vec<C64>> {
    let bad = out
        .roots
        .iter()
        .zip(&out.converged)
        .zip(&out.last_step)
        .filter(|((z, &c), &s)| !c && s > loose * (1.0 + z.norm()))
        .count();
    if bad > 0 {
        return Err(Error::RootSolveFailure {
            converged: out.roots.len() - bad,
            degree: out.roots.len(),
        });
    }
    Ok(out.roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_unity() {
        let mut c = vec![C64::new(0.0, 0.0); 9];
        c[0] = C64::new(-1.0, 0.0);
        c[8] = C64::new(1.0, 0.0);
        let mut r = poly_roots(&c, 500, 1e-14).unwrap();
        r.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        for z in &r {
            assert!((z.powu(8) - 1.0).norm() < 1e-12);
        }
        for w in r.windows(2) {
            assert!((w[0] - w[1]).norm() > 0.5);
        }
    }

    #[test]
    fn double_root_is_accepted() {
        // (z - 1)^2 (z + 2)
        let c = vec![
            C64::new(2.0, 0.0),
            C64::new(-3.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        let r = poly_roots(&c, 500, 1e-14).unwrap();
        assert_eq!(r.iter().filter(|z| (*z - 1.0).norm() < 1e-6).count(), 2);
        assert_eq!(r.iter().filter(|z| (*z + 2.0).norm() < 1e-10).count(), 1);
    }
}
