//! Damped Newton iteration for square (or overdetermined) complex systems.

use crate::error::{Error, Result};
use crate::family::C64;
use crate::linalg::{solve, CMatrix, CVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub residual: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    /// Largest step norm accepted in one iteration; longer steps are scaled.
    pub max_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            residual: 1e-10,
            max_iter: 200,
            max_backtracks: 40,
            max_step: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
}

fn sup(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn finite(v: &[C64]) -> bool {
    v.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

/// Minimizes `‖F‖_∞` by Newton steps with halving backtracking.
///
/// `system(x)` returns the residual vector and its Jacobian; evaluation
/// errors (escaping orbits) count as rejected trial points. After the
/// residual target is met, up to two extra steps are taken while they still
/// reduce the residual.
pub fn newton<F>(x0: &[C64], mut system: F, opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: FnMut(&[C64]) -> Result<(Vec<C64>, CMatrix)>,
{
    let mut x = x0.to_vec();
    let (mut fx, mut jac) = system(&x)?;
    let mut res = sup(&fx);
    if !finite(&fx) {
        return Err(Error::NoConvergence {
            residual: f64::INFINITY,
            iterations: 0,
        });
    }
    let mut polish = 0;
    for it in 0..opts.max_iter {
        if res <= opts.residual {
            if polish >= 2 {
                return Ok(NewtonOutcome { x, residual: res, iterations: it });
            }
            polish += 1;
        }
        let rhs = CVector::from_iterator(fx.len(), fx.iter().map(|v| -v));
        let Some(step) = solve(&jac, &rhs) else {
            break;
        };
        let norm = step.norm();
        let mut t = if norm > opts.max_step { opts.max_step / norm } else { 1.0 };
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<C64> = x.iter().zip(step.iter()).map(|(a, b)| a + b * t).collect();
            if let Ok((ft, jt)) = system(&trial) {
                let rt = sup(&ft);
                if finite(&ft) && rt < res * (1.0 - 1e-4 * t) {
                    x = trial;
                    fx = ft;
                    jac = jt;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            if res <= opts.residual {
                return Ok(NewtonOutcome { x, residual: res, iterations: it });
            }
            return Err(Error::NoConvergence {
                residual: res,
                iterations: it,
            });
        }
    }
    if res <= opts.residual {
        return Ok(NewtonOutcome {
            x,
            residual: res,
            iterations: opts.max_iter,
        });
    }
    Err(Error::NoConvergence {
        residual: res,
        iterations: opts.max_iter,
    })
}
