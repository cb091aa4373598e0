//! Affine parameter slices, optionally bent by a Newton corrector so that
//! a list of critical-orbit relations keeps holding along the slice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Family, MapDirection, PolyMap, C64};
use crate::jet::critical_jet;
use crate::linalg::{matrix_from_rows, numerical_rank, solve, CVector};

const ZERO: C64 = C64::new(0.0, 0.0);

/// A holomorphic relation on the critical orbit of marked point `critical`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case", deny_unknown_fields)]
pub enum Relation {
    /// `f^{m+p}(c) = f^m(c)`.
    Preperiodic { critical: usize, m: usize, p: usize },
    /// `f^n(c) = c`.
    Periodic { critical: usize, n: usize },
}

impl Relation {
    pub fn critical(&self) -> usize {
        match *self {
            Relation::Preperiodic { critical, .. } | Relation::Periodic { critical, .. } => critical,
        }
    }

    /// Value and directional derivatives along `dirs`.
    pub fn value_and_grad(&self, map: &PolyMap, dirs: &[MapDirection]) -> Result<(C64, Vec<C64>)> {
        match *self {
            Relation::Preperiodic { critical, m, p } => {
                let a = critical_jet(map, dirs, critical, m + p);
                let b = critical_jet(map, dirs, critical, m);
                if a.escaped {
                    return Err(Error::Escape { step: m + p });
                }
                let g = a.ds.iter().zip(&b.ds).map(|(x, y)| x - y).collect();
                Ok((a.z - b.z, g))
            }
            Relation::Periodic { critical, n } => {
                let a = critical_jet(map, dirs, critical, n);
                if a.escaped {
                    return Err(Error::Escape { step: n });
                }
                let g = a.ds.iter().zip(dirs).map(|(x, d)| x - d.critical[critical]).collect();
                Ok((a.z - map.critical[critical], g))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corrector {
    pub relations: Vec<Relation>,
    /// One correction direction per relation; the corrector moves only
    /// within their span.
    pub directions: Vec<Vec<C64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSlice {
    pub base: Vec<C64>,
    pub directions: Vec<Vec<C64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrector: Option<Corrector>,
}

/// A point of a slice with the tangent vectors `∂λ/∂s_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlicePoint {
    pub lambda: Vec<C64>,
    /// Corrector coordinates, reusable as a warm start.
    pub t: Vec<C64>,
    pub tangents: Vec<Vec<C64>>,
}

fn axpy(out: &mut [C64], a: C64, x: &[C64]) {
    for (o, &xi) in out.iter_mut().zip(x) {
        *o += a * xi;
    }
}

impl ParameterSlice {
    pub fn line(base: Vec<C64>, direction: Vec<C64>) -> Self {
        ParameterSlice {
            base,
            directions: vec![direction],
            corrector: None,
        }
    }

    /// The whole parameter space of a 1-parameter family.
    pub fn full_line(family: &Family) -> Self {
        assert_eq!(family.param_dim(), 1);
        Self::line(vec![ZERO], vec![C64::new(1.0, 0.0)])
    }

    /// The whole parameter space, coordinates = parameters.
    pub fn full(family: &Family) -> Self {
        let m = family.param_dim();
        let directions = (0..m)
            .map(|k| (0..m).map(|j| C64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        ParameterSlice {
            base: vec![ZERO; m],
            directions,
            corrector: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn validate(&self, family: &Family) -> Result<()> {
        let m = family.param_dim();
        if self.base.len() != m || self.directions.iter().any(|d| d.len() != m) {
            return Err(Error::InvalidSpec("slice vectors must match the parameter dimension".into()));
        }
        if self.directions.is_empty() || self.directions.len() > m {
            return Err(Error::InvalidSpec("slice needs between 1 and param_dim directions".into()));
        }
        let mut all = self.directions.clone();
        if let Some(c) = &self.corrector {
            if c.relations.len() != c.directions.len() {
                return Err(Error::InvalidSpec("one correction direction per relation".into()));
            }
            if c.directions.iter().any(|d| d.len() != m) {
                return Err(Error::InvalidSpec("correction directions must match the parameter dimension".into()));
            }
            all.extend(c.directions.iter().cloned());
        }
        if all.len() > m || numerical_rank(&matrix_from_rows(&all), 1e-10) < all.len() {
            return Err(Error::InvalidSpec("slice directions are linearly dependent".into()));
        }
        Ok(())
    }

    fn affine(&self, s: &[C64], t: &[C64]) -> Vec<C64> {
        let mut lam = self.base.clone();
        for (k, d) in self.directions.iter().enumerate() {
            axpy(&mut lam, s[k], d);
        }
        if let Some(c) = &self.corrector {
            for (j, d) in c.directions.iter().enumerate() {
                axpy(&mut lam, t[j], d);
            }
        }
        lam
    }

    /// Evaluates the slice at `s`, running the corrector from `t_guess`.
    pub fn point(&self, family: &Family, s: &[C64], t_guess: Option<&[C64]>) -> Result<SlicePoint> {
        let Some(corr) = &self.corrector else {
            return Ok(SlicePoint {
                lambda: self.affine(s, &[]),
                t: vec![],
                tangents: self.directions.clone(),
            });
        };
        let r = corr.relations.len();
        let mut t: Vec<C64> = t_guess.map_or_else(|| vec![ZERO; r], |g| g.to_vec());
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let lam = self.affine(s, &t);
            let map = family.map_at(&lam)?;
            let cdirs: Vec<MapDirection> = corr.directions.iter().map(|d| map.direction(d)).collect();
            let mut vals = Vec::with_capacity(r);
            let mut rows = Vec::with_capacity(r);
            for rel in &corr.relations {
                let (v, g) = rel.value_and_grad(&map, &cdirs)?;
                vals.push(v);
                rows.push(g);
            }
            let res: f64 = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let jt = matrix_from_rows(&rows);
            if res <= 1e-13 || (res <= 1e-11 && res >= 0.5 * last) {
                // converged: tangents from implicit differentiation
                let sdirs: Vec<MapDirection> = self.directions.iter().map(|d| map.direction(d)).collect();
                let mut srows = vec![Vec::with_capacity(self.dim()); r];
                for (j, rel) in corr.relations.iter().enumerate() {
                    srows[j] = rel.value_and_grad(&map, &sdirs)?.1;
                }
                let mut tangents = Vec::with_capacity(self.dim());
                for k in 0..self.dim() {
                    let rhs = CVector::from_iterator(r, srows.iter().map(|row| -row[k]));
                    let dt = solve(&jt, &rhs).ok_or(Error::NoConvergence {
                        residual: res,
                        iterations: 0,
                    })?;
                    let mut tan = self.directions[k].clone();
                    for j in 0..r {
                        axpy(&mut tan, dt[j], &corr.directions[j]);
                    }
                    tangents.push(tan);
                }
                return Ok(SlicePoint { lambda: lam, t, tangents });
            }
            last = res;
            let rhs = CVector::from_iterator(r, vals.iter().map(|v| -v));
            let step = solve(&jt, &rhs).ok_or(Error::NoConvergence {
                residual: res,
                iterations: 0,
            })?;
            // cap the step to keep the corrector local
            let norm = step.norm();
            let scale = if norm > 0.5 { 0.5 / norm } else { 1.0 };
            for j in 0..r {
                t[j] += step[j] * scale;
            }
        }
        Err(Error::NoConvergence {
            residual: last,
            iterations: 60,
        })
    }

    /// Corrector residual at the base point.
    pub fn base_residual(&self, family: &Family) -> Result<f64> {
        let Some(corr) = &self.corrector else {
            return Ok(0.0);
        };
        let map = family.map_at(&self.base)?;
        let mut worst: f64 = 0.0;
        for rel in &corr.relations {
            worst = worst.max(rel.value_and_grad(&map, &[])?.0.norm());
        }
        Ok(worst)
    }
}
