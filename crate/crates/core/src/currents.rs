//! Activity tests, densities of the bifurcation currents `T_c = dd^c g_c`
//! and mixed Monge–Ampère (wedge) densities on 2-complex-dimensional charts.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{horner, Family, C64};
use crate::grid::{Bitmap, Chart, GridField, Lattice};
use crate::jet::critical_jet;
use crate::potential::{bailout_for, fubini_study_potential, green_coeffs};
use crate::tolerances::{CurrentsTol, PotentialTol};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activity {
    Active,
    Passive,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityVerdict {
    pub status: Activity,
    /// `log10` of the largest critical-orbit parameter derivative seen on
    /// bounded samples.
    pub evidence: f64,
    pub radius: f64,
    pub escaped: usize,
    pub bounded: usize,
}

/// Probes the disk `λ0 + t·direction`, `|t| ≤ radius`, on a polar sample.
pub fn activity_test(
    family: &Family,
    critical: usize,
    lambda0: &[C64],
    direction: &[C64],
    radius: f64,
    depth: usize,
    tol: &CurrentsTol,
) -> Result<ActivityVerdict> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    let mut samples = vec![C64::new(0.0, 0.0)];
    for r in 1..=tol.probe_rings {
        let rho = radius * r as f64 / tol.probe_rings as f64;
        for s in 0..tol.probe_spokes {
            // rotate alternate rings to avoid aligned spokes
            let t = (s as f64 + 0.5 * (r % 2) as f64) / tol.probe_spokes as f64;
            samples.push(C64::from_polar(rho, std::f64::consts::TAU * t));
        }
    }
    let mut escaped = 0;
    let mut bounded = 0;
    let mut max_deriv: f64 = 0.0;
    for t in samples {
        let lam: Vec<C64> = lambda0.iter().zip(direction).map(|(l, v)| l + v * t).collect();
        let map = family.map_at(&lam)?;
        let dir = map.direction(direction);
        let r_esc = map.escape_radius();
        let mut z = map.critical[critical];
        let mut dz = dir.critical[critical];
        let mut esc = false;
        for _ in 0..depth {
            dz = map.deriv(z) * dz + dir.eval(z);
            z = map.eval(z);
            if !(z.norm() <= r_esc) {
                esc = true;
                break;
            }
            max_deriv = max_deriv.max(dz.norm());
        }
        if esc {
            escaped += 1;
        } else {
            bounded += 1;
        }
    }
    let status = if (escaped > 0 && bounded > 0) || max_deriv > tol.active_derivative {
        Activity::Active
    } else if bounded == 0 || max_deriv < tol.passive_derivative {
        Activity::Passive
    } else {
        Activity::Undecided
    };
    Ok(ActivityVerdict {
        status,
        evidence: max_deriv.max(1e-300).log10(),
        radius,
        escaped,
        bounded,
    })
}

/// Critical-orbit potential used to build densities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialKind {
    /// `lim d^{-n} log⁺|f^n(c)|`, truncated at `depth`.
    Green { depth: usize },
    /// `d^{-n} · ½ log(1 + |f^n(c)|²)` at fixed `depth`: the potential of
    /// the pulled-back Fubini–Study form, smooth in the parameter.
    FubiniStudy { depth: usize },
}

/// Evaluates critical potentials at one parameter, reusing buffers.
pub struct PotentialProbe<'a> {
    family: &'a Family,
    kind: PotentialKind,
    coeffs: Vec<C64>,
    critical: Vec<C64>,
}

impl<'a> PotentialProbe<'a> {
    pub fn new(family: &'a Family, kind: PotentialKind) -> Self {
        PotentialProbe {
            family,
            kind,
            coeffs: Vec::new(),
            critical: Vec::new(),
        }
    }

    /// Potentials of the requested critical points at `lambda`.
    pub fn eval(&mut self, lambda: &[C64], criticals: &[usize], out: &mut [f64]) -> Result<()> {
        self.family.coefficients_into(lambda, &mut self.coeffs, &mut self.critical)?;
        let bailout = bailout_for(&self.coeffs, PotentialTol::default().green_bailout);
        for (o, &i) in out.iter_mut().zip(criticals) {
            let c = self.critical[i];
            *o = match self.kind {
                PotentialKind::Green { depth } => green_coeffs(&self.coeffs, c, depth, bailout).value,
                PotentialKind::FubiniStudy { depth } => fubini_study_potential(&self.coeffs, c, depth, bailout),
            };
        }
        Ok(())
    }
}

/// Potential of critical point `critical` over a chart lattice.
pub fn potential_grid(
    family: &Family,
    critical: usize,
    chart: &Chart,
    lattice: Lattice,
    kind: PotentialKind,
) -> Result<GridField> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    let rows: Result<Vec<Vec<f64>>> = (0..lattice.ny)
        .into_par_iter()
        .map(|j| {
            let mut probe = PotentialProbe::new(family, kind);
            let mut row = vec![0.0; lattice.nx];
            let mut v = [0.0];
            for (i, r) in row.iter_mut().enumerate() {
                probe.eval(&chart.at(lattice.x(i), lattice.y(j)), &[critical], &mut v)?;
                *r = v[0];
            }
            Ok(row)
        })
        .collect();
    let mut g = GridField {
        lattice,
        values: rows?.concat(),
        meta: Default::default(),
    };
    g.set_meta("quantity", "critical potential");
    g.set_meta("critical", critical);
    g.set_meta("potential", kind);
    g.set_meta("family", family.descriptor());
    g.set_meta("chart", chart.describe());
    Ok(g)
}

/// A density field with its clamping diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub field: GridField,
    /// Cells whose raw density was below `-negative_clamp · max`.
    pub negative_count: usize,
    /// Clamping level actually applied.
    pub clamp: f64,
}

impl DensityField {
    pub fn mass(&self) -> f64 {
        self.field.mass()
    }

    pub fn positive_mass(&self) -> f64 {
        self.field.values.iter().filter(|&&v| v > 0.0).fold(0.0, |a, v| a + v) * self.field.cell_area()
    }
}

fn clamp_field(mut field: GridField, rel: f64) -> DensityField {
    let max = field.max().max(0.0);
    let clamp = rel * max;
    let mut negative_count = 0;
    for v in field.values.iter_mut() {
        if *v < -clamp {
            negative_count += 1;
            *v = -clamp;
        }
    }
    field.set_meta("negative_count", negative_count);
    field.set_meta("clamp", clamp);
    DensityField {
        field,
        negative_count,
        clamp,
    }
}

/// `Δu / 2π` by the 5-point stencil (the density of `dd^c u` against
/// Lebesgue measure); frame cells are zero.
pub fn laplacian_density(u: &GridField, tol: &CurrentsTol) -> DensityField {
    let lat = u.lattice;
    let (hx2, hy2) = (lat.hx().powi(2), lat.hy().powi(2));
    let (nx, ny) = (lat.nx, lat.ny);
    let mut f = GridField::from_fn(lat, |i, j| {
        if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
            return 0.0;
        }
        let c = u.get(i, j);
        let lx = (u.get(i + 1, j) + u.get(i - 1, j) - 2.0 * c) / hx2;
        let ly = (u.get(i, j + 1) + u.get(i, j - 1) - 2.0 * c) / hy2;
        (lx + ly) / (2.0 * PI)
    });
    f.meta = u.meta.clone();
    f.set_meta("quantity", "dd^c density");
    clamp_field(f, tol.negative_clamp)
}

/// Density of `T_c` for marked critical point `critical` over a chart.
pub fn bif_density(
    family: &Family,
    critical: usize,
    chart: &Chart,
    lattice: Lattice,
    depth: usize,
    tol: &CurrentsTol,
) -> Result<DensityField> {
    let u = potential_grid(family, critical, chart, lattice, PotentialKind::Green { depth })?;
    Ok(laplacian_density(&u, tol))
}

/// Escape-time rendering of a critical orbit over a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeRender {
    /// Escape step, or `max_iter` for bounded orbits.
    pub counts: GridField,
    pub members: Bitmap,
    /// Escaping cells whose distance estimate to the bounded set is below
    /// half a cell: filaments too thin to contain a member cell centre.
    pub thin: Bitmap,
}

impl EscapeRender {
    /// Member cells adjacent to escaping cells, together with thin cells.
    pub fn boundary(&self) -> Bitmap {
        self.members.boundary().union(&self.thin)
    }
}

/// Iterates critical point `critical` at each cell; the distance estimate
/// `|F| log|F| / |∂F/∂x|` uses the derivative along the chart's `x` axis.
pub fn escape_render(
    family: &Family,
    critical: usize,
    chart: &Chart,
    lattice: Lattice,
    max_iter: usize,
) -> Result<EscapeRender> {
    if !family.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    let half_cell = 0.5 * lattice.hx().min(lattice.hy());
    let rows: Result<Vec<Vec<(f64, bool, bool)>>> = (0..lattice.ny)
        .into_par_iter()
        .map(|j| {
            (0..lattice.nx)
                .map(|i| {
                    let lam = chart.at(lattice.x(i), lattice.y(j));
                    let map = family.map_at(&lam)?;
                    let dir = map.direction(&chart.ex);
                    let r_esc = map.escape_radius();
                    let mut z = map.critical[critical];
                    let mut dz = dir.critical[critical];
                    for n in 0..max_iter {
                        dz = map.deriv(z) * dz + dir.eval(z);
                        z = map.eval(z);
                        let r = z.norm();
                        if !(r <= r_esc) {
                            let dist = r * r.ln() / dz.norm();
                            return Ok(((n + 1) as f64, false, dist < half_cell));
                        }
                    }
                    Ok((max_iter as f64, true, false))
                })
                .collect()
        })
        .collect();
    let cells: Vec<(f64, bool, bool)> = rows?.concat();
    let mut counts = GridField {
        lattice,
        values: cells.iter().map(|c| c.0).collect(),
        meta: Default::default(),
    };
    counts.set_meta("quantity", "escape time");
    counts.set_meta("max_iter", max_iter);
    counts.set_meta("family", family.descriptor());
    counts.set_meta("chart", chart.describe());
    Ok(EscapeRender {
        counts,
        members: Bitmap {
            lattice,
            bits: cells.iter().map(|c| c.1).collect(),
        },
        thin: Bitmap {
            lattice,
            bits: cells.iter().map(|c| c.2).collect(),
        },
    })
}

/// Node-centred axis `start + k·step`, `k < n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl Axis {
    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }
}

/// Chart of a 2-parameter family by real coordinates
/// `(Re λ_0, Im λ_0, Re λ_1, Im λ_1)` around `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart4 {
    pub origin: [C64; 2],
    pub axes: [Axis; 4],
}

impl Chart4 {
    /// Cube of half-width `half` with `n` nodes per axis centred at `center`.
    pub fn cube(center: [C64; 2], half: f64, n: usize) -> Result<Self> {
        if n < 3 || !(half > 0.0) {
            return Err(Error::InvalidSpec("4-d chart needs n ≥ 3 and positive width".into()));
        }
        let step = 2.0 * half / (n - 1) as f64;
        let axis = Axis { start: -half, step, n };
        Ok(Chart4 {
            origin: center,
            axes: [axis; 4],
        })
    }

    pub fn point(&self, idx: [usize; 4]) -> [C64; 2] {
        let x: Vec<f64> = (0..4).map(|k| self.axes[k].at(idx[k])).collect();
        [
            self.origin[0] + C64::new(x[0], x[1]),
            self.origin[1] + C64::new(x[2], x[3]),
        ]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, idx: [usize; 4]) -> usize {
        ((idx[3] * self.axes[2].n + idx[2]) * self.axes[1].n + idx[1]) * self.axes[0].n + idx[0]
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step).product()
    }
}

/// Scalar field on a [`Chart4`], first axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid4 {
    pub chart: Chart4,
    pub values: Vec<f64>,
}

impl Grid4 {
    pub fn get(&self, idx: [usize; 4]) -> f64 {
        self.values[self.chart.index(idx)]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.chart.cell_volume()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Potential of critical point `critical` on every node of a 4-d chart.
pub fn potential_grid4(family: &Family, critical: usize, chart: &Chart4, kind: PotentialKind) -> Result<Grid4> {
    if family.param_dim() != 2 {
        return Err(Error::InvalidSpec("4-d charts need a 2-parameter family".into()));
    }
    let [a0, a1, a2, a3] = chart.axes;
    let slabs: Result<Vec<Vec<f64>>> = (0..a3.n)
        .into_par_iter()
        .map(|l| {
            let mut probe = PotentialProbe::new(family, kind);
            let mut out = Vec::with_capacity(a0.n * a1.n * a2.n);
            let mut v = [0.0];
            for k in 0..a2.n {
                for j in 0..a1.n {
                    for i in 0..a0.n {
                        probe.eval(&chart.point([i, j, k, l]), &[critical], &mut v)?;
                        out.push(v[0]);
                    }
                }
            }
            Ok(out)
        })
        .collect();
    Ok(Grid4 {
        chart: chart.clone(),
        values: slabs?.concat(),
    })
}

/// Complex Hessian `(u_{11̄}, u_{22̄}, u_{12̄})` from central differences;
/// `at(di)` returns the value at the offset `di` from the stencil centre.
#[inline]
fn complex_hessian<F: Fn([isize; 4]) -> f64>(at: F, h: [f64; 4]) -> (f64, f64, C64) {
    let c = at([0, 0, 0, 0]);
    let second = |k: usize| {
        let mut p = [0isize; 4];
        p[k] = 1;
        let mut m = [0isize; 4];
        m[k] = -1;
        (at(p) + at(m) - 2.0 * c) / (h[k] * h[k])
    };
    let mixed = |a: usize, b: usize| {
        let off = |sa: isize, sb: isize| {
            let mut p = [0isize; 4];
            p[a] = sa;
            p[b] = sb;
            at(p)
        };
        (off(1, 1) - off(1, -1) - off(-1, 1) + off(-1, -1)) / (4.0 * h[a] * h[b])
    };
    // axes: 0 = x1, 1 = y1, 2 = x2, 3 = y2
    let u11 = 0.25 * (second(0) + second(1));
    let u22 = 0.25 * (second(2) + second(3));
    let u12 = C64::new(
        0.25 * (mixed(0, 2) + mixed(1, 3)),
        0.25 * (mixed(0, 3) - mixed(1, 2)),
    );
    (u11, u22, u12)
}

/// Density of `dd^c u ∧ dd^c v` against Lebesgue measure on `C²`:
/// `(4/π²)(u_{11̄}v_{22̄} + u_{22̄}v_{11̄} − 2 Re(u_{12̄} \bar v_{12̄}))`.
#[inline]
pub fn mixed_density(u: (f64, f64, C64), v: (f64, f64, C64)) -> f64 {
    let s = u.0 * v.1 + u.1 * v.0 - 2.0 * (u.2 * v.2.conj()).re;
    4.0 / (PI * PI) * s
}

/// Pointwise wedge density on interior nodes; frame nodes are zero.
pub fn wedge_density(u: &Grid4, v: &Grid4, tol: &CurrentsTol) -> Result<(Grid4, usize)> {
    if u.chart != v.chart || u.values.len() != v.values.len() {
        return Err(Error::GridMismatch("wedge operands use different 4-d samplings".into()));
    }
    let ch = &u.chart;
    let n = [ch.axes[0].n, ch.axes[1].n, ch.axes[2].n, ch.axes[3].n];
    let h = [ch.axes[0].step, ch.axes[1].step, ch.axes[2].step, ch.axes[3].step];
    let mut out = vec![0.0; u.values.len()];
    out.par_chunks_mut(n[0] * n[1] * n[2]).enumerate().for_each(|(l, slab)| {
        if l == 0 || l + 1 == n[3] {
            return;
        }
        for k in 1..n[2] - 1 {
            for j in 1..n[1] - 1 {
                for i in 1..n[0] - 1 {
                    let base = [i as isize, j as isize, k as isize, l as isize];
                    let shift = |d: [isize; 4]| {
                        [
                            (base[0] + d[0]) as usize,
                            (base[1] + d[1]) as usize,
                            (base[2] + d[2]) as usize,
                            (base[3] + d[3]) as usize,
                        ]
                    };
                    let hu = complex_hessian(|d| u.get(shift(d)), h);
                    let hv = complex_hessian(|d| v.get(shift(d)), h);
                    slab[(k * n[1] + j) * n[0] + i] = mixed_density(hu, hv);
                }
            }
        }
    });
    let max = out.iter().cloned().fold(0.0f64, f64::max);
    let clamp = tol.negative_clamp * max;
    let mut negatives = 0;
    for x in out.iter_mut() {
        if *x < -clamp {
            negatives += 1;
            *x = -clamp;
        }
    }
    Ok((
        Grid4 {
            chart: ch.clone(),
            values: out,
        },
        negatives,
    ))
}

/// Masses of a streamed wedge computation for one pair of critical points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMass {
    pub i: usize,
    pub j: usize,
    /// `Σ max(density, 0) · cell volume`.
    pub positive_mass: f64,
    /// `Σ max(−density, 0) · cell volume`.
    pub negative_mass: f64,
    pub negative_cells: usize,
    pub max_density: f64,
    /// Positive mass inside each probe ball.
    pub probe_masses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeReport {
    pub chart: Chart4,
    pub potential: PotentialKind,
    pub pairs: Vec<PairMass>,
    pub probe_centers: Vec<[C64; 2]>,
    pub probe_radius: f64,
}

impl WedgeReport {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairMass> {
        self.pairs
            .iter()
            .find(|p| (p.i, p.j) == (i, j) || (p.i, p.j) == (j, i))
    }
}

/// Wedge masses on a 4-d chart too large to hold in memory: potentials are
/// generated one `Im λ_1` slab at a time and only three slabs are kept.
pub fn wedge_masses(
    family: &Family,
    chart: &Chart4,
    kind: PotentialKind,
    pairs: &[(usize, usize)],
    probe_centers: &[[C64; 2]],
    probe_radius: f64,
) -> Result<WedgeReport> {
    if family.param_dim() != 2 {
        return Err(Error::InvalidSpec("4-d charts need a 2-parameter family".into()));
    }
    let mut crits: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    crits.sort_unstable();
    crits.dedup();
    let nc = crits.len();
    let slot = |c: usize| crits.iter().position(|&x| x == c).unwrap();
    let n = [chart.axes[0].n, chart.axes[1].n, chart.axes[2].n, chart.axes[3].n];
    let h = [chart.axes[0].step, chart.axes[1].step, chart.axes[2].step, chart.axes[3].step];
    let slab_len = n[0] * n[1] * n[2];
    let vol = chart.cell_volume();

    // slab l: values[(c * n2 + k) * n1 + j) * n0 + i]
    let make_slab = |l: usize| -> Result<Vec<f64>> {
        let planes: Result<Vec<Vec<f64>>> = (0..n[2])
            .into_par_iter()
            .map(|k| {
                let mut probe = PotentialProbe::new(family, kind);
                let mut v = vec![0.0; nc];
                let mut out = vec![0.0; nc * n[0] * n[1]];
                for j in 0..n[1] {
                    for i in 0..n[0] {
                        probe.eval(&chart.point([i, j, k, l]), &crits, &mut v)?;
                        for c in 0..nc {
                            out[(c * n[1] + j) * n[0] + i] = v[c];
                        }
                    }
                }
                Ok(out)
            })
            .collect();
        let planes = planes?;
        let mut slab = vec![0.0; nc * slab_len];
        for (k, p) in planes.iter().enumerate() {
            for c in 0..nc {
                let dst = (c * n[2] + k) * n[1] * n[0];
                slab[dst..dst + n[0] * n[1]].copy_from_slice(&p[c * n[0] * n[1]..(c + 1) * n[0] * n[1]]);
            }
        }
        Ok(slab)
    };

    let np = pairs.len();
    let mut acc = vec![(0.0f64, 0.0f64, 0usize, 0.0f64); np];
    let mut probes = vec![vec![0.0f64; probe_centers.len()]; np];
    let mut ring: Vec<Vec<f64>> = vec![make_slab(0)?, make_slab(1)?];
    for l in 1..n[3] - 1 {
        ring.push(make_slab(l + 1)?);
        let (s_m, s_0, s_p) = (&ring[0], &ring[1], &ring[2]);
        // per-k partial sums, reduced in k order for determinism
        let partial: Vec<(Vec<(f64, f64, usize, f64)>, Vec<Vec<f64>>)> = (1..n[2] - 1)
            .into_par_iter()
            .map(|k| {
                let mut a = vec![(0.0f64, 0.0f64, 0usize, 0.0f64); np];
                let mut pm = vec![vec![0.0; probe_centers.len()]; np];
                for j in 1..n[1] - 1 {
                    for i in 1..n[0] - 1 {
                        let value = |c: usize, d: [isize; 4]| {
                            let s = match d[3] {
                                -1 => s_m,
                                0 => s_0,
                                _ => s_p,
                            };
                            let ii = (i as isize + d[0]) as usize;
                            let jj = (j as isize + d[1]) as usize;
                            let kk = (k as isize + d[2]) as usize;
                            s[((c * n[2] + kk) * n[1] + jj) * n[0] + ii]
                        };
                        let hess: Vec<(f64, f64, C64)> =
                            (0..nc).map(|c| complex_hessian(|d| value(c, d), h)).collect();
                        let pt = chart.point([i, j, k, l]);
                        for (p, &(ci, cj)) in pairs.iter().enumerate() {
                            let dens = mixed_density(hess[slot(ci)], hess[slot(cj)]);
                            if dens >= 0.0 {
                                a[p].0 += dens * vol;
                            } else {
                                a[p].1 -= dens * vol;
                                a[p].2 += 1;
                            }
                            a[p].3 = a[p].3.max(dens);
                            if dens > 0.0 {
                                for (q, pc) in probe_centers.iter().enumerate() {
                                    let dist2 = (pt[0] - pc[0]).norm_sqr() + (pt[1] - pc[1]).norm_sqr();
                                    if dist2 <= probe_radius * probe_radius {
                                        pm[p][q] += dens * vol;
                                    }
                                }
                            }
                        }
                    }
                }
                (a, pm)
            })
            .collect();
        for (a, pm) in partial {
            for p in 0..np {
                acc[p].0 += a[p].0;
                acc[p].1 += a[p].1;
                acc[p].2 += a[p].2;
                acc[p].3 = acc[p].3.max(a[p].3);
                for q in 0..probe_centers.len() {
                    probes[p][q] += pm[p][q];
                }
            }
        }
        ring.remove(0);
    }
    Ok(WedgeReport {
        chart: chart.clone(),
        potential: kind,
        pairs: pairs
            .iter()
            .zip(acc)
            .zip(probes)
            .map(|((&(i, j), a), pm)| PairMass {
                i,
                j,
                positive_mass: a.0,
                negative_mass: a.1,
                negative_cells: a.2,
                max_density: a.3,
                probe_masses: pm,
            })
            .collect(),
        probe_centers: probe_centers.to_vec(),
        probe_radius,
    })
}

/// `f^n(c_i)` escape test used by renderers: the step at which the orbit
/// leaves the escape radius, if it does within `max_iter`.
pub fn critical_escape_time(family: &Family, lambda: &[C64], critical: usize, max_iter: usize) -> Result<Option<usize>> {
    let mut coeffs = Vec::new();
    let mut crit = Vec::new();
    family.coefficients_into(lambda, &mut coeffs, &mut crit)?;
    let lead = coeffs[coeffs.len() - 1].norm();
    let r_esc = (2.0 * coeffs.iter().map(|c| c.norm()).sum::<f64>() / lead).max(1e3);
    let mut z = crit[critical];
    for n in 0..max_iter {
        z = horner(&coeffs, z);
        if !(z.norm() <= r_esc) {
            return Ok(Some(n + 1));
        }
    }
    Ok(None)
}

/// Parameter derivative of `f^n(c_i)` along `direction`.
pub fn critical_orbit_derivative(family: &Family, lambda: &[C64], critical: usize, direction: &[C64], n: usize) -> Result<C64> {
    let map = family.map_at(lambda)?;
    let jet = critical_jet(&map, &[map.direction(direction)], critical, n);
    Ok(jet.ds[0])
}

/// Deepest iterate `n ≤ max_depth` whose critical values move by at most
/// `max_cell_change` (chordal) per grid step anywhere on a `5⁴` sample of
/// the chart; deeper potentials carry structure the stencil cannot see.
pub fn resolved_depth(family: &Family, chart: &Chart4, max_depth: usize, max_cell_change: f64) -> Result<usize> {
    if family.param_dim() != 2 {
        return Err(Error::InvalidSpec("4-d charts need a 2-parameter family".into()));
    }
    let h = chart.axes.iter().map(|a| a.step).fold(0.0, f64::max);
    let pick = |a: &Axis, t: usize| ((a.n - 1) * t) / 4;
    let units = [[ONE, ZERO], [ZERO, ONE]];
    let mut worst = vec![0.0f64; max_depth + 1];
    for idx in 0..625usize {
        let t = [idx % 5, (idx / 5) % 5, (idx / 25) % 5, idx / 125];
        let lam = chart.point([
            pick(&chart.axes[0], t[0]),
            pick(&chart.axes[1], t[1]),
            pick(&chart.axes[2], t[2]),
            pick(&chart.axes[3], t[3]),
        ]);
        let map = family.map_at(&lam)?;
        let dirs: Vec<_> = units.iter().map(|u| map.direction(u)).collect();
        for i in 0..family.num_critical() {
            for (n, w) in worst.iter_mut().enumerate().skip(1) {
                let jet = critical_jet(&map, &dirs, i, n);
                if jet.escaped {
                    break;
                }
                let grad = (jet.ds[0].norm_sqr() + jet.ds[1].norm_sqr()).sqrt();
                *w = w.max(grad / (1.0 + jet.z.norm_sqr()));
            }
        }
    }
    let mut depth = 1;
    for (n, &w) in worst.iter().enumerate().skip(1) {
        if h * w > max_cell_change {
            break;
        }
        depth = n;
    }
    Ok(depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridBox;

    fn q0() -> Vec<C64> {
        vec![C64::new(1.0, 0.0)]
    }

    #[test]
    fn activity_examples() {
        let f = Family::quadratic();
        let tol = CurrentsTol::default();
        let v = activity_test(&f, 0, &[C64::new(0.0, 0.0)], &q0(), 0.05, 200, &tol).unwrap();
        assert_eq!(v.status, Activity::Passive);
        let v = activity_test(&f, 0, &[C64::new(-2.0, 0.0)], &q0(), 0.05, 200, &tol).unwrap();
        assert_eq!(v.status, Activity::Active);
        let v = activity_test(&f, 0, &[C64::new(4.0, 0.0)], &q0(), 0.05, 50, &tol).unwrap();
        assert_eq!(v.status, Activity::Passive);
        assert_eq!(v.bounded, 0);
    }

    #[test]
    fn persistently_periodic_critical_point_has_zero_density() {
        // c_1 = 0 is fixed by z^3/3 + a^3 when a = 0; along the c-line with
        // a = 0 the critical point 0 stays fixed.
        let f = Family::cubic();
        let chart = Chart {
            origin: vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            ex: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            ey: vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        };
        let lat = Lattice::new(GridBox::new(-1.0, 1.0, -1.0, 1.0), 16, 16).unwrap();
        let d = bif_density(&f, 0, &chart, lat, 100, &CurrentsTol::default()).unwrap();
        assert!(d.field.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wedge_is_symmetric_and_mismatch_is_detected() {
        let f = Family::cubic();
        let ch = Chart4::cube([C64::new(0.4, 0.3), C64::new(0.5, -0.2)], 0.1, 6).unwrap();
        let kind = PotentialKind::FubiniStudy { depth: 3 };
        let u = potential_grid4(&f, 0, &ch, kind).unwrap();
        let v = potential_grid4(&f, 1, &ch, kind).unwrap();
        let tol = CurrentsTol::default();
        let (a, _) = wedge_density(&u, &v, &tol).unwrap();
        let (b, _) = wedge_density(&v, &u, &tol).unwrap();
        assert_eq!(a, b);
        let other = Chart4::cube([C64::new(0.4, 0.3), C64::new(0.5, -0.2)], 0.2, 6).unwrap();
        let w = potential_grid4(&f, 1, &other, kind).unwrap();
        assert!(matches!(wedge_density(&u, &w, &tol), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn streamed_masses_match_in_memory_wedge() {
        let f = Family::cubic();
        let ch = Chart4::cube([C64::new(0.4, 0.3), C64::new(0.5, -0.2)], 0.1, 7).unwrap();
        let kind = PotentialKind::FubiniStudy { depth: 3 };
        let u = potential_grid4(&f, 0, &ch, kind).unwrap();
        let v = potential_grid4(&f, 1, &ch, kind).unwrap();
        let tol = CurrentsTol { negative_clamp: 0.0, ..CurrentsTol::default() };
        let (w, _) = wedge_density(&u, &v, &tol).unwrap();
        let rep = wedge_masses(&f, &ch, kind, &[(0, 1)], &[], 0.0).unwrap();
        let pm = rep.pair(0, 1).unwrap();
        assert!((w.mass() - pm.positive_mass).abs() <= 1e-9 * pm.positive_mass.abs().max(1e-300));
    }

    #[test]
    fn pluriharmonic_potential_has_no_wedge_density() {
        let ch = Chart4::cube([C64::new(0.1, 0.0), C64::new(-0.2, 0.3)], 0.5, 7).unwrap();
        let unravel = |idx: usize| [idx % 7, (idx / 7) % 7, (idx / 49) % 7, idx / 343];
        let field = |f: &dyn Fn([C64; 2]) -> f64| Grid4 {
            chart: ch.clone(),
            values: (0..ch.len()).map(|idx| f(ch.point(unravel(idx)))).collect(),
        };
        let u = field(&|p| (p[0] * p[0] + p[0] * p[1]).re);
        let v = field(&|p| p[0].norm_sqr() + p[1].norm_sqr());
        let (w, _) = wedge_density(&u, &v, &CurrentsTol::default()).unwrap();
        assert!(w.values.iter().all(|x| x.abs() <= 1e-6));
        // while the wedge of v with itself is the constant 2·(4/π²)·(1·1)
        let (vv, _) = wedge_density(&v, &v, &CurrentsTol::default()).unwrap();
        let interior = vv.get([3, 3, 3, 3]);
        assert!((interior - 8.0 / (PI * PI)).abs() < 1e-9);
    }
}
