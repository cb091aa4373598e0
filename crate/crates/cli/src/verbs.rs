use std::path::{Path, PathBuf};

use biflab::currents::{activity_test, bif_density, escape_render, Activity};
use biflab::cycles::{continue_per, neutral_seeds, solve_multi_neutral, solve_per, NeutralSolution};
use biflab::experiments::{experiment_neutral_to_prerep, experiment_prerep_to_neutral, experiment_stratification};
use biflab::grid::{Bitmap, GridField, Lattice};
use biflab::misiurewicz::{multi_misiurewicz_sweep, solve_misiurewicz, MisiurewiczCertificate};
use biflab::renorm::{
    baby_mandelbrot, boxdim, find_renorm_window, model_mandelbrot, product_embedding_sample, straightening_check,
};
use biflab::tolerances::Tolerances;
use biflab::{Error, Family, Result, C64};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::artifact::{Artifact, ContinuationArtifact, NeutralArtifact, PerArtifact};
use crate::config::*;

fn point(lambda: &[C64]) -> String {
    let parts: Vec<String> = lambda.iter().map(|z| format!("{:.12}{:+.12}i", z.re, z.im)).collect();
    format!("({})", parts.join(", "))
}

/// Everything a verb needs besides its own parameter block.
pub struct Ctx {
    pub family: Family,
    pub tol: Tolerances,
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Directory of the config file, for relative input paths.
    pub base: PathBuf,
}

impl Ctx {
    pub fn new<P>(cfg: &RunConfig<P>, config_path: &Path, out: Option<PathBuf>) -> Result<Self> {
        let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out = out.unwrap_or_else(|| resolve(&base, &cfg.output));
        std::fs::create_dir_all(&out)?;
        Ok(Ctx {
            family: cfg.family()?,
            tol: cfg.tolerances.clone(),
            seed: cfg.seed,
            out,
            base,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        std::fs::write(self.path(name), serde_json::to_string_pretty(value)? + "\n")?;
        Ok(())
    }

    fn write_artifact<T: Serialize>(&self, name: &str, kind: &str, data: &T) -> Result<()> {
        let a = Artifact::new(kind, &self.family, &self.tol, data)?;
        std::fs::write(self.path(name), a.to_json()?)?;
        Ok(())
    }

    fn seed_or(&self, own: u64) -> u64 {
        self.seed.unwrap_or(own)
    }

    fn certificate(&self, src: &CertificateSource) -> Result<MisiurewiczCertificate> {
        match src {
            CertificateSource::File(p) => {
                let a = Artifact::load(&resolve(&self.base, p))?;
                if a.artifact != "misiurewicz_certificate" {
                    return Err(Error::InvalidSpec(format!("{} holds a {}, not a certificate", p.display(), a.artifact)));
                }
                a.data()
            }
            CertificateSource::Solve(s) => {
                solve_misiurewicz(&self.family, &s.slice(&self.family), &s.constraints, &s.seed, &self.tol.misiurewicz)
            }
            CertificateSource::Sweep { sweep, index } => {
                let mut sweep = sweep.clone();
                sweep.seed = self.seed_or(sweep.seed);
                let certs = multi_misiurewicz_sweep(&self.family, &sweep, &self.tol.misiurewicz)?;
                let found = certs.len();
                certs
                    .into_iter()
                    .nth(*index)
                    .ok_or_else(|| Error::NotFound(format!("sweep found {found} certificates, index {index} requested")))
            }
        }
    }
}

pub fn render(ctx: &Ctx, p: &RenderParams) -> Result<String> {
    p.validate()?;
    let f = &ctx.family;
    let chart = p.chart(f)?;
    if chart.origin.len() != f.param_dim() || p.critical >= f.num_critical() {
        return Err(Error::InvalidSpec("chart dimension or critical index does not match the family".into()));
    }
    let lattice = Lattice::new(p.bbox, p.resolution[0], p.resolution[1])?;
    let png = ctx.path("render.png");
    let (field, note) = match p.quantity {
        Quantity::Escape => {
            let r = escape_render(f, p.critical, &chart, lattice, p.depth)?;
            r.members.write_png(&png)?;
            let note = format!("{} member cells", r.members.count());
            (r.counts, note)
        }
        Quantity::Activity => {
            let radius = 0.5 * lattice.hx().max(lattice.hy());
            let bits: Result<Vec<bool>> = (0..lattice.len())
                .into_par_iter()
                .map(|idx| {
                    let lam = chart.at(lattice.x(idx % lattice.nx), lattice.y(idx / lattice.nx));
                    let v = activity_test(f, p.critical, &lam, &chart.ex, radius, p.depth, &ctx.tol.currents)?;
                    Ok(v.status == Activity::Active)
                })
                .collect();
            let active = Bitmap { lattice, bits: bits? };
            active.write_png(&png)?;
            let note = format!("{} active cells", active.count());
            let mut field = active.to_field();
            field.set_meta("quantity", "activity");
            field.set_meta("depth", p.depth);
            field.set_meta("family", f.descriptor());
            field.set_meta("chart", chart.describe());
            (field, note)
        }
        Quantity::Density => {
            let d = bif_density(f, p.critical, &chart, lattice, p.depth, &ctx.tol.currents)?;
            d.field.write_png(&png, true)?;
            let note = format!("mass {:.6e}, {} clamped cells", d.field.mass(), d.negative_count);
            (d.field, note)
        }
    };
    field.save(&ctx.path("render_grid"))?;
    ctx.write_json("render.json", &json!({ "params": p, "summary": note }))?;
    Ok(format!("render: {note}"))
}

pub fn solve_per_verb(ctx: &Ctx, p: &SolvePerParams) -> Result<String> {
    let sol = solve_per(&ctx.family, &p.slice(&ctx.family), p.n, p.w, p.seed_s, p.seed_z, &ctx.tol.cycles)?;
    let line = format!("solve-per: lambda = {}, multiplier = {:.12}, residual {:.3e}", point(&sol.lambda), sol.cycle.multiplier, sol.residual);
    ctx.write_artifact("per_solution.json", "per_solution", &PerArtifact { n: p.n, w: p.w, solution: sol })?;
    Ok(line)
}

pub fn continue_per_verb(ctx: &Ctx, p: &ContinuePerParams) -> Result<String> {
    let path = continue_per(
        &ctx.family,
        &p.slice(&ctx.family),
        p.n,
        p.theta_a,
        p.theta_b,
        p.steps,
        p.seed_s,
        p.seed_z,
        &ctx.tol.cycles,
    )?;
    let line = format!("continue-per: {} points", path.len());
    ctx.write_artifact("continuation.json", "continuation", &ContinuationArtifact { n: p.n, path })?;
    Ok(line)
}

fn solve_neutral_inner(ctx: &Ctx, p: &SolveNeutralParams) -> Result<NeutralSolution> {
    p.target.validate(Some(&ctx.family))?;
    let slice = p.slice(&ctx.family);
    let seeds = neutral_seeds(&ctx.family, &slice, &p.target, &p.seeds, &ctx.tol.cycles);
    if seeds.is_empty() {
        return Err(Error::NotFound("no usable neutral seeds".into()));
    }
    solve_multi_neutral(&ctx.family, &slice, &p.target, &seeds, &ctx.tol.cycles)
}

pub fn solve_neutral_verb(ctx: &Ctx, p: &SolveNeutralParams) -> Result<String> {
    let sol = solve_neutral_inner(ctx, p)?;
    let line = format!("solve-neutral: lambda = {}, rank {}, residual {:.3e}", point(&sol.lambda), sol.jacobian_rank, sol.residual);
    ctx.write_artifact(
        "neutral_solution.json",
        "neutral_solution",
        &NeutralArtifact {
            target: p.target.clone(),
            solution: sol,
        },
    )?;
    Ok(line)
}

/// Returns the summary line and whether every requested re-check passed.
pub fn find_misiurewicz_verb(ctx: &Ctx, p: &FindMisiurewiczParams, verify: bool) -> Result<(String, bool)> {
    let certs = match p {
        FindMisiurewiczParams::Solve(s) => vec![solve_misiurewicz(
            &ctx.family,
            &s.slice(&ctx.family),
            &s.constraints,
            &s.seed,
            &ctx.tol.misiurewicz,
        )?],
        FindMisiurewiczParams::Sweep(sweep) => {
            let mut sweep = sweep.clone();
            sweep.seed = ctx.seed_or(sweep.seed);
            multi_misiurewicz_sweep(&ctx.family, &sweep, &ctx.tol.misiurewicz)?
        }
    };
    let mut ok = true;
    let mut index = Vec::new();
    for (i, c) in certs.iter().enumerate() {
        let name = format!("certificate_{i:03}.json");
        ctx.write_artifact(&name, "misiurewicz_certificate", c)?;
        let failed = if verify { Some(c.check(&ctx.family, &ctx.tol.misiurewicz)?) } else { None };
        ok &= failed.as_ref().is_none_or(|f| f.is_empty());
        index.push(json!({
            "file": name,
            "lambda": c.lambda,
            "constraints": c.constraints,
            "transversality_det": c.transversality_det,
            "failed_invariants": failed,
        }));
    }
    ctx.write_json("misiurewicz.json", &index)?;
    let mut line = format!("find-misiurewicz: {} certificates", certs.len());
    if verify {
        line.push_str(if ok { ", all re-checks pass" } else { ", re-check FAILED" });
    }
    Ok((line, ok))
}

pub fn find_window_verb(ctx: &Ctx, p: &FindWindowParams) -> Result<String> {
    let cert = ctx.certificate(&p.certificate)?;
    let w = find_renorm_window(&ctx.family, &cert, p.critical, &p.search, &ctx.tol.renorm)?;
    let line = format!(
        "find-window: return time {}, h_sup {:.3e} (delta {}), epsilon_ok {}",
        w.return_time, w.h_sup, w.delta, w.epsilon_ok
    );
    ctx.write_artifact("window.json", "renorm_window", &w)?;
    Ok(line)
}

pub fn baby_mandel_verb(ctx: &Ctx, p: &BabyMandelParams) -> Result<String> {
    if p.resolution == 0 || p.max_iter == 0 {
        return Err(Error::InvalidSpec("resolution and max_iter must be positive".into()));
    }
    let cert = ctx.certificate(&p.certificate)?;
    let w = find_renorm_window(&ctx.family, &cert, p.critical, &p.search, &ctx.tol.renorm)?;
    let baby = baby_mandelbrot(&ctx.family, &w, p.resolution, p.max_iter, &ctx.tol.renorm)?;
    let model = model_mandelbrot(&baby.grid.lattice, w.radius, p.max_iter);
    baby.grid.write_png(&ctx.path("baby.png"))?;
    model.write_png(&ctx.path("model.png"))?;
    let mut field: GridField = baby.grid.to_field();
    field.set_meta("quantity", "baby membership");
    field.set_meta("return_time", w.return_time);
    field.save(&ctx.path("baby_grid"))?;
    let ratio = baby.area_ratio(&model);
    ctx.write_artifact("window.json", "renorm_window", &w)?;
    ctx.write_json(
        "baby.json",
        &json!({
            "return_time": w.return_time,
            "members": baby.grid.count(),
            "model_members": model.count(),
            "area_ratio": ratio,
            "resolution": p.resolution,
            "max_iter": p.max_iter,
        }),
    )?;
    Ok(format!("baby-mandel: return time {}, area ratio {ratio:.4}", w.return_time))
}

pub fn straighten_verb(ctx: &Ctx, p: &StraightenParams) -> Result<(String, bool)> {
    let cert = ctx.certificate(&p.certificate)?;
    let w = find_renorm_window(&ctx.family, &cert, p.critical, &p.search, &ctx.tol.renorm)?;
    let diags: Result<Vec<_>> = p
        .probes
        .iter()
        .map(|q| straightening_check(&ctx.family, &w, q.zeta, q.mode, &ctx.tol.renorm))
        .collect();
    let diags = diags?;
    let passed = diags.iter().filter(|d| d.passed).count();
    ctx.write_artifact("window.json", "renorm_window", &w)?;
    ctx.write_json("straighten.json", &diags)?;
    Ok((format!("straighten-check: {passed}/{} passed", diags.len()), passed == diags.len()))
}

pub fn embed_verb(ctx: &Ctx, p: &EmbedParams) -> Result<String> {
    let cert = ctx.certificate(&p.certificate)?;
    let mut cfg = p.embed.clone();
    cfg.seed = ctx.seed_or(cfg.seed);
    let e = product_embedding_sample(&ctx.family, &cert, &p.model_input, &cfg, &ctx.tol.renorm)?;
    let line = format!(
        "embed-sample: lambda = {}, residual {:.3e}, certificate {}",
        point(&e.lambda),
        e.residual,
        if e.certificate.is_some() { "yes" } else { "no" }
    );
    ctx.write_artifact("embedding.json", "embedding_sample", &e)?;
    Ok(line)
}

pub fn boxdim_verb(ctx: &Ctx, p: &BoxdimParams) -> Result<String> {
    let bitmap = match &p.source {
        BoxdimSource::Grid { path, threshold } => {
            let g = GridField::load(&resolve(&ctx.base, path))?;
            Bitmap::from_fn(g.lattice.clone(), |i, j| g.get(i, j) >= *threshold)
        }
        BoxdimSource::EscapeBoundary(r) => {
            r.validate()?;
            let chart = r.chart(&ctx.family)?;
            let lattice = Lattice::new(r.bbox, r.resolution[0], r.resolution[1])?;
            escape_render(&ctx.family, r.critical, &chart, lattice, r.depth)?.boundary()
        }
    };
    let d = boxdim(&bitmap, p.scales)?;
    bitmap.write_png(&ctx.path("boxdim.png"))?;
    ctx.write_json("boxdim.json", &d)?;
    Ok(format!("boxdim: dimension {:.4} (R² {:.4})", d.dimension, d.fit.r2))
}

pub fn prerep_to_neutral_verb(ctx: &Ctx, p: &PrerepToNeutralParams) -> Result<(String, bool)> {
    let certs: Result<Vec<_>> = p.certificates.iter().map(|c| ctx.certificate(c)).collect();
    let mut cfg = p.experiment.clone();
    cfg.seed = ctx.seed_or(cfg.seed);
    let r = experiment_prerep_to_neutral(&ctx.family, &certs?, &p.target, &cfg, &ctx.tol)?;
    ctx.write_json("prerep_to_neutral.json", &r)?;
    Ok((r.summary(), r.success))
}

pub fn neutral_to_prerep_verb(ctx: &Ctx, p: &NeutralToPrerepParams) -> Result<(String, bool)> {
    let sol = match &p.solution {
        NeutralSource::File(path) => {
            let a = Artifact::load(&resolve(&ctx.base, path))?;
            if a.artifact != "neutral_solution" {
                return Err(Error::InvalidSpec(format!("{} holds a {}, not a neutral solution", path.display(), a.artifact)));
            }
            a.data::<NeutralArtifact>()?.solution
        }
        NeutralSource::Solve(s) => solve_neutral_inner(ctx, s)?,
    };
    let mut cfg = p.experiment.clone();
    cfg.seed = ctx.seed_or(cfg.seed);
    let r = experiment_neutral_to_prerep(&ctx.family, &sol, &p.target, &cfg, &ctx.tol)?;
    ctx.write_json("neutral_to_prerep.json", &r)?;
    Ok((r.summary(), r.success))
}

pub fn stratification_verb(ctx: &Ctx, p: &StratificationParams) -> Result<String> {
    let r = experiment_stratification(&ctx.family, &p.chart, p.window, &p.experiment, &ctx.tol.currents)?;
    ctx.write_json("stratification.json", &r)?;
    Ok(r.summary())
}
