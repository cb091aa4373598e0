//! Self-describing JSON artifacts and their re-verification.

use std::path::Path;

use biflab::cycles::{exact_period, ContinuationPoint, Cycle, NeutralSolution, NeutralTargetSpec, PerSolution};
use biflab::family::FamilyDoc;
use biflab::misiurewicz::MisiurewiczCertificate;
use biflab::renorm::{estimate_h_sup, FactorTarget, ProductEmbeddingSample, RenormWindow};
use biflab::tolerances::Tolerances;
use biflab::{Error, Family, Result, C64};
use serde::{Deserialize, Serialize};

pub const KINDS: [&str; 6] = [
    "per_solution",
    "continuation",
    "neutral_solution",
    "misiurewicz_certificate",
    "renorm_window",
    "embedding_sample",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub artifact: String,
    pub family: FamilyDoc,
    pub tolerances: Tolerances,
    pub data: serde_json::Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerArtifact {
    pub n: usize,
    pub w: C64,
    pub solution: PerSolution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuationArtifact {
    pub n: usize,
    pub path: Vec<ContinuationPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeutralArtifact {
    pub target: NeutralTargetSpec,
    pub solution: NeutralSolution,
}

impl Artifact {
    pub fn new<T: Serialize>(kind: &str, family: &Family, tolerances: &Tolerances, data: &T) -> Result<Self> {
        debug_assert!(KINDS.contains(&kind));
        Ok(Artifact {
            artifact: kind.to_string(),
            family: FamilyDoc::from(family),
            tolerances: tolerances.clone(),
            data: serde_json::to_value(data)?,
        })
    }

    /// Anything that does not parse as a known artifact is reported as
    /// `UnknownArtifactType`, truncated files included.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let a: Artifact =
            serde_json::from_str(&text).map_err(|e| Error::UnknownArtifactType(format!("{}: {e}", path.display())))?;
        if !KINDS.contains(&a.artifact.as_str()) {
            return Err(Error::UnknownArtifactType(a.artifact));
        }
        Ok(a)
    }

    pub fn data<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        serde_json::from_value(self.data.clone()).map_err(|e| Error::UnknownArtifactType(format!("{}: {e}", self.artifact)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Names of the invariants that fail when recomputed from scratch.
    pub fn verify(&self) -> Result<Vec<String>> {
        let family = self.family.clone().into_family()?;
        let tol = &self.tolerances;
        let mut bad = match self.artifact.as_str() {
            "per_solution" => verify_per(&family, &self.data()?, tol)?,
            "continuation" => verify_continuation(&family, &self.data()?, tol)?,
            "neutral_solution" => {
                let a: NeutralArtifact = self.data()?;
                a.solution.check(&family, &a.target, &tol.cycles)?
            }
            "misiurewicz_certificate" => self.data::<MisiurewiczCertificate>()?.check(&family, &tol.misiurewicz)?,
            "renorm_window" => verify_window(&family, &self.data()?, tol)?,
            "embedding_sample" => verify_embedding(&family, &self.data()?, tol)?,
            other => return Err(Error::UnknownArtifactType(other.to_string())),
        };
        bad.sort();
        bad.dedup();
        Ok(bad)
    }
}

fn close(a: C64, b: C64, rel: f64) -> bool {
    (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
}

fn verify_per(family: &Family, a: &PerArtifact, tol: &Tolerances) -> Result<Vec<String>> {
    let sol = &a.solution;
    let mut bad = sol.cycle.check(family, &sol.lambda, &tol.cycles)?;
    if sol.cycle.period != a.n {
        bad.push("per.period".into());
    }
    if !close(sol.cycle.multiplier, a.w, 1e-8) {
        bad.push("per.multiplier_target".into());
    }
    Ok(bad)
}

fn verify_continuation(family: &Family, a: &ContinuationArtifact, tol: &Tolerances) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for p in &a.path {
        let map = family.map_at(&p.lambda)?;
        let period = exact_period(&map, p.z, a.n, &tol.cycles);
        let cyc = Cycle::from_point(&map, p.z, period, &tol.cycles);
        bad.extend(cyc.check(family, &p.lambda, &tol.cycles)?);
        if !close(cyc.multiplier, p.multiplier, 1e-8) {
            bad.push("continuation.multiplier".into());
        }
        let target = C64::from_polar(1.0, std::f64::consts::TAU * p.theta);
        // at a parabolic point the stored orbit has a smaller period
        if !p.parabolic && !close(p.multiplier, target, 1e-8) {
            bad.push("continuation.multiplier_target".into());
        }
        if (period != a.n) != p.parabolic {
            bad.push("continuation.period".into());
        }
    }
    Ok(bad)
}

fn verify_window(family: &Family, w: &RenormWindow, tol: &Tolerances) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    let n1 = w.return_time;
    let critical_period = |lambda: &[C64], n: usize| -> Result<(usize, C64)> {
        let map = family.map_at(lambda)?;
        let c = map.critical[w.critical];
        let p = exact_period(&map, c, n, &tol.cycles);
        Ok((p, Cycle::from_point(&map, c, p, &tol.cycles).multiplier))
    };
    let (p, rho) = critical_period(&w.lambda_center, n1)?;
    if p != n1 || rho.norm() > tol.renorm.center_multiplier {
        bad.push("window.center".into());
    }
    let (p, rho) = critical_period(&w.lambda_anchor, 2 * n1)?;
    if p != 2 * n1 || rho.norm() > tol.renorm.center_multiplier {
        bad.push("window.anchor".into());
    }
    let on_chart = w.point(family, C64::new(0.0, 0.0))?;
    if on_chart.lambda.iter().zip(&w.lambda_center).any(|(a, b)| (a - b).norm() > 1e-9) {
        bad.push("window.chart".into());
    }
    let h = estimate_h_sup(family, w, tol.renorm.h_samples).min(f64::MAX);
    if (h - w.h_sup).abs() > 1e-9 * (1.0 + h.abs()) {
        bad.push("window.h_sup".into());
    }
    if w.epsilon_ok != (w.h_sup < w.delta) {
        bad.push("window.epsilon_ok".into());
    }
    Ok(bad)
}

fn verify_embedding(family: &Family, e: &ProductEmbeddingSample, tol: &Tolerances) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    if e.windows.len() != e.per_factor_diagnostics.len() {
        bad.push("embedding.shape".into());
        return Ok(bad);
    }
    let map = family.map_at(&e.lambda)?;
    for (d, w) in e.per_factor_diagnostics.iter().zip(&e.windows) {
        if let FactorTarget::Center { period } = d.target {
            let n = period * w.return_time;
            let c = map.critical[d.critical];
            let p = exact_period(&map, c, n, &tol.cycles);
            let rho = Cycle::from_point(&map, c, p, &tol.cycles).multiplier;
            if p != n || rho.norm() > tol.renorm.center_multiplier {
                bad.push(format!("embedding.factor{}.center", d.factor));
            }
        }
    }
    if let Some(cert) = &e.certificate {
        if cert.lambda.iter().zip(&e.lambda).any(|(a, b)| (a - b).norm() > 1e-9) {
            bad.push("embedding.certificate_lambda".into());
        }
        bad.extend(cert.check(family, &tol.misiurewicz)?);
    }
    if e.residual > tol.renorm.embed_residual {
        bad.push("embedding.residual".into());
    }
    Ok(bad)
}
