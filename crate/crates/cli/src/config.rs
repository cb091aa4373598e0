use std::path::{Path, PathBuf};

use biflab::cycles::NeutralTargetSpec;
use biflab::experiments::{ExperimentConfig, StratificationConfig};
use biflab::family::FamilyDoc;
use biflab::grid::{Chart, GridBox};
use biflab::misiurewicz::{MisiurewiczConstraint, SweepConfig};
use biflab::renorm::{EmbedConfig, StraightenMode, WindowSearch};
use biflab::slice::ParameterSlice;
use biflab::tolerances::Tolerances;
use biflab::{Error, Family, Result, C64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Envelope shared by every verb. `params` holds the verb's own block.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig<P> {
    pub family: FamilyDoc,
    /// Overrides every seed inside `params` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; `BIFLAB_THREADS` wins over this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub params: P,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl<P: DeserializeOwned> RunConfig<P> {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
    }
}

impl<P> RunConfig<P> {
    pub fn family(&self) -> Result<Family> {
        self.family.clone().into_family()
    }
}

/// Relative paths inside a config resolve against the config's directory.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn whole_space(family: &Family, slice: &Option<ParameterSlice>) -> ParameterSlice {
    slice.clone().unwrap_or_else(|| ParameterSlice::full(family))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Escape,
    Activity,
    Density,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderParams {
    /// Defaults to the parameter plane of a one-parameter family.
    #[serde(default)]
    pub chart: Option<Chart>,
    #[serde(default = "default_box")]
    pub bbox: GridBox,
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    #[serde(default)]
    pub critical: usize,
    #[serde(default = "default_quantity")]
    pub quantity: Quantity,
    /// Escape iterations, or orbit depth for activity and density.
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_box() -> GridBox {
    GridBox::new(-2.5, 1.5, -2.0, 2.0)
}
fn default_resolution() -> [usize; 2] {
    [512, 512]
}
fn default_quantity() -> Quantity {
    Quantity::Escape
}
fn default_depth() -> usize {
    200
}

impl RenderParams {
    pub fn chart(&self, family: &Family) -> Result<Chart> {
        match &self.chart {
            Some(c) => Ok(c.clone()),
            None if family.param_dim() == 1 => Ok(Chart::plane()),
            None => Err(Error::InvalidSpec("families with several parameters need an explicit chart".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution.contains(&0) {
            return Err(Error::InvalidSpec("resolution must be positive".into()));
        }
        if self.bbox.is_degenerate() {
            return Err(Error::InvalidSpec("render box is degenerate".into()));
        }
        if self.depth == 0 {
            return Err(Error::InvalidSpec("depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePerParams {
    #[serde(default)]
    pub slice: Option<ParameterSlice>,
    pub n: usize,
    pub w: C64,
    pub seed_s: C64,
    #[serde(default)]
    pub seed_z: C64,
}

impl SolvePerParams {
    pub fn slice(&self, family: &Family) -> ParameterSlice {
        whole_space(family, &self.slice)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuePerParams {
    #[serde(default)]
    pub slice: Option<ParameterSlice>,
    pub n: usize,
    pub theta_a: f64,
    pub theta_b: f64,
    pub steps: usize,
    pub seed_s: C64,
    #[serde(default)]
    pub seed_z: C64,
}

impl ContinuePerParams {
    pub fn slice(&self, family: &Family) -> ParameterSlice {
        whole_space(family, &self.slice)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveNeutralParams {
    #[serde(default)]
    pub slice: Option<ParameterSlice>,
    pub target: NeutralTargetSpec,
    /// Slice coordinates to seed from.
    pub seeds: Vec<Vec<C64>>,
}

impl SolveNeutralParams {
    pub fn slice(&self, family: &Family) -> ParameterSlice {
        whole_space(family, &self.slice)
    }
}

/// A single certified solve from a seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MisiurewiczSolve {
    #[serde(default)]
    pub slice: Option<ParameterSlice>,
    pub constraints: Vec<MisiurewiczConstraint>,
    pub seed: Vec<C64>,
}

impl MisiurewiczSolve {
    pub fn slice(&self, family: &Family) -> ParameterSlice {
        whole_space(family, &self.slice)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FindMisiurewiczParams {
    Solve(MisiurewiczSolve),
    Sweep(SweepConfig),
}

/// Where a verb gets its Misiurewicz certificate from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateSource {
    /// A `misiurewicz_certificate` artifact.
    File(PathBuf),
    Solve(MisiurewiczSolve),
    /// Entry `index` of a sweep's (sorted) result list.
    Sweep { sweep: SweepConfig, index: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FindWindowParams {
    pub certificate: CertificateSource,
    pub critical: usize,
    #[serde(default)]
    pub search: WindowSearch,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BabyMandelParams {
    pub certificate: CertificateSource,
    pub critical: usize,
    #[serde(default)]
    pub search: WindowSearch,
    #[serde(default = "default_baby_resolution")]
    pub resolution: usize,
    #[serde(default = "default_depth")]
    pub max_iter: usize,
}

fn default_baby_resolution() -> usize {
    256
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StraightenProbe {
    pub zeta: C64,
    pub mode: StraightenMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StraightenParams {
    pub certificate: CertificateSource,
    pub critical: usize,
    #[serde(default)]
    pub search: WindowSearch,
    #[serde(default = "default_probes")]
    pub probes: Vec<StraightenProbe>,
}

fn default_probes() -> Vec<StraightenProbe> {
    vec![
        StraightenProbe {
            zeta: ZERO,
            mode: StraightenMode::Center,
        },
        StraightenProbe {
            zeta: C64::new(-1.0, 0.0),
            mode: StraightenMode::Center,
        },
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedParams {
    pub certificate: CertificateSource,
    pub model_input: Vec<C64>,
    #[serde(default)]
    pub embed: EmbedConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoxdimSource {
    /// Cells of a saved grid (stem without extension) with value ≥ threshold.
    Grid { path: PathBuf, threshold: f64 },
    /// Boundary of an escape-time render.
    EscapeBoundary(RenderParams),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxdimParams {
    pub source: BoxdimSource,
    #[serde(default)]
    pub scales: Option<(u32, u32)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrerepToNeutralParams {
    pub target: NeutralTargetSpec,
    /// Candidate certificates; the first rank-k transverse one is used.
    pub certificates: Vec<CertificateSource>,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NeutralSource {
    /// A `neutral_solution` artifact.
    File(PathBuf),
    Solve(SolveNeutralParams),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeutralToPrerepParams {
    pub target: NeutralTargetSpec,
    pub solution: NeutralSource,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratificationParams {
    pub chart: Chart,
    pub window: GridBox,
    #[serde(default)]
    pub experiment: StratificationConfig,
}
