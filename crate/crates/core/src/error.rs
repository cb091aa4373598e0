use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the solvers and estimators of this crate.
///
/// Variants that carry partial results (continuation paths, scanned
/// evidence) do so because the caller can still use them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("orbit escaped (non-finite value) at step {step}")]
    Escape { step: usize },
    #[error("family is not polynomial; this operation supports polynomial families only")]
    NotPolynomial,
    #[error("marked critical points {i} and {j} coincide at this parameter")]
    CollidedCriticalPoints { i: usize, j: usize },
    #[error("invalid family or parameter: {0}")]
    InvalidSpec(String),
    #[error("root finder failed to converge ({converged}/{degree} roots converged)")]
    RootSolveFailure { converged: usize, degree: usize },
    #[error("period {n} too large: degree {degree} exceeds limit {limit}")]
    PeriodTooLarge { n: usize, degree: u64, limit: u64 },
    #[error("Newton iteration did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("converged to a cycle of exact period {found}, requested {requested}")]
    WrongExactPeriod { requested: usize, found: usize },
    #[error("continuation stalled at theta = {theta}; {} points kept", path.len())]
    ContinuationStalled { theta: f64, path: Vec<(f64, Vec<Complex64>)> },
    #[error("cycles {i} and {j} collided (separation {separation:.3e})")]
    CyclesCollided { i: usize, j: usize, separation: f64 },
    #[error("multiplier Jacobian has rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("landing cycle of constraint {index} is not repelling (|multiplier| = {modulus})")]
    LandingNotRepelling { index: usize, modulus: f64 },
    #[error("transversality fails: |det| = {det_abs:.3e} below threshold {threshold:.3e}")]
    DegenerateJacobian { det_abs: f64, threshold: f64 },
    #[error("transversality rescue exhausted after {attempts} attempts")]
    RescueExhausted { attempts: usize },
    #[error("no superattracting center found along the slice")]
    NoCenterFound,
    #[error("chart scale degenerate (|scale| = {0:.3e})")]
    ChartDegenerate(f64),
    #[error("window too distorted (h_sup = {h_sup:.3e} >= {delta:.3e})")]
    WindowTooDistorted { h_sup: f64, delta: f64 },
    #[error("model parameter {0} lies outside the chart domain")]
    OutsideChart(Complex64),
    #[error("polishing failed: {0}")]
    PolishFailed(String),
    #[error("alternating projection diverged (residual {residual:.3e} after {sweeps} sweeps)")]
    AlternationDiverged { residual: f64, sweeps: usize },
    #[error("factor {0} diagnostic failed: {1}")]
    FactorDiagnosticFailed(usize, String),
    #[error("need at least {needed} dyadic scales, have {available}")]
    InsufficientScales { needed: usize, available: usize },
    #[error("insufficient spread in samples: {0}")]
    InsufficientSpread(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("no rank-{0} certificate available")]
    NoCertificateAvailable(usize),
    #[error("nothing found: {0}")]
    NotFound(String),
    #[error("unknown artifact type: {0}")]
    UnknownArtifactType(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
