use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biflab::tolerances::Tolerances;
use biflab::Error;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

mod artifact;
mod config;
mod templates;
mod verbs;

use artifact::Artifact;
use config::RunConfig;
use verbs::Ctx;

#[derive(Parser)]
#[command(name = "biflab", version, about = "Bifurcation currents, special parameters and renormalization windows")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(clap::Args)]
struct Run {
    /// JSON run configuration (see `biflab config <verb>`).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verb {
    /// Escape-time, activity or bifurcation-density image over a chart.
    Render(Run),
    /// Parameter with a cycle of exact period n and multiplier w.
    SolvePer(Run),
    /// Follow a multiplier curve Per_n(e^{2πiθ}) in θ.
    ContinuePer(Run),
    /// Parameter with k prescribed neutral cycles.
    SolveNeutral(Run),
    /// Certified Misiurewicz parameters from a seed or a sweep.
    FindMisiurewicz {
        #[command(flatten)]
        run: Run,
        /// Re-check every certificate from scratch.
        #[arg(long)]
        verify: bool,
    },
    /// Renormalization window of a critical point near a certificate.
    FindWindow(Run),
    /// Baby Mandelbrot copy of a window next to the model set.
    BabyMandel(Run),
    /// Straightening diagnostics at model parameters of a window.
    StraightenCheck(Run),
    /// Parameter realizing given model parameters in every window.
    EmbedSample(Run),
    /// Box-counting dimension of a saved grid or an escape boundary.
    Boxdim(Run),
    /// Density and stratification experiments.
    Experiment {
        name: ExperimentName,
        #[command(flatten)]
        run: Run,
    },
    /// Recompute every invariant of a stored artifact.
    Verify { artifact: PathBuf },
    /// Print an example configuration for a verb.
    Config { verb: TemplateName },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    PrerepToNeutral,
    NeutralToPrerep,
    Stratification,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TemplateName {
    Render,
    SolvePer,
    ContinuePer,
    SolveNeutral,
    FindMisiurewicz,
    FindWindow,
    BabyMandel,
    StraightenCheck,
    EmbedSample,
    Boxdim,
    PrerepToNeutral,
    NeutralToPrerep,
    Stratification,
}

const VALIDATION: u8 = 2;
const CONVERGENCE: u8 = 3;
const IO: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidSpec(_)
        | Error::NotPolynomial
        | Error::OutsideChart(_)
        | Error::GridMismatch(_)
        | Error::UnknownArtifactType(_)
        | Error::Json(_) => VALIDATION,
        Error::Io(_) => IO,
        _ => CONVERGENCE,
    }
}

fn threads(config: Option<usize>) -> Option<usize> {
    std::env::var("BIFLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .or(config)
        .filter(|&n| n > 0)
}

/// Loads the config, sizes the pool and runs the verb; `Ok(false)` means
/// the verb completed but its own pass criterion failed.
fn run<P, F>(r: &Run, f: F) -> biflab::Result<bool>
where
    P: DeserializeOwned,
    F: FnOnce(&Ctx, &P) -> biflab::Result<(String, bool)>,
{
    let cfg: RunConfig<P> = RunConfig::load(&r.config)?;
    if let Some(n) = threads(cfg.threads) {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Ctx::new(&cfg, &r.config, r.out.clone())?;
    let (text, ok) = f(&ctx, &cfg.params)?;
    say(text.trim_end());
    Ok(ok)
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn always(v: biflab::Result<String>) -> biflab::Result<(String, bool)> {
    v.map(|s| (s, true))
}

fn verify(path: &Path) -> biflab::Result<bool> {
    let a = Artifact::load(path)?;
    let bad = a.verify()?;
    if bad.is_empty() {
        say(&format!("verify {}: pass", a.artifact));
    } else {
        say(&format!("verify {}: FAIL ({})", a.artifact, bad.join(", ")));
    }
    Ok(bad.is_empty())
}

fn dispatch(verb: Verb) -> biflab::Result<(bool, u8)> {
    let ok = match verb {
        Verb::Render(r) => run(&r, |c, p| always(verbs::render(c, p)))?,
        Verb::SolvePer(r) => run(&r, |c, p| always(verbs::solve_per_verb(c, p)))?,
        Verb::ContinuePer(r) => run(&r, |c, p| always(verbs::continue_per_verb(c, p)))?,
        Verb::SolveNeutral(r) => run(&r, |c, p| always(verbs::solve_neutral_verb(c, p)))?,
        Verb::FindMisiurewicz { run: r, verify } => {
            let ok = run(&r, |c, p| verbs::find_misiurewicz_verb(c, p, verify))?;
            return Ok((ok, VALIDATION));
        }
        Verb::FindWindow(r) => run(&r, |c, p| always(verbs::find_window_verb(c, p)))?,
        Verb::BabyMandel(r) => run(&r, |c, p| always(verbs::baby_mandel_verb(c, p)))?,
        Verb::StraightenCheck(r) => run(&r, verbs::straighten_verb)?,
        Verb::EmbedSample(r) => run(&r, |c, p| always(verbs::embed_verb(c, p)))?,
        Verb::Boxdim(r) => run(&r, |c, p| always(verbs::boxdim_verb(c, p)))?,
        Verb::Experiment { name, run: r } => match name {
            ExperimentName::PrerepToNeutral => run(&r, verbs::prerep_to_neutral_verb)?,
            ExperimentName::NeutralToPrerep => run(&r, verbs::neutral_to_prerep_verb)?,
            ExperimentName::Stratification => run(&r, |c, p| always(verbs::stratification_verb(c, p)))?,
        },
        Verb::Verify { artifact } => return Ok((verify(&artifact)?, VALIDATION)),
        Verb::Config { verb } => {
            say(&serde_json::to_string_pretty(&templates::template(verb))?);
            true
        }
    };
    Ok((ok, CONVERGENCE))
}

fn main() -> ExitCode {
    let table = Tolerances::help_table();
    let cmd = Cli::command()
        .after_help(table.clone())
        .mut_subcommands(|s| s.after_help(table.clone()));
    let cli = match Cli::from_arg_matches(&cmd.get_matches()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match dispatch(cli.verb) {
        Ok((true, _)) => ExitCode::SUCCESS,
        Ok((false, code)) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
