//! End-to-end acceptance run: one line per criterion, non-zero exit if any
//! fails. Oracles are closed forms computed here, never library output.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use biflab::currents::{resolved_depth, wedge_masses, Chart4, PotentialKind};
use biflab::cycles::{solve_per, NeutralTargetSpec};
use biflab::experiments::{
    experiment_neutral_to_prerep, experiment_prerep_to_neutral, experiment_stratification, ExperimentConfig,
    StratificationConfig, TrialCertificate,
};
use biflab::grid::{Chart, GridBox};
use biflab::misiurewicz::{
    multi_misiurewicz_sweep, solve_misiurewicz, MisiurewiczCertificate, MisiurewiczConstraint, ParamBox, SweepConfig,
};
use biflab::potential::lyapunov;
use biflab::renorm::{
    baby_mandelbrot, find_renorm_window, holder_exponent_probe, model_mandelbrot, product_embedding_sample,
    straightening_check, window_center_samples, EmbedConfig, RenormWindow, StraightenMode, WindowSearch,
};
use biflab::slice::ParameterSlice;
use biflab::tolerances::Tolerances;
use biflab::{Family, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn chebyshev() -> MisiurewiczCertificate {
    let f = Family::quadratic();
    let sl = ParameterSlice::full_line(&f);
    let tol = Tolerances::default().misiurewicz;
    solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 2, 1)], &[c(-1.9, 0.0)], &tol).unwrap()
}

fn period_three_window() -> RenormWindow {
    let search = WindowSearch {
        seed: c(0.23, 0.0),
        radius: 0.05,
        ..Default::default()
    };
    find_renorm_window(&Family::quadratic(), &chebyshev(), 0, &search, &Tolerances::default().renorm).unwrap()
}

fn cubic_certificates() -> Vec<MisiurewiczCertificate> {
    let cfg = SweepConfig {
        window: ParamBox {
            center: vec![c(0.0, 0.0); 2],
            half_width: 2.0,
        },
        k: 2,
        max_preperiod: 4,
        max_period: 3,
        n_seeds: 512,
        seed: 7,
        escape_guided: false,
    };
    multi_misiurewicz_sweep(&Family::cubic(), &cfg, &Tolerances::default().misiurewicz).unwrap()
}

fn random_disk(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::from_polar(r * rng.gen::<f64>().sqrt(), std::f64::consts::TAU * rng.gen::<f64>())
}

fn per_closed_forms() -> Outcome {
    let f = Family::quadratic();
    let sl = ParameterSlice::full_line(&f);
    let tol = Tolerances::default().cycles;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst1, mut worst2, mut failures) = (0.0f64, 0.0f64, 0);
    for _ in 0..200 {
        let w = random_disk(&mut rng, 1.5);
        // fixed point z = w/2 of z² + ζ
        let zeta1 = w / 2.0 - w * w / 4.0;
        let kick = random_disk(&mut rng, 0.05);
        match solve_per(&f, &sl, 1, w, zeta1 + kick, w / 2.0 + kick, &tol) {
            Ok(s) => worst1 = worst1.max((s.lambda[0] - zeta1).norm()),
            Err(_) => failures += 1,
        }
        // the 2-cycle solves z² + z + ζ + 1 = 0 and has multiplier 4ζ + 4
        let zeta2 = w / 4.0 - 1.0;
        let z2 = (-1.0 + (-3.0 - 4.0 * zeta2).sqrt()) / 2.0;
        let kick = random_disk(&mut rng, 0.05);
        match solve_per(&f, &sl, 2, w, zeta2 + kick, z2 + kick, &tol) {
            Ok(s) => worst2 = worst2.max((s.lambda[0] - zeta2).norm()),
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0 && worst1 <= 1e-9 && worst2 <= 1e-9,
        format!("200 w: max |Δζ| Per_1 {worst1:.1e}, Per_2 {worst2:.1e}, {failures} solver failures"),
    )
}

fn lyapunov_values() -> Outcome {
    let f = Family::quadratic();
    let log2 = 2f64.ln();
    let a = lyapunov(&f, &[c(0.0, 0.0)], 10_000, 0).unwrap();
    let b = lyapunov(&f, &[c(-2.0, 0.0)], 10_000, 0).unwrap();
    let ok = (a.l_mc - log2).abs() <= 1e-3
        && (b.l_mc - log2).abs() <= 5e-3
        && a.agrees_within(3.0)
        && b.agrees_within(3.0);
    outcome(
        ok,
        format!(
            "L(z²) = {:.5} (se {:.1e}, green {:.5}); L(z²−2) = {:.5} (se {:.1e}, green {:.5})",
            a.l_mc, a.stderr, a.l_green, b.l_mc, b.stderr, b.l_green
        ),
    )
}

fn misiurewicz_oracles() -> Outcome {
    let f = Family::quadratic();
    let sl = ParameterSlice::full_line(&f);
    let tol = Tolerances::default().misiurewicz;
    let cheb = solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 2, 1)], &[c(-1.9, 0.0)], &tol).unwrap();
    // 0 ↦ i ↦ −1+i ↦ −i ↦ −1+i: landing 2-cycle with multiplier 2(−1+i)·2(−i)
    let tip = solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 2, 2)], &[c(0.0, 1.1)], &tol).unwrap();
    let det_err = (cheb.transversality_det - c(-8.0, 0.0)).norm();
    let mult_err = (tip.landing_cycle_multipliers[0] - c(4.0, 4.0)).norm();
    let placed = (cheb.lambda[0] + 2.0).norm() < 1e-12 && (tip.lambda[0] - c(0.0, 1.0)).norm() < 1e-12;
    outcome(
        placed && det_err <= 1e-6 && mult_err <= 1e-8,
        format!("det at −2 off by {det_err:.1e}, multiplier at i off by {mult_err:.1e}"),
    )
}

fn self_wedge() -> Outcome {
    let f = Family::cubic();
    let tol = Tolerances::default().currents;
    // the certificate with the mildest landing cycles, so that the critical
    // orbits stay resolved deepest on the chart
    let certs = cubic_certificates();
    let cert = certs
        .iter()
        .min_by(|a, b| {
            let worst = |c: &MisiurewiczCertificate| c.landing_cycle_multipliers.iter().map(|m| m.norm()).fold(0.0, f64::max);
            worst(a).total_cmp(&worst(b))
        })
        .unwrap();
    let chart = Chart4::cube([cert.lambda[0], cert.lambda[1]], 0.05, 128).unwrap();
    let depth = resolved_depth(&f, &chart, 24, tol.max_cell_change).unwrap();
    let r = wedge_masses(&f, &chart, PotentialKind::FubiniStudy { depth }, &[(0, 0), (1, 1), (0, 1)], &[], 0.0).unwrap();
    let cross = r.pair(0, 1).unwrap().positive_mass;
    // total variation: positive and negative parts both count against zero
    let tv = |i| {
        let p = r.pair(i, i).unwrap();
        p.positive_mass + p.negative_mass
    };
    let (s0, s1) = (tv(0), tv(1));
    outcome(
        cross > 0.0 && s0 <= 0.05 * cross && s1 <= 0.05 * cross,
        format!("128⁴, depth {depth}: |T0∧T0| / T0∧T1 = {:.2e}, |T1∧T1| / T0∧T1 = {:.2e}", s0 / cross, s1 / cross),
    )
}

fn baby_mandelbrot_window() -> Outcome {
    let f = Family::quadratic();
    let tol = Tolerances::default().renorm;
    let w = period_three_window();
    let anchors: Vec<_> = [c(0.0, 0.0), c(-1.0, 0.0)]
        .iter()
        .map(|&z| straightening_check(&f, &w, z, StraightenMode::Center, &tol).unwrap())
        .collect();
    let anchors_ok = anchors.iter().all(|d| d.passed && d.multiplier.norm() < 1e-6);
    let baby = baby_mandelbrot(&f, &w, 128, 200, &tol).unwrap();
    let ratio = baby.area_ratio(&model_mandelbrot(&baby.grid.lattice, w.radius, 200));
    outcome(
        w.return_time == 3 && anchors_ok && (0.5..=2.0).contains(&ratio),
        format!(
            "n₁ = {}, anchor multipliers {:.1e} / {:.1e}, area ratio {ratio:.3}",
            w.return_time,
            anchors[0].multiplier.norm(),
            anchors[1].multiplier.norm()
        ),
    )
}

fn product_embedding() -> Outcome {
    let f = Family::cubic();
    let tol = Tolerances::default();
    let cert = cubic_certificates().remove(0);
    let t = Instant::now();
    let centers = product_embedding_sample(&f, &cert, &[c(0.0, 0.0), c(0.0, 0.0)], &EmbedConfig::default(), &tol.renorm);
    let t_centers = t.elapsed();
    let t = Instant::now();
    let tips = product_embedding_sample(&f, &cert, &[c(-2.0, 0.0), c(-2.0, 0.0)], &EmbedConfig::default(), &tol.renorm);
    let t_tips = t.elapsed();
    let (ok_c, d_c) = match &centers {
        Ok(s) => {
            let worst = s.per_factor_diagnostics.iter().map(|d| d.multiplier.norm()).fold(0.0, f64::max);
            (
                s.residual <= 1e-9 && s.per_factor_diagnostics.len() == 2 && worst < 1e-6,
                format!("(0,0): residual {:.1e}, multipliers ≤ {worst:.1e}", s.residual),
            )
        }
        Err(e) => (false, format!("(0,0): {e}")),
    };
    let (ok_t, d_t) = match &tips {
        Ok(s) => match &s.certificate {
            Some(cert) => {
                // an independent solve from the sampled parameter
                let again = solve_misiurewicz(&f, &ParameterSlice::full(&f), &cert.constraints, &s.lambda, &tol.misiurewicz);
                let rank = again.as_ref().map_or(0, |a| a.jacobian_rank);
                (cert.jacobian_rank == 2 && rank == 2, format!("(−2,−2): rank-2 certificate {:?}", cert.constraints))
            }
            None => (false, "(−2,−2): no certificate".to_string()),
        },
        Err(e) => (false, format!("(−2,−2): {e}")),
    };
    let budget = Duration::from_secs(120);
    outcome(
        ok_c && ok_t && t_centers < budget && t_tips < budget,
        format!("{d_c}; {d_t}; {:.1} s / {:.1} s", t_centers.as_secs_f64(), t_tips.as_secs_f64()),
    )
}

fn neutral_density() -> Outcome {
    let f = Family::cubic();
    let tol = Tolerances::default();
    let spec = NeutralTargetSpec::new(vec![1, 1], vec![0.5, 1.0 / 3.0]).unwrap();
    let cfg = ExperimentConfig {
        radii: vec![0.2, 0.1, 0.05],
        ..Default::default()
    };
    let t = Instant::now();
    let there = match experiment_prerep_to_neutral(&f, &cubic_certificates(), &spec, &cfg, &tol) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("prerep_to_neutral: {e}")),
    };
    let t_there = t.elapsed();
    let last = there.shrink_curve.last().and_then(|p| p.distance);
    let sol = match there.trials.last().map(|t| &t.certificate) {
        Some(TrialCertificate::Neutral(s)) => s.clone(),
        _ => return outcome(false, "no neutral solution in the last trial".into()),
    };
    let there_ok = there.success
        && there.nonincreasing()
        && last.is_some_and(|d| d <= 0.05)
        && sol.jacobian_rank == 2
        && sol.residual <= 1e-8;
    let t = Instant::now();
    let back = match experiment_neutral_to_prerep(&f, &sol, &spec, &cfg, &tol) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("neutral_to_prerep: {e}")),
    };
    let t_back = t.elapsed();
    let closed = back.shrink_curve.len() == 3
        && back.shrink_curve.iter().all(|p| p.distance.is_some_and(|d| d <= p.radius))
        && back.trials.iter().all(|t| t.recheck.is_empty());
    let curve = |r: &biflab::experiments::DensityExperimentReport| {
        r.shrink_curve
            .iter()
            .map(|p| p.distance.map_or("miss".into(), |d| format!("{d:.1e}")))
            .collect::<Vec<String>>()
            .join(" ")
    };
    let budget = Duration::from_secs(600);
    outcome(
        there_ok && closed && t_there < budget && t_back < budget,
        format!(
            "there [{}] rank {} residual {:.1e}; back [{}]; {:.0} s / {:.0} s",
            curve(&there),
            sol.jacobian_rank,
            sol.residual,
            curve(&back),
            t_there.as_secs_f64(),
            t_back.as_secs_f64()
        ),
    )
}

fn stratification() -> Outcome {
    let f = Family::cubic();
    // a = 0: the critical point 0 is a superattracting fixed point, c moves
    let chart = Chart::complex_line(vec![c(0.0, 0.0); 2], vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let cfg = StratificationConfig::default();
    match experiment_stratification(&f, &chart, GridBox::new(-3.0, 3.0, -3.0, 3.0), &cfg, &Tolerances::default().currents) {
        Ok(r) => {
            let (ball, a) = (r.found.as_ref().unwrap(), r.active.unwrap());
            let active = ball.masses[a];
            let passive = ball.masses.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, m)| *m).fold(0.0, f64::max);
            outcome(
                active > 0.0 && passive <= 1e-3 * active,
                format!("c{a} active, masses {:?} at ({:.3}, {:.3})", ball.masses, ball.center.0, ball.center.1),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn holder() -> Outcome {
    let samples = window_center_samples(&Family::quadratic(), &period_three_window(), 8).unwrap();
    match holder_exponent_probe(&samples) {
        Ok(fit) => outcome(
            (0.8..=1.2).contains(&fit.exponent) && fit.r2 > 0.95,
            format!("exponent {:.4}, R² {:.4}, {} pairs", fit.exponent, fit.r2, fit.n),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn biflab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_biflab")).args(args).output().unwrap()
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let verbs = [
        "render",
        "solve-per",
        "continue-per",
        "solve-neutral",
        "find-misiurewicz",
        "find-window",
        "baby-mandel",
        "straighten-check",
        "embed-sample",
        "boxdim",
        "prerep-to-neutral",
        "neutral-to-prerep",
        "stratification",
    ];
    let mut bad = Vec::new();
    for verb in verbs {
        let cfg = tmp.path().join(format!("{verb}.json"));
        std::fs::write(&cfg, biflab(&["config", verb]).stdout).unwrap();
        let cfg = cfg.to_str().unwrap();
        let runs: Vec<_> = ["a", "b"]
            .iter()
            .map(|tag| {
                let out = tmp.path().join(format!("{verb}-{tag}"));
                let o = out.to_str().unwrap();
                let res = match verb {
                    "prerep-to-neutral" | "neutral-to-prerep" | "stratification" => {
                        biflab(&["experiment", verb, "--config", cfg, "--out", o])
                    }
                    _ => biflab(&[verb, "--config", cfg, "--out", o]),
                };
                (res.status.code(), res.stdout, read_dir_bytes(&out))
            })
            .collect();
        if runs[0].0 != Some(0) || runs[0] != runs[1] || runs[0].2.is_empty() {
            bad.push(verb.to_string());
        }
    }
    // verify is a verb too
    let art = tmp.path().join("find-misiurewicz-a/certificate_000.json");
    let art = art.to_str().unwrap();
    let (v1, v2) = (biflab(&["verify", art]), biflab(&["verify", art]));
    if v1.status.code() != Some(0) || v1.stdout != v2.stdout {
        bad.push("verify".into());
    }
    outcome(bad.is_empty(), format!("13 verbs + verify run twice; differing or failing: {bad:?}"))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("Per_1 / Per_2 closed forms", 10, per_closed_forms),
        ("Lyapunov exponents", 30, lyapunov_values),
        ("Misiurewicz certificates", 5, misiurewicz_oracles),
        ("self-wedge vanishing", 300, self_wedge),
        ("baby Mandelbrot", 120, baby_mandelbrot_window),
        ("product embedding", 240, product_embedding),
        ("neutral density round trip", 1200, neutral_density),
        ("stratification", 300, stratification),
        ("Hölder probe", 60, holder),
        ("CLI determinism", u64::MAX, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        let in_time = secs < *budget as f64;
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        let budget = if *budget == u64::MAX { String::new() } else { format!(" of {budget} s") };
        println!(
            "criterion {:>2} {:<28} {}  {}  [{secs:.1} s{budget}]",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
