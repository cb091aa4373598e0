//! Seeded statistical checks. Each one is deterministic, so a failure is
//! reproducible rather than flaky.

use biflab::currents::{activity_test, bif_density, potential_grid4, wedge_density, Activity, Chart4, PotentialKind};
use biflab::grid::{Chart, GridBox, Lattice};
use biflab::misiurewicz::{multi_misiurewicz_sweep, ParamBox, SweepConfig};
use biflab::potential::lyapunov;
use biflab::tolerances::{CurrentsTol, Tolerances};
use biflab::{Family, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn lyapunov_estimators_agree_on_random_quadratics() {
    let f = Family::quadratic();
    let l2 = 2f64.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let c = C64::new(rng.gen_range(-2.0..1.0), rng.gen_range(-1.0..1.0));
        let e = lyapunov(&f, &[c], 4000, k).unwrap();
        assert!(e.agrees_within(3.0), "c = {c}: {e:?}");
        // the Green side is log d plus nonnegative terms
        assert!(e.l_green >= l2 - 1e-9, "c = {c}: {e:?}");
        assert!(e.l_mc >= 0.5 * l2 - 5e-2, "c = {c}: {e:?}");
        worst = worst.max((e.l_mc - e.l_green).abs() / e.stderr.max(1e-12));
    }
    assert!(worst.is_finite());
}

fn mandelbrot_density(shift: f64, negative_clamp: f64) -> f64 {
    let f = Family::quadratic();
    let chart = Chart::complex_line(vec![C64::new(0.0, 0.0)], vec![C64::new(1.0, 0.0)]);
    let n = 256;
    let h = 4.0 / n as f64;
    let bbox = GridBox::new(-2.5 + shift * h, 1.5 + shift * h, -2.0 + shift * h, 2.0 + shift * h);
    let lat = Lattice::new(bbox, n, n).unwrap();
    let tol = CurrentsTol {
        negative_clamp,
        ..CurrentsTol::default()
    };
    bif_density(&f, 0, &chart, lat, 60, &tol).unwrap().mass()
}

#[test]
fn bifurcation_mass_is_stable_under_half_cell_shifts() {
    let a = mandelbrot_density(0.0, 0.0);
    let b = mandelbrot_density(0.5, 0.0);
    assert!((a - b).abs() <= 0.02 * a, "{a} vs {b}");
    // G_c(0) grows like ½ log|c|, so the unclamped flux through the frame is ½
    let raw = mandelbrot_density(0.0, f64::MAX);
    assert!((raw - 0.5).abs() < 5e-3, "{raw}");
}

fn cubic_sweep_certificate() -> Vec<C64> {
    let cfg = SweepConfig {
        window: ParamBox {
            center: vec![C64::new(0.0, 0.0); 2],
            half_width: 2.0,
        },
        k: 2,
        max_preperiod: 4,
        max_period: 3,
        n_seeds: 512,
        seed: 7,
        escape_guided: false,
    };
    let certs = multi_misiurewicz_sweep(&Family::cubic(), &cfg, &Tolerances::default().misiurewicz).unwrap();
    certs[0].lambda.clone()
}

#[test]
fn wedge_has_mass_near_a_transverse_misiurewicz_parameter() {
    let f = Family::cubic();
    let tol = Tolerances::default();
    let lam = cubic_sweep_certificate();
    let chart = Chart4::cube([lam[0], lam[1]], 0.05, 17).unwrap();
    let kind = PotentialKind::Green { depth: 60 };
    let u = potential_grid4(&f, 0, &chart, kind).unwrap();
    let v = potential_grid4(&f, 1, &chart, kind).unwrap();
    let (w, _) = wedge_density(&u, &v, &tol.currents).unwrap();
    assert!(w.mass() > 0.0);
    // the certified parameter itself carries the largest density on the chart
    assert_eq!(w.get([8, 8, 8, 8]), w.max());
}

/// Support inclusion at pixel scale. The wedge of Hölder potentials on a
/// 17⁴ grid is dominated by stencil error, and a sampled probe disk of one
/// cell misses the thin activity locus, so a large share of the top
/// percentile comes out Passive. Kept runnable for finer grids.
#[test]
#[ignore = "not resolved at feasible 4-d grid sizes"]
fn wedge_concentrates_where_both_critical_points_are_active() {
    let f = Family::cubic();
    let tol = Tolerances::default();
    let chart = Chart4::cube([C64::new(0.0, 0.0); 2], 1.0, 17).unwrap();
    let kind = PotentialKind::Green { depth: 60 };
    let u = potential_grid4(&f, 0, &chart, kind).unwrap();
    let v = potential_grid4(&f, 1, &chart, kind).unwrap();
    let (w, _) = wedge_density(&u, &v, &tol.currents).unwrap();
    let mut sorted = w.values.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = sorted[sorted.len() / 100];
    let radius = chart.axes[0].step;
    let n = chart.axes[0].n;
    let mut passive = Vec::new();
    for l in 0..n {
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let idx = [i, j, k, l];
                    if w.get(idx) < cut || w.get(idx) <= 0.0 {
                        continue;
                    }
                    let lam = chart.point(idx);
                    for (crit, dir) in [(0, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]), (1, [C64::new(0.0, 0.0), C64::new(1.0, 0.0)])] {
                        let verdict = activity_test(&f, crit, &lam, &dir, radius, 200, &tol.currents).unwrap();
                        if verdict.status == Activity::Passive {
                            passive.push((idx, crit));
                        }
                    }
                }
            }
        }
    }
    assert!(passive.is_empty(), "{} passive verdicts, first {:?}", passive.len(), passive.first());
}
