use biflab::currents::escape_render;
use biflab::grid::{Chart, GridBox, Lattice};
use biflab::misiurewicz::{multi_misiurewicz_sweep, solve_misiurewicz, MisiurewiczCertificate, MisiurewiczConstraint, ParamBox, SweepConfig};
use biflab::renorm::*;
use biflab::slice::ParameterSlice;
use biflab::tolerances::{MisiurewiczTol, RenormTol};
use biflab::{Error, Family, C64};

const PERIOD3_CENTER: f64 = -1.754_877_666_246_693;
// Newton on f^6(0) = 0 from the period-3 center minus 0.02
const PERIOD6_ANCHOR: f64 = -1.772_892_903_381_624;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn chebyshev() -> MisiurewiczCertificate {
    let f = Family::quadratic();
    let sl = ParameterSlice::full_line(&f);
    solve_misiurewicz(&f, &sl, &[MisiurewiczConstraint::new(0, 2, 1)], &[c(-1.9, 0.0)], &MisiurewiczTol::default()).unwrap()
}

/// The real window of return time `n` between the Chebyshev point and the
/// period-3 window (`seed` is the offset from −2).
fn quadratic_window(seed: f64, radius: f64) -> RenormWindow {
    let search = WindowSearch {
        seed: c(seed, 0.0),
        radius,
        ..Default::default()
    };
    find_renorm_window(&Family::quadratic(), &chebyshev(), 0, &search, &RenormTol::default()).unwrap()
}

fn period3() -> RenormWindow {
    quadratic_window(0.23, 0.05)
}

fn deep() -> RenormWindow {
    quadratic_window(1.41e-5, 5e-6)
}

fn cubic_certificate() -> MisiurewiczCertificate {
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
    multi_misiurewicz_sweep(&Family::cubic(), &cfg, &MisiurewiczTol::default()).unwrap().remove(0)
}

#[test]
fn period_three_window() {
    let w = period3();
    assert_eq!(w.return_time, 3);
    assert!((w.lambda_center[0] - PERIOD3_CENTER).norm() < 1e-12);
    // the real root of ζ³ + 2ζ² + ζ + 1
    let z = w.lambda_center[0];
    assert!((z * z * z + z * z * 2.0 + z + 1.0).norm() < 1e-12);
    assert!((w.lambda_anchor[0] - PERIOD6_ANCHOR).norm() < 1e-12);
    assert!((w.scale - (PERIOD3_CENTER - PERIOD6_ANCHOR)).norm() < 1e-12);
}

#[test]
fn escaping_region_has_no_center() {
    let search = WindowSearch {
        seed: c(5.0, 0.0),
        radius: 0.5,
        max_return: 6,
        ..Default::default()
    };
    let r = find_renorm_window(&Family::quadratic(), &chebyshev(), 0, &search, &RenormTol::default());
    assert!(matches!(r, Err(Error::NoCenterFound)), "{r:?}");
}

#[test]
fn deep_window_is_quadratic_like() {
    let f = Family::quadratic();
    let w = deep();
    assert_eq!(w.return_time, 10);
    assert!(w.epsilon_ok && w.h_sup < 0.25, "{}", w.h_sup);
    assert!(w.require_epsilon_ok().is_ok());
    assert!(baby_member(&f, &w, c(0.0, 0.0), 200));
    // model orbit 0 → 4 → 20 leaves D(0, 20) at the second step
    assert!(!baby_member(&f, &w, c(4.0, 0.0), 200));
    assert!(matches!(period3().require_epsilon_ok(), Err(Error::WindowTooDistorted { .. })));
}

#[test]
fn baby_copy_area_matches_the_model() {
    let f = Family::quadratic();
    let tol = RenormTol::default();
    let w = period3();
    let baby = baby_mandelbrot(&f, &w, 128, 200, &tol).unwrap();
    let model = model_mandelbrot(&baby.grid.lattice, tol.radius, 200);
    let ratio = baby.area_ratio(&model);
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    let (i, j) = baby.grid.lattice.cell_of(0.0, 0.0).unwrap();
    assert!(baby.grid.get(i, j));
}

#[test]
fn anchors_straighten() {
    let f = Family::quadratic();
    let tol = RenormTol::default();
    for (seed, radius) in [(0.23, 0.05), (0.058, 0.01), (0.0146, 0.003), (0.0036, 0.001)] {
        let w = quadratic_window(seed, radius);
        for (zeta, period) in [(0.0, 1), (-1.0, 2)] {
            let d = straightening_check(&f, &w, c(zeta, 0.0), StraightenMode::Center, &tol).unwrap();
            assert!(d.passed, "{d:?}");
            assert_eq!(d.family_period, period * w.return_time);
            assert!(d.multiplier.norm() < 1e-6);
        }
    }
}

#[test]
fn deep_anchors_hit_the_precision_floor() {
    // at return time 10 one ulp of λ moves the center multiplier by ~1e-5,
    // so only the periods and a loose multiplier bound are resolvable
    let f = Family::quadratic();
    let w = deep();
    for (zeta, period) in [(0.0, 1), (-1.0, 2)] {
        let d = straightening_check(&f, &w, c(zeta, 0.0), StraightenMode::Center, &RenormTol::default()).unwrap();
        assert_eq!(d.family_period, period * w.return_time);
        assert!(d.multiplier.norm() < 1e-3, "{d:?}");
    }
}

#[test]
fn neutral_straightening_at_the_cardioid_root() {
    let f = Family::quadratic();
    let tol = RenormTol::default();
    for w in [period3(), deep()] {
        let d = straightening_check(&f, &w, c(-0.75, 0.0), StraightenMode::Neutral, &tol).unwrap();
        assert!(d.passed, "{d:?}");
        assert!((d.multiplier + 1.0).norm() < 1e-8);
        assert!(d.distance <= 5.0 * w.h_sup * w.scale.norm());
    }
}

#[test]
fn multiplier_straightening_in_a_deep_window() {
    let f = Family::quadratic();
    let d = straightening_check(&f, &deep(), c(-0.1, 0.1), StraightenMode::Multiplier, &RenormTol::default()).unwrap();
    assert!(d.passed, "{d:?}");
    assert!(matches!(
        straightening_check(&f, &deep(), c(30.0, 0.0), StraightenMode::Center, &RenormTol::default()),
        Err(Error::OutsideChart(_))
    ));
}

#[test]
fn shrinking_the_search_never_worsens_the_window() {
    for (seed, radius) in [(0.23, 0.05), (0.058, 0.01), (0.0146, 0.003), (0.0036, 0.001), (9.0e-4, 3e-4)] {
        let a = quadratic_window(seed, radius);
        let b = quadratic_window(seed, radius / 2.0);
        // identical windows up to the last bits of the solved center
        assert!(b.h_sup <= a.h_sup * (1.0 + 1e-9), "{} > {}", b.h_sup, a.h_sup);
    }
}

#[test]
fn holder_exponent_of_the_period_three_window() {
    let samples = window_center_samples(&Family::quadratic(), &period3(), 8).unwrap();
    let fit = holder_exponent_probe(&samples).unwrap();
    assert!((0.8..=1.2).contains(&fit.exponent), "{fit:?}");
    assert!(fit.r2 > 0.95, "{fit:?}");
}

#[test]
fn product_of_two_centers() {
    let f = Family::cubic();
    let cert = cubic_certificate();
    let s = product_embedding_sample(&f, &cert, &[c(0.0, 0.0), c(0.0, 0.0)], &EmbedConfig::default(), &RenormTol::default()).unwrap();
    assert!(s.residual <= 1e-9);
    assert_eq!(s.per_factor_diagnostics.len(), 2);
    for d in &s.per_factor_diagnostics {
        assert!(d.passed && d.multiplier.norm() < 1e-6, "{d:?}");
    }
}

#[test]
fn product_of_two_tips_is_prerepelling() {
    let f = Family::cubic();
    let cert = cubic_certificate();
    let s = product_embedding_sample(&f, &cert, &[c(-2.0, 0.0), c(-2.0, 0.0)], &EmbedConfig::default(), &RenormTol::default()).unwrap();
    let joint = s.certificate.expect("both factors land on repelling cycles");
    assert_eq!(joint.jacobian_rank, 2);
    assert!(joint.transverse);
    // and an independent solve from the sampled parameter agrees
    let full = ParameterSlice::full(&f);
    let again = solve_misiurewicz(&f, &full, &joint.constraints, &s.lambda, &MisiurewiczTol::default()).unwrap();
    assert_eq!(again.jacobian_rank, 2);
    let d: f64 = again.lambda.iter().zip(&s.lambda).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(d < 1e-8, "{d}");
}

#[test]
fn moving_one_factor_keeps_the_other() {
    let f = Family::cubic();
    let cert = cubic_certificate();
    let tol = RenormTol::default();
    let a = product_embedding_sample(&f, &cert, &[c(0.0, 0.0), c(0.0, 0.0)], &EmbedConfig::default(), &tol).unwrap();
    let b = product_embedding_sample(&f, &cert, &[c(0.0, 0.0), c(-1.0, 0.0)], &EmbedConfig::default(), &tol).unwrap();
    assert!(a.lambda != b.lambda);
    let (da, db) = (&a.per_factor_diagnostics[0], &b.per_factor_diagnostics[0]);
    assert!(db.passed && db.target == da.target && db.return_time == da.return_time);
    assert_eq!(b.per_factor_diagnostics[1].target, FactorTarget::Center { period: 2 });
}

#[test]
fn mandelbrot_boundary_box_dimension() {
    let f = Family::quadratic();
    let lattice = Lattice::new(GridBox::new(-2.5, 1.5, -2.0, 2.0), 1024, 1024).unwrap();
    let r = escape_render(&f, 0, &Chart::plane(), lattice, 500).unwrap();
    let dim = boxdim(&r.boundary(), Some((0, 7))).unwrap();
    assert!((1.1..=2.0).contains(&dim.dimension), "{dim:?}");
    assert!(dim.fit.r2 > 0.98, "{dim:?}");
}
