use std::sync::OnceLock;

use biflab::currents::{mixed_density, resolved_depth, wedge_density, Chart4, Grid4};
use biflab::cycles::{cycles_dividing, periodic_points, solve_per, Cycle};
use biflab::grid::{GridBox, GridField, Lattice};
use biflab::linalg::{determinant, matrix_from_rows};
use biflab::misiurewicz::{certify, multi_misiurewicz_sweep, MisiurewiczCertificate, ParamBox, SweepConfig};
use biflab::potential::green;
use biflab::slice::ParameterSlice;
use biflab::tolerances::{CurrentsTol, Tolerances};
use biflab::{Error, Family, C64};
use proptest::prelude::*;

fn complex(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b))
}

fn cubic_certificate() -> &'static MisiurewiczCertificate {
    static CERT: OnceLock<MisiurewiczCertificate> = OnceLock::new();
    CERT.get_or_init(|| {
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
        multi_misiurewicz_sweep(&Family::cubic(), &cfg, &Tolerances::default().misiurewicz)
            .unwrap()
            .remove(0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eval_is_first_order_consistent(
        c in complex(2.0), a in complex(2.0), z in complex(3.0),
        hr in 0.0..1e-6f64, ht in 0.0..std::f64::consts::TAU,
    ) {
        let f = Family::cubic();
        let lam = [c, a];
        let h = C64::from_polar(hr, ht);
        let lhs = f.eval(&lam, z + h).unwrap() - f.eval(&lam, z).unwrap() - f.derivative_z(&lam, z).unwrap() * h;
        prop_assert!(lhs.norm() <= 1e-9 * (1.0 + z.norm()).powi(3));
    }

    #[test]
    fn marked_critical_points_carry_d_minus_one(d in 3usize..=5, seed in prop::collection::vec(complex(1.5), 4)) {
        let f = Family::branner_hubbard(d).unwrap();
        let lam = &seed[..f.param_dim()];
        match f.critical_points(lam) {
            Ok(cps) => prop_assert_eq!(cps.iter().map(|c| c.local_degree - 1).sum::<usize>(), d - 1),
            Err(Error::CollidedCriticalPoints { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn iteration_composes(c in complex(1.0), z in complex(1.0), a in 0usize..30, b in 0usize..30) {
        let f = Family::quadratic();
        let r = 1e6;
        let first = f.iterate(&[c], z, a, r).unwrap();
        prop_assume!(!first.escaped);
        let second = f.iterate(&[c], first.last(), b, r).unwrap();
        let whole = f.iterate(&[c], z, a + b, r).unwrap();
        let mut joined = first.points.clone();
        joined.extend_from_slice(&second.points[1..]);
        prop_assert_eq!(joined, whole.points);
        prop_assert_eq!(second.escaped, whole.escaped);
    }

    #[test]
    fn green_functional_equation(c in complex(1.0), rho in 3.0..50.0f64, t in 0.0..std::f64::consts::TAU) {
        let f = Family::quadratic();
        let z = C64::from_polar(rho, t);
        let g = green(&f, &[c], z, 200).unwrap().value;
        let gf = green(&f, &[c], f.eval(&[c], z).unwrap(), 200).unwrap().value;
        prop_assert!((gf - 2.0 * g).abs() <= 1e-9 * (1.0 + gf.abs()), "{gf} vs 2·{g}");
    }

    #[test]
    fn mixed_density_is_symmetric(
        a in -5.0..5.0f64, b in -5.0..5.0f64, u in complex(5.0),
        p in -5.0..5.0f64, q in -5.0..5.0f64, v in complex(5.0),
    ) {
        prop_assert_eq!(mixed_density((a, b, u), (p, q, v)), mixed_density((p, q, v), (a, b, u)));
    }

    #[test]
    fn per_one_matches_the_closed_form(w in complex(1.5), kick in complex(0.03)) {
        prop_assume!(w.norm() <= 1.5 && (w - 1.0).norm() > 1e-3);
        let f = Family::quadratic();
        let zeta = w / 2.0 - w * w / 4.0;
        let s = solve_per(&f, &ParameterSlice::full_line(&f), 1, w, zeta + kick, w / 2.0 + kick, &Tolerances::default().cycles).unwrap();
        prop_assert!((s.lambda[0] - zeta).norm() <= 1e-9);
    }

    #[test]
    fn determinant_scales_by_the_power(rows in prop::collection::vec(prop::collection::vec(complex(2.0), 3), 3), k in complex(2.0)) {
        let m = matrix_from_rows(&rows);
        let scaled = matrix_from_rows(&rows.iter().map(|r| r.iter().map(|x| x * k).collect()).collect::<Vec<_>>());
        let (d, ds) = (determinant(&m), determinant(&scaled));
        let expect = d * k * k * k;
        prop_assert!((ds - expect).norm() <= 1e-10 * (1.0 + expect.norm() + 64.0 * k.norm().powi(3)));
    }

    #[test]
    fn grid_bytes_round_trip(nx in 3usize..12, ny in 3usize..12, x0 in -5.0..5.0f64, w in 0.1..3.0f64, vals in prop::collection::vec(-1e6..1e6f64, 144)) {
        let lat = Lattice::new(GridBox::new(x0, x0 + w, -1.0, 1.0), nx, ny).unwrap();
        let g = GridField::from_fn(lat, |i, j| vals[j * 12 + i]);
        let back = GridField::from_bytes(&g.to_bytes()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn tolerances_round_trip(r in 1e-14..1e-6f64, clamp in 0.0..1e-3f64, change in 0.01..0.5f64, samples in 2usize..64) {
        let mut t = Tolerances::default();
        t.cycles.newton_residual = r;
        t.currents.negative_clamp = clamp;
        t.currents.max_cell_change = change;
        t.renorm.h_samples = samples;
        let back: Tolerances = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn root_count_is_d_to_the_n(c in complex(1.2), a in complex(1.2), n in 1usize..=4) {
        let f = Family::cubic();
        match cycles_dividing(&f, &[c, a], n, &Tolerances::default().cycles) {
            Ok(cs) => prop_assert_eq!(cs.iter().map(|c| c.period * c.multiplicity).sum::<usize>(), 3usize.pow(n as u32)),
            Err(Error::RootSolveFailure { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn quadratic_root_count_up_to_six(c in complex(1.2), n in 1usize..=6) {
        let f = Family::quadratic();
        let cs = cycles_dividing(&f, &[c], n, &Tolerances::default().cycles).unwrap();
        prop_assert_eq!(cs.iter().map(|c| c.period * c.multiplicity).sum::<usize>(), 1usize << n);
    }

    #[test]
    fn multiplier_does_not_depend_on_the_representative(c in complex(1.0), n in 1usize..=5) {
        let f = Family::quadratic();
        let tol = Tolerances::default().cycles;
        let map = f.map_at(&[c]).unwrap();
        for cyc in periodic_points(&f, &[c], n, &tol).unwrap() {
            for &z in &cyc.points {
                let again = Cycle::from_point(&map, z, cyc.period, &tol);
                prop_assert!((again.multiplier - cyc.multiplier).norm() <= 1e-12 * (1.0 + cyc.multiplier.norm()));
            }
        }
    }

    #[test]
    fn wedge_is_exactly_symmetric(vals in prop::collection::vec(-1.0..1.0f64, 2 * 625)) {
        let ch = Chart4::cube([C64::new(0.1, 0.2), C64::new(-0.3, 0.1)], 0.1, 5).unwrap();
        let u = Grid4 { chart: ch.clone(), values: vals[..625].to_vec() };
        let v = Grid4 { chart: ch, values: vals[625..].to_vec() };
        let tol = CurrentsTol::default();
        let (a, na) = wedge_density(&u, &v, &tol).unwrap();
        let (b, nb) = wedge_density(&v, &u, &tol).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(na, nb);
    }

    #[test]
    fn transversality_determinant_scales(a in complex(3.0), b in complex(3.0), swap in any::<bool>()) {
        prop_assume!(a.norm() > 0.1 && b.norm() > 0.1);
        let f = Family::cubic();
        let cert = cubic_certificate();
        let tol = Tolerances::default().misiurewicz;
        let mut slice = cert.slice.clone();
        slice.directions[0].iter_mut().for_each(|x| *x *= a);
        slice.directions[1].iter_mut().for_each(|x| *x *= b);
        let s = vec![cert.s[0] / a, cert.s[1] / b];
        let mut constraints = cert.constraints.clone();
        if swap {
            constraints.reverse();
        }
        let r = certify(&f, &slice, &constraints, &s, &tol).unwrap();
        let sign = if swap { -1.0 } else { 1.0 };
        let expect = cert.transversality_det * a * b * sign;
        prop_assert!((r.transversality_det - expect).norm() <= 1e-7 * expect.norm(), "{} vs {expect}", r.transversality_det);
        prop_assert_eq!(r.transverse, cert.transverse);
    }

    #[test]
    fn finer_tolerance_never_resolves_deeper(t in 0.005..0.2f64, k in 1.5..4.0f64) {
        let f = Family::cubic();
        let ch = Chart4::cube([C64::new(0.4, 0.3), C64::new(0.5, -0.2)], 0.05, 32).unwrap();
        let strict = resolved_depth(&f, &ch, 16, t).unwrap();
        let loose = resolved_depth(&f, &ch, 16, t * k).unwrap();
        prop_assert!(strict <= loose);
    }
}
