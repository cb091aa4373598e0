//! Forward-mode derivatives of iterates `z_n = f_λ^{∘n}(z_0)`.

use crate::family::{MapDirection, PolyMap, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Iterates whose modulus exceeds this are treated as escaped by the jet.
pub const JET_OVERFLOW: f64 = 1e150;

/// Value and derivatives of `f^{∘n}` at one start point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub z: C64,
    /// `∂z_n/∂z_0`.
    pub dz: C64,
    /// `∂²z_n/∂z_0²`.
    pub d2z: C64,
    /// `∂z_n/∂s_k`, including the dependence of `z_0` on `s_k` when seeded.
    pub ds: Vec<C64>,
    /// `∂²z_n/∂z_0∂s_k`.
    pub dzs: Vec<C64>,
    pub escaped: bool,
}

/// Propagates the jet of `z_0` through `n` steps of `map`.
///
/// `dirs` are parameter directions (from [`PolyMap::direction`]) and `ds0`
/// the derivatives of the start point along them (zero for a free point,
/// the critical-point gradient for a critical orbit).
pub fn orbit_jet(map: &PolyMap, dirs: &[MapDirection], z0: C64, ds0: &[C64], n: usize) -> Jet {
    let k = dirs.len();
    let mut jet = Jet {
        z: z0,
        dz: C64::new(1.0, 0.0),
        d2z: ZERO,
        ds: ds0.to_vec(),
        dzs: vec![ZERO; k],
        escaped: false,
    };
    debug_assert_eq!(ds0.len(), k);
    for _ in 0..n {
        let z = jet.z;
        let f1 = map.deriv(z);
        let f2 = map.deriv2(z);
        for (j, dir) in dirs.iter().enumerate() {
            let g = dir.eval(z);
            let g1 = dir.deriv(z);
            jet.dzs[j] = f2 * jet.dz * jet.ds[j] + f1 * jet.dzs[j] + g1 * jet.dz;
            jet.ds[j] = f1 * jet.ds[j] + g;
        }
        jet.d2z = f2 * jet.dz * jet.dz + f1 * jet.d2z;
        jet.dz *= f1;
        jet.z = map.eval(z);
        if !(jet.z.norm() <= JET_OVERFLOW) {
            jet.escaped = true;
            break;
        }
    }
    jet
}

/// `(f^{∘n}(z), (f^{∘n})'(z))`, with an escape flag.
pub fn iterate_with_derivative(map: &PolyMap, z0: C64, n: usize) -> (C64, C64, bool) {
    let mut z = z0;
    let mut dz = C64::new(1.0, 0.0);
    for _ in 0..n {
        dz *= map.deriv(z);
        z = map.eval(z);
        if !(z.norm() <= JET_OVERFLOW) {
            return (z, dz, true);
        }
    }
    (z, dz, false)
}

/// The critical orbit jet of marked critical point `i` along `dirs`.
pub fn critical_jet(map: &PolyMap, dirs: &[MapDirection], i: usize, n: usize) -> Jet {
    let ds0: Vec<C64> = dirs.iter().map(|d| d.critical[i]).collect();
    orbit_jet(map, dirs, map.critical[i], &ds0, n)
}
