//! Numerical laboratory for bifurcation currents of polynomial families.
//!
//! The crate is layered bottom-up: [`family`] evaluates maps and their
//! derivatives, [`potential`] builds Green functions and Lyapunov exponents,
//! [`currents`] turns potentials into densities, [`cycles`] and
//! [`misiurewicz`] solve for special parameters, [`renorm`] detects
//! renormalization windows, and [`experiments`] composes all of them.

pub mod currents;
pub mod cycles;
pub mod error;
pub mod experiments;
pub mod family;
pub mod grid;
pub mod jet;
pub mod linalg;
pub mod misiurewicz;
pub mod newton;
pub mod potential;
pub mod renorm;
pub mod roots;
pub mod slice;
pub mod tolerances;

pub use error::{Error, Result};
pub use family::{Family, C64};
