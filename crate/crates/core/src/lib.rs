//! 2D incompressible Hookean elastodynamics on a periodic box, in Lagrangian
//! coordinates, plus the numerical verification toolkit around it: commuting
//! vector-field jets, generalized/weighted/ghost energies, null-form identity
//! checks, and empirical-constant benches for the weighted decay estimates.

pub mod cli;
pub mod cutoff;
pub mod error;
pub mod field;
pub mod gamma;
pub mod grid;
pub mod solver;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};

/// `<a> = sqrt(1 + a^2)`.
pub fn bracket(a: f64) -> f64 {
    (1.0 + a * a).sqrt()
}
