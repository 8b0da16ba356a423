//! Shared fixtures for the benchmarks.

use bogobind::fock::{FockBasis, Sector};
use bogobind::{Momentum, PotentialSpec, TorusModel};
use std::f64::consts::PI;

/// Flat band of Fourier coefficients out to the second shell in d = 1.
pub fn two_band(n: usize) -> TorusModel {
    let cutoff = 4.0 * PI + 0.1;
    TorusModel::new(1, n, PotentialSpec::band(1, cutoff, 1.0, false).unwrap(), cutoff).unwrap()
}

/// Zero-momentum sector of the full N-particle space.
pub fn k0_basis(model: &TorusModel) -> FockBasis {
    let modes = model.mode_set().unwrap();
    let d = model.d;
    FockBasis::enumerate(&modes, Sector::Particles(model.n), Some(&Momentum::zero(d))).unwrap()
}

/// Short-range band in d = 3 with a large mode set.
pub fn three_d(mode_cutoff: f64) -> TorusModel {
    let potential = PotentialSpec::band(3, 4.0 * PI + 0.1, 1.0, false).unwrap();
    TorusModel::new(3, 64, potential, mode_cutoff).unwrap()
}
