//! Bogoliubov theory for the binding energy of a weakly interacting Bose
//! gas on the unit torus, checked against exact diagonalization.
//!
//! - [`model`]: momenta, potentials, mode sets and the model description.
//! - [`bogoliubov`]: closed-form quasi-particle quantities and predictions.
//! - [`fock`]: Fock bases, sparse Hamiltonians and eigensolvers.
//! - [`asymptotics`]: N-sweeps comparing ED with the predictions.

pub mod asymptotics;
pub mod bogoliubov;
pub mod canonical;
pub mod fock;
pub mod model;
pub mod summation;

pub use asymptotics::{StudyReport, SweepConfig};
pub use bogoliubov::{BogoliubovError, BogoliubovSolution, ModeQuantities, Predictions};
pub use fock::{EdResult, EigenSettings, FockBasis, FockError, Sector};
pub use model::{ModelError, Momentum, PotentialSpec, TorusModel};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bogoliubov(#[from] BogoliubovError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("fit is rank deficient: {0}")]
    RankDeficient(String),
}
