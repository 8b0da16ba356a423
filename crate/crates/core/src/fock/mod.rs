//! Exact diagonalization in truncated bosonic Fock spaces.

pub mod basis;
pub mod binding;
pub mod eigen;
pub mod hamiltonian;
pub mod identities;
pub mod observables;
pub mod operator;

use crate::model::ModelError;
use thiserror::Error;

pub use basis::{sector_size, FockBasis, Sector};
pub use binding::{binding_from_ed, binding_solve, solve_sector, BindingResult, SandwichBounds, SectorSolve};
pub use eigen::{dense_eigenpairs, lanczos_solve, lowest_eigenpairs, EdResult, EigenSettings, SolveMethod};
pub use hamiltonian::{build_bogoliubov_hamiltonian, build_hamiltonian, excited_number_diagonal, ladder_operator, Ladder};
pub use identities::{operator_identity_residuals, IdentityResiduals};
pub use observables::{excitation_map, excitation_map_into, observable_expectation, Observable};
pub use operator::SparseOperator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("{count} basis states exceed the limit of {limit}")]
    TooLarge { count: u128, limit: usize },
    #[error("operator is not symmetric")]
    NotSymmetric,
    #[error("operator has dimension 0")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}
