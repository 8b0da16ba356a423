//! Binding energy ΔE = E(λ,N) − E(λ,N−1) from two K=0 sector solves, with
//! the Rayleigh-quotient sandwich built from the zero-mode ladder.
//!
//! With φ = a₀Ψ_N and χ = a₀*Ψ_{N−1},
//!
//! ```text
//! ⟨Ψ_N,[H,a₀*]a₀Ψ_N⟩/‖φ‖² ≤ ΔE ≤ ⟨Ψ_{N−1},a₀[H,a₀*]Ψ_{N−1}⟩/‖χ‖²,
//! ```
//!
//! since φ and χ are trial states for the (N−1)- and N-particle problems.

use super::basis::{sector_size, FockBasis, Sector};
use super::eigen::{lowest_eigenpairs, EdResult, EigenSettings, SolveMethod};
use super::hamiltonian::{build_hamiltonian, excited_number_diagonal, ladder_operator, Ladder};
use super::operator::{dot, SparseOperator};
use super::FockError;
use crate::model::{Momentum, TorusModel};
use serde::{Deserialize, Serialize};

/// Full (all-K) bases up to this size are also solved to confirm that the
/// K=0 sector holds the global ground state.
pub const GLOBAL_CHECK_LIMIT: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichBounds {
    pub lower: f64,
    pub upper: f64,
}

impl SandwichBounds {
    /// min(ΔE − lower, upper − ΔE); negative when ΔE escapes the bracket.
    pub fn slack(&self, delta_e: f64) -> f64 {
        (delta_e - self.lower).min(self.upper - delta_e)
    }
}

/// Ground state of one particle-number sector.
#[derive(Clone, Debug)]
pub struct SectorSolve {
    pub basis: FockBasis,
    pub hamiltonian: SparseOperator,
    pub ed: EdResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BindingResult {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub e_n: f64,
    pub e_nm1: f64,
    pub delta_e: f64,
    pub dim_n: usize,
    pub dim_nm1: usize,
    pub method: SolveMethod,
    /// Worst eigen-residual of the two ground pairs.
    pub residual_norm: f64,
    pub converged: bool,
    /// Gap above the K=0 ground level exceeds 1e-8 in both sectors, so the
    /// vector quantities below are meaningful.
    pub nondegenerate: bool,
    /// `None` when the full bases are too large to check.
    pub k0_is_global_minimum: Option<bool>,
    /// `None` when a₀Ψ_N or a₀*Ψ_{N−1} vanishes.
    pub sandwich: Option<SandwichBounds>,
    /// ⟨N₊⟩ and ⟨N₊²⟩ in Ψ_N.
    pub excited_n: f64,
    pub excited_sq_n: f64,
    /// ⟨N₊⟩ in Ψ_{N−1}.
    pub excited_nm1: f64,
    /// ‖a₀Ψ_N‖², to be compared with N − ⟨N₊⟩_N.
    pub annihilated_norm_sq: f64,
    /// ‖a₀*Ψ_{N−1}‖², to be compared with N − ⟨N₊⟩_{N−1}.
    pub created_norm_sq: f64,
}

/// Lowest eigenpairs of H in the n-particle sector of total momentum k
/// (all sectors when `k` is `None`).
pub fn solve_sector(
    model: &TorusModel,
    n: usize,
    k: Option<&Momentum>,
    settings: &EigenSettings,
) -> Result<SectorSolve, FockError> {
    let modes = model.mode_set()?;
    let basis = FockBasis::enumerate(&modes, Sector::Particles(n), k)?;
    let hamiltonian = build_hamiltonian(model, &basis)?;
    let ed = lowest_eigenpairs(&hamiltonian, settings)?;
    Ok(SectorSolve { basis, hamiltonian, ed })
}

/// ΔE with both sectors at the model's λ and mode set.
pub fn binding_from_ed(model: &TorusModel, settings: &EigenSettings) -> Result<BindingResult, FockError> {
    binding_solve(model, settings).map(|(r, _)| r)
}

/// As [`binding_from_ed`], also returning the N-particle sector solve.
pub fn binding_solve(model: &TorusModel, settings: &EigenSettings) -> Result<(BindingResult, SectorSolve), FockError> {
    model.validate()?;
    let modes = model.mode_set()?;
    let zero = modes
        .iter()
        .position(Momentum::is_zero)
        .ok_or_else(|| FockError::BasisMismatch("binding energy needs the zero mode".into()))?;
    let n = model.n;
    if n == 0 {
        return Err(FockError::BasisMismatch("binding energy needs N ≥ 1".into()));
    }
    let k0 = Momentum::zero(model.d);
    // two levels, so that degeneracy of the ground level can be detected
    let sector_settings = settings.clone().with_k(settings.k.max(2));
    let upper = solve_sector(model, n, Some(&k0), &sector_settings)?;
    let lower = solve_sector(model, n - 1, Some(&k0), &sector_settings)?;
    let (e_n, e_nm1) = (upper.ed.ground_energy(), lower.ed.ground_energy());

    let psi_n = upper.ed.ground_vector();
    let psi_m = lower.ed.ground_vector();
    let n0_n: Vec<f64> = (0..upper.basis.len()).map(|i| upper.basis.state(i)[zero] as f64).collect();
    let n0_m: Vec<f64> = (0..lower.basis.len()).map(|i| lower.basis.state(i)[zero] as f64).collect();

    let phi = ladder_operator(&upper.basis, &lower.basis, zero, Ladder::Annihilate)?.apply(psi_n);
    let chi = ladder_operator(&lower.basis, &upper.basis, zero, Ladder::Create)?.apply(psi_m);
    let (phi_sq, chi_sq) = (dot(&phi, &phi), dot(&chi, &chi));

    let sandwich = (phi_sq > 0.0 && chi_sq > 0.0).then(|| {
        // ⟨Ψ,[H,a₀*]a₀Ψ⟩ = ⟨HΨ, n₀Ψ⟩ − ⟨φ,Hφ⟩
        let h_psi_n = upper.hamiltonian.apply(psi_n);
        let n0_psi: Vec<f64> = psi_n.iter().zip(&n0_n).map(|(c, k)| c * k).collect();
        let lower_q = (dot(&h_psi_n, &n0_psi) - lower.hamiltonian.quadratic_form(&phi)) / phi_sq;
        // ⟨Ψ',a₀[H,a₀*]Ψ'⟩ = ⟨χ,Hχ⟩ − ⟨(n₀+1)Ψ', HΨ'⟩
        let h_psi_m = lower.hamiltonian.apply(psi_m);
        let n0_psi: Vec<f64> = psi_m.iter().zip(&n0_m).map(|(c, k)| c * (k + 1.0)).collect();
        let upper_q = (upper.hamiltonian.quadratic_form(&chi) - dot(&h_psi_m, &n0_psi)) / chi_sq;
        SandwichBounds { lower: lower_q, upper: upper_q }
    });

    let excited = |s: &SectorSolve, power: i32| -> f64 {
        let diag = excited_number_diagonal(&s.basis);
        s.ed.ground_vector().iter().zip(&diag).map(|(c, k)| c * c * k.powi(power)).sum()
    };

    let k0_is_global_minimum = global_check(model, n, e_n, settings)?
        .zip(global_check(model, n - 1, e_nm1, settings)?)
        .map(|(a, b)| a && b);

    let result = BindingResult {
        n,
        lambda: model.lambda,
        e_n,
        e_nm1,
        delta_e: e_n - e_nm1,
        dim_n: upper.basis.len(),
        dim_nm1: lower.basis.len(),
        method: if upper.ed.method == SolveMethod::Lanczos || lower.ed.method == SolveMethod::Lanczos {
            SolveMethod::Lanczos
        } else {
            SolveMethod::Dense
        },
        residual_norm: upper.ed.residual_norm.max(lower.ed.residual_norm),
        converged: upper.ed.converged && lower.ed.converged,
        nondegenerate: upper.ed.ground_is_nondegenerate().unwrap_or(true)
            && lower.ed.ground_is_nondegenerate().unwrap_or(true),
        k0_is_global_minimum,
        sandwich,
        excited_n: excited(&upper, 1),
        excited_sq_n: excited(&upper, 2),
        excited_nm1: excited(&lower, 1),
        annihilated_norm_sq: phi_sq,
        created_norm_sq: chi_sq,
    };
    Ok((result, upper))
}

fn global_check(model: &TorusModel, n: usize, e_k0: f64, settings: &EigenSettings) -> Result<Option<bool>, FockError> {
    let m = model.mode_set()?.len();
    match sector_size(m, Sector::Particles(n)) {
        Some(size) if size <= GLOBAL_CHECK_LIMIT as u128 => {
            let full = solve_sector(model, n, None, &settings.clone().with_k(1))?;
            let e = full.ed.ground_energy();
            Ok(Some(e_k0 - e <= 1e-8 * e.abs().max(1.0)))
        }
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PotentialSpec;
    use std::f64::consts::PI;

    fn one_pair(n: usize) -> TorusModel {
        TorusModel::new(1, n, PotentialSpec::pair(Momentum::new([1]), 1.0), 2.0 * PI + 0.1).unwrap()
    }

    #[test]
    fn free_gas_has_zero_binding() {
        let m = TorusModel::new(1, 5, PotentialSpec::zero(), 2.0 * PI + 0.1).unwrap();
        let r = binding_from_ed(&m, &EigenSettings::default()).unwrap();
        assert_eq!(r.delta_e, 0.0);
        assert_eq!(r.k0_is_global_minimum, Some(true));
    }

    #[test]
    fn zero_mode_potential_is_exact() {
        let m = TorusModel::new(1, 6, PotentialSpec::constant(1, 1.3), 2.0 * PI + 0.1)
            .unwrap()
            .with_lambda(0.2);
        let r = binding_from_ed(&m, &EigenSettings::default()).unwrap();
        assert!((r.delta_e - 0.2 * 5.0 * 1.3).abs() < 1e-12);
    }

    #[test]
    fn sandwich_and_norm_identities() {
        let m = one_pair(8);
        let r = binding_from_ed(&m, &EigenSettings::default()).unwrap();
        assert!(r.converged && r.nondegenerate);
        let s = r.sandwich.clone().unwrap();
        assert!(s.slack(r.delta_e) > -1e-9, "{s:?} vs {}", r.delta_e);
        assert!((r.annihilated_norm_sq - (8.0 - r.excited_n)).abs() < 1e-10);
        assert!((r.created_norm_sq - (8.0 - r.excited_nm1)).abs() < 1e-10);
        assert_eq!(r.k0_is_global_minimum, Some(true));
    }

    #[test]
    fn lanczos_and_dense_agree() {
        let m = one_pair(8);
        let dense = binding_from_ed(&m, &EigenSettings::default()).unwrap();
        let iter = binding_from_ed(&m, &EigenSettings::default().iterative()).unwrap();
        assert_eq!(iter.method, SolveMethod::Lanczos);
        assert!((dense.delta_e - iter.delta_e).abs() < 1e-9);
    }
}
