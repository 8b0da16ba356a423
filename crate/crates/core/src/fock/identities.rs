//! Numerical residuals of two operator identities used in the binding
//! energy bounds.
//!
//! (a) The double commutator with the zero mode,
//!
//! ```text
//! [a₀, [H, a₀*]] = λ Σ_{p≠0} ŵ(p) a_p*a_p + λŵ(0)(N + a₀*a₀),
//! ```
//!
//! which closes exactly on a truncated mode set containing 0.
//!
//! (b) For an eigenpair (E, Ψ): ⟨N₊Ψ, (H−E)N₊Ψ⟩ = ⟨N₊Ψ, [H, N₊]Ψ⟩.

use super::basis::{FockBasis, Sector};
use super::eigen::{lowest_eigenpairs, EigenSettings};
use super::hamiltonian::{build_hamiltonian, excited_number_diagonal, ladder_operator, Ladder};
use super::operator::dot;
use super::FockError;
use crate::model::{Momentum, TorusModel};
use serde::{Deserialize, Serialize};

/// Largest basis used in the dense products of identity (a).
pub const MAX_DENSE_DIM: usize = 2500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// Frobenius norm of the double-commutator residual on the N-particle space.
    pub double_commutator: f64,
    /// |⟨N₊Ψ,(H−E)N₊Ψ⟩ − ⟨N₊Ψ,[H,N₊]Ψ⟩| for the K=0 ground pair.
    pub ground_state_identity: f64,
    /// The same, divided by |⟨N₊Ψ, H N₊Ψ⟩| (left absolute when that vanishes).
    pub ground_state_identity_relative: f64,
}

pub fn operator_identity_residuals(model: &TorusModel, settings: &EigenSettings) -> Result<IdentityResiduals, FockError> {
    model.validate()?;
    Ok(IdentityResiduals {
        double_commutator: double_commutator_residual(model)?,
        ..ground_state_residual(model, settings)?
    })
}

fn double_commutator_residual(model: &TorusModel) -> Result<f64, FockError> {
    let modes = model.mode_set()?;
    let zero = modes
        .iter()
        .position(Momentum::is_zero)
        .ok_or_else(|| FockError::BasisMismatch("identity needs the zero mode".into()))?;
    let n = model.n;
    let basis = |m: usize| FockBasis::enumerate_with_limit(&modes, Sector::Particles(m), None, MAX_DENSE_DIM);
    let (lo, mid, hi) = (basis(n - 1)?, basis(n)?, basis(n + 1)?);
    let h = |b: &FockBasis| -> Result<_, FockError> { Ok(build_hamiltonian(model, b)?.to_dense()) };
    let (h_lo, h_mid, h_hi) = (h(&lo)?, h(&mid)?, h(&hi)?);
    let create_lo = ladder_operator(&lo, &mid, zero, Ladder::Create)?.to_dense();
    let create_mid = ladder_operator(&mid, &hi, zero, Ladder::Create)?.to_dense();
    let annihilate_mid = ladder_operator(&mid, &lo, zero, Ladder::Annihilate)?.to_dense();
    let annihilate_hi = ladder_operator(&hi, &mid, zero, Ladder::Annihilate)?.to_dense();

    // [H, a₀*] restricted to N → N+1 and N−1 → N
    let comm_mid = &h_hi * &create_mid - &create_mid * &h_mid;
    let comm_lo = &h_mid * &create_lo - &create_lo * &h_lo;
    let mut residual = &annihilate_hi * comm_mid - comm_lo * annihilate_mid;

    let w: Vec<f64> = modes.iter().map(|p| model.w_hat(p)).collect();
    let w0 = model.w_hat_zero();
    for s in 0..mid.len() {
        let occ = mid.state(s);
        let mut expected: f64 = occ
            .iter()
            .zip(&w)
            .enumerate()
            .filter(|&(j, _)| j != zero)
            .map(|(_, (&c, w))| c as f64 * w)
            .sum();
        expected += w0 * (n as f64 + occ[zero] as f64);
        residual[(s, s)] -= model.lambda * expected;
    }
    Ok(residual.norm())
}

fn ground_state_residual(model: &TorusModel, settings: &EigenSettings) -> Result<IdentityResiduals, FockError> {
    let modes = model.mode_set()?;
    let k0 = Momentum::zero(model.d);
    let basis = FockBasis::enumerate(&modes, Sector::Particles(model.n), Some(&k0))?;
    let h = build_hamiltonian(model, &basis)?;
    let ed = lowest_eigenpairs(&h, &settings.clone().with_k(1))?;
    let (e, psi) = (ed.ground_energy(), ed.ground_vector());
    let n_plus = excited_number_diagonal(&basis);
    let u: Vec<f64> = psi.iter().zip(&n_plus).map(|(c, n)| c * n).collect();
    let hu = h.apply(&u);
    let hpsi = h.apply(psi);
    let n_plus_u: Vec<f64> = u.iter().zip(&n_plus).map(|(c, n)| c * n).collect();
    let u_hu = dot(&u, &hu);
    let lhs = u_hu - e * dot(&u, &u);
    let rhs = u_hu - dot(&n_plus_u, &hpsi);
    let abs = (lhs - rhs).abs();
    Ok(IdentityResiduals {
        double_commutator: 0.0,
        ground_state_identity: abs,
        ground_state_identity_relative: if u_hu == 0.0 { abs } else { abs / u_hu.abs() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PotentialSpec;
    use std::f64::consts::PI;

    fn model(potential: PotentialSpec, n: usize) -> TorusModel {
        TorusModel::new(1, n, potential, 2.0 * PI + 0.1).unwrap()
    }

    #[test]
    fn free_gas_is_exact() {
        let r = operator_identity_residuals(&model(PotentialSpec::zero(), 3), &EigenSettings::default()).unwrap();
        assert_eq!(r.double_commutator, 0.0);
        assert_eq!(r.ground_state_identity, 0.0);
    }

    #[test]
    fn one_pair_model() {
        let m = model(PotentialSpec::pair(Momentum::new([1]), 1.0), 3);
        let r = operator_identity_residuals(&m, &EigenSettings::default()).unwrap();
        assert!(r.double_commutator < 1e-12, "{r:?}");
        assert!(r.ground_state_identity_relative < 1e-10, "{r:?}");
    }

    #[test]
    fn zero_mode_term_is_included() {
        let p = PotentialSpec::from_entries([(Momentum::new([0]), 0.7), (Momentum::new([1]), 1.0), (Momentum::new([-1]), 1.0)]);
        let m = model(p, 4).with_lambda(0.3);
        let r = operator_identity_residuals(&m, &EigenSettings::default()).unwrap();
        assert!(r.double_commutator < 1e-12, "{r:?}");
    }
}
