//! Second-quantized operators as sparse matrices on enumerated bases.

use super::basis::{FockBasis, Sector};
use super::operator::SparseOperator;
use super::FockError;
use crate::model::{Momentum, PotentialSpec, TorusModel};
use std::collections::HashMap;

/// a_i on an occupation vector: returns √n and lowers n, or 0.
#[inline]
pub(crate) fn annihilate(occ: &mut [u32], i: usize) -> f64 {
    let n = occ[i];
    if n == 0 {
        return 0.0;
    }
    occ[i] = n - 1;
    (n as f64).sqrt()
}

/// a_i* on an occupation vector: raises n and returns √(n+1).
#[inline]
pub(crate) fn create(occ: &mut [u32], i: usize) -> f64 {
    occ[i] += 1;
    (occ[i] as f64).sqrt()
}

/// One normal-ordered interaction term a*_{out1} a*_{out2} a_{in1} a_{in2}.
#[derive(Clone, Copy, Debug)]
struct ScatteringTerm {
    out1: usize,
    out2: usize,
    coefficient: f64,
}

/// For each ordered pair (p, q) of mode indices, the terms
/// (λ/2) ŵ(ℓ) a*_{p−ℓ} a*_{q+ℓ} a_p a_q with ℓ ≠ 0 and both outgoing
/// momenta inside the mode set.
fn scattering_table(modes: &[Momentum], potential: &PotentialSpec, lambda: f64) -> Vec<Vec<ScatteringTerm>> {
    let lookup: HashMap<&Momentum, usize> = modes.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let support: Vec<(&Momentum, f64)> = potential.support().filter(|(l, _)| !l.is_zero()).collect();
    let m = modes.len();
    let mut table = vec![Vec::new(); m * m];
    for (ip, p) in modes.iter().enumerate() {
        for (iq, q) in modes.iter().enumerate() {
            for &(l, w) in &support {
                let (Some(&out1), Some(&out2)) = (lookup.get(&(p - l)), lookup.get(&(q + l))) else {
                    continue;
                };
                table[ip * m + iq].push(ScatteringTerm { out1, out2, coefficient: 0.5 * lambda * w });
            }
        }
    }
    table
}

fn check_modes(basis: &FockBasis, modes: &[Momentum]) -> Result<(), FockError> {
    if basis.modes() != modes {
        return Err(FockError::BasisMismatch("basis was built over a different mode set".into()));
    }
    Ok(())
}

/// Matrix of Σ_p |p|² a_p*a_p + (λ/2) Σ_{p,q,ℓ} ŵ(ℓ) a*_{p−ℓ}a*_{q+ℓ}a_p a_q
/// on an N-particle basis, all momenta restricted to the model's mode set.
///
/// The ℓ = 0 part is the diagonal constant λŵ(0)N(N−1)/2.
pub fn build_hamiltonian(model: &TorusModel, basis: &FockBasis) -> Result<SparseOperator, FockError> {
    model.validate()?;
    check_modes(basis, &model.mode_set()?)?;
    let Sector::Particles(n) = basis.sector() else {
        return Err(FockError::BasisMismatch("Hamiltonian needs an N-particle basis".into()));
    };
    if basis.len() > u32::MAX as usize {
        return Err(FockError::TooLarge { count: basis.len() as u128, limit: u32::MAX as usize });
    }
    let modes = basis.modes();
    let m = modes.len();
    let kinetic: Vec<f64> = modes.iter().map(Momentum::norm_sq).collect();
    let nf = n as f64;
    let zero_mode_energy = 0.5 * model.lambda * model.w_hat_zero() * nf * (nf - 1.0);
    let table = scattering_table(modes, &model.potential, model.lambda);

    let op = SparseOperator::symmetric_from_columns(basis.len(), |s| {
        let state = basis.state(s);
        let diag: f64 = state.iter().zip(&kinetic).map(|(&c, k)| c as f64 * k).sum::<f64>() + zero_mode_energy;
        let mut column = vec![(s, diag)];
        let mut occ = state.to_vec();
        for ip in 0..m {
            for iq in 0..m {
                if state[ip] == 0 || state[iq] == 0 || (ip == iq && state[ip] < 2) {
                    continue;
                }
                for term in &table[ip * m + iq] {
                    occ.copy_from_slice(state);
                    let mut amp = annihilate(&mut occ, iq);
                    amp *= annihilate(&mut occ, ip);
                    amp *= create(&mut occ, term.out2);
                    amp *= create(&mut occ, term.out1);
                    let t = basis.find(&occ).expect("interaction conserves N and total momentum");
                    column.push((t, term.coefficient * amp));
                }
            }
        }
        column
    });
    Ok(op)
}

/// ℍ_B = Σ_{p≠0} [(|p|²+ŵ(p)) a_p*a_p + ½ŵ(p)(a_p*a_{−p}* + a_p a_{−p})] on an
/// excitation basis over nonzero modes. Pair creations leaving the basis
/// are dropped.
pub fn build_bogoliubov_hamiltonian(basis: &FockBasis, potential: &PotentialSpec) -> Result<SparseOperator, FockError> {
    let modes = basis.modes();
    if modes.iter().any(Momentum::is_zero) {
        return Err(FockError::BasisMismatch("Bogoliubov Hamiltonian acts on nonzero modes only".into()));
    }
    if !matches!(basis.sector(), Sector::Excitations { .. }) {
        return Err(FockError::BasisMismatch("Bogoliubov Hamiltonian needs an excitation basis".into()));
    }
    let lookup: HashMap<&Momentum, usize> = modes.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut partner = Vec::with_capacity(modes.len());
    for p in modes {
        let Some(&j) = lookup.get(&-p) else {
            return Err(FockError::BasisMismatch(format!("mode set lacks the partner of {p}")));
        };
        partner.push(j);
    }
    let w: Vec<f64> = modes.iter().map(|p| potential.get(p)).collect();
    let diag_coeff: Vec<f64> = modes.iter().zip(&w).map(|(p, w)| p.norm_sq() + w).collect();

    Ok(SparseOperator::symmetric_from_columns(basis.len(), |s| {
        let state = basis.state(s);
        let diag: f64 = state.iter().zip(&diag_coeff).map(|(&c, a)| c as f64 * a).sum();
        let mut column = vec![(s, diag)];
        let mut occ = state.to_vec();
        for (i, &j) in partner.iter().enumerate() {
            if w[i] == 0.0 {
                continue;
            }
            let half = 0.5 * w[i];
            occ.copy_from_slice(state);
            let amp = create(&mut occ, j) * create(&mut occ, i);
            if let Some(t) = basis.find(&occ) {
                column.push((t, half * amp));
            }
            occ.copy_from_slice(state);
            let amp = annihilate(&mut occ, j) * annihilate(&mut occ, i);
            if amp != 0.0 {
                let t = basis.find(&occ).expect("pair annihilation stays in the basis");
                column.push((t, half * amp));
            }
        }
        column
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Matrix of a_i or a_i* from `from` into `to`.
pub fn ladder_operator(from: &FockBasis, to: &FockBasis, mode: usize, kind: Ladder) -> Result<SparseOperator, FockError> {
    if from.modes() != to.modes() {
        return Err(FockError::BasisMismatch("ladder operator between different mode sets".into()));
    }
    let mut triplets = Vec::new();
    let mut occ = vec![0u32; from.n_modes()];
    for s in 0..from.len() {
        occ.copy_from_slice(from.state(s));
        let amp = match kind {
            Ladder::Create => create(&mut occ, mode),
            Ladder::Annihilate => annihilate(&mut occ, mode),
        };
        if amp == 0.0 {
            continue;
        }
        match to.find(&occ) {
            Some(t) => triplets.push((t, s, amp)),
            None => {
                if matches!(to.sector(), Sector::Particles(_)) {
                    return Err(FockError::BasisMismatch("ladder image lies outside the target basis".into()));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(to.len(), from.len(), triplets))
}

/// Diagonal of Σ_{p≠0} a_p*a_p.
pub fn excited_number_diagonal(basis: &FockBasis) -> Vec<f64> {
    (0..basis.len()).map(|i| basis.excited_count(i) as f64).collect()
}
