use super::basis::{FockBasis, Sector};
use super::hamiltonian::annihilate;
use super::FockError;
use crate::model::Momentum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// N₊ = Σ_{p≠0} a_p*a_p.
    ExcitedNumber,
    ExcitedNumberSquared,
    /// Component `axis` of the total lattice momentum Σ n_p p (integer
    /// coordinates; multiply by 2π for the physical value).
    TotalMomentum { axis: usize },
    /// a_p*a_p.
    Occupation(Momentum),
    /// a_p a_{−p}. On an N-particle basis this is evaluated on the
    /// excitation-map image U_N v.
    Pairing(Momentum),
}

fn check_len(basis: &FockBasis, state: &[f64]) -> Result<(), FockError> {
    if basis.len() != state.len() {
        return Err(FockError::BasisMismatch(format!(
            "state has {} coefficients, basis has {} states",
            state.len(),
            basis.len()
        )));
    }
    Ok(())
}

fn mode(basis: &FockBasis, p: &Momentum) -> Result<usize, FockError> {
    basis
        .mode_index(p)
        .ok_or_else(|| FockError::BasisMismatch(format!("mode {p} is not in the basis")))
}

/// ⟨v, O v⟩.
pub fn observable_expectation(basis: &FockBasis, state: &[f64], observable: &Observable) -> Result<f64, FockError> {
    check_len(basis, state)?;
    let diagonal = |f: &dyn Fn(usize) -> f64| -> f64 { state.iter().enumerate().map(|(i, c)| c * c * f(i)).sum() };
    match observable {
        Observable::ExcitedNumber => Ok(diagonal(&|i| basis.excited_count(i) as f64)),
        Observable::ExcitedNumberSquared => Ok(diagonal(&|i| (basis.excited_count(i) as f64).powi(2))),
        Observable::TotalMomentum { axis } => {
            let d = basis.modes().first().map_or(0, Momentum::dim);
            if *axis >= d {
                return Err(FockError::BasisMismatch(format!("axis {axis} out of range for dimension {d}")));
            }
            Ok(diagonal(&|i| basis.total_momentum(i).coords()[*axis] as f64))
        }
        Observable::Occupation(p) => {
            let ip = mode(basis, p)?;
            Ok(diagonal(&|i| basis.state(i)[ip] as f64))
        }
        Observable::Pairing(p) => pairing(basis, state, p),
    }
}

fn pairing(basis: &FockBasis, state: &[f64], p: &Momentum) -> Result<f64, FockError> {
    if p.is_zero() {
        return Err(FockError::BasisMismatch("pairing is defined for p ≠ 0".into()));
    }
    let ip = mode(basis, p)?;
    let im = mode(basis, &-p)?;
    let zero = match basis.sector() {
        Sector::Particles(_) => Some(
            basis
                .zero_mode()
                .ok_or_else(|| FockError::BasisMismatch("pairing on an N-particle basis needs the zero mode".into()))?,
        ),
        Sector::Excitations { .. } => None,
    };
    let mut total = 0.0;
    let mut occ = vec![0u32; basis.n_modes()];
    for (s, &cs) in state.iter().enumerate() {
        if cs == 0.0 {
            continue;
        }
        occ.copy_from_slice(basis.state(s));
        let amp = annihilate(&mut occ, im) * annihilate(&mut occ, ip);
        if amp == 0.0 {
            continue;
        }
        if let Some(z) = zero {
            // the stripped condensate quanta are restored with unit weight
            occ[z] += 2;
        }
        if let Some(t) = basis.find(&occ) {
            total += state[t] * amp * cs;
        }
    }
    Ok(total)
}

/// U_N: maps an N-particle state to the excitation space F₊^{≤N} by
/// stripping the condensate quanta, (n₀ = N − n, n₊) ↦ n₊, coefficients
/// unchanged. Returns the target basis (nonzero modes, at most N
/// excitations, same momentum sector) and the image.
pub fn excitation_map(basis: &FockBasis, state: &[f64]) -> Result<(FockBasis, Vec<f64>), FockError> {
    check_len(basis, state)?;
    let Sector::Particles(n) = basis.sector() else {
        return Err(FockError::BasisMismatch("excitation map needs an N-particle basis".into()));
    };
    let zero = basis
        .zero_mode()
        .ok_or_else(|| FockError::BasisMismatch("excitation map needs the zero mode".into()))?;
    let modes: Vec<Momentum> = basis.modes().iter().filter(|p| !p.is_zero()).cloned().collect();
    let target = FockBasis::enumerate(&modes, Sector::Excitations { max: n }, basis.momentum_sector())?;
    let image = map_into(basis, state, zero, &target)?;
    Ok((target, image))
}

/// U_N into a caller-provided excitation basis; states with more than the
/// target's excitation cutoff are an error.
pub fn excitation_map_into(basis: &FockBasis, state: &[f64], target: &FockBasis) -> Result<Vec<f64>, FockError> {
    check_len(basis, state)?;
    let zero = basis
        .zero_mode()
        .ok_or_else(|| FockError::BasisMismatch("excitation map needs the zero mode".into()))?;
    map_into(basis, state, zero, target)
}

fn map_into(basis: &FockBasis, state: &[f64], zero: usize, target: &FockBasis) -> Result<Vec<f64>, FockError> {
    let expected: Vec<&Momentum> = basis.modes().iter().filter(|p| !p.is_zero()).collect();
    if target.modes().iter().collect::<Vec<_>>() != expected {
        return Err(FockError::BasisMismatch("excitation basis has a different mode set".into()));
    }
    let mut image = vec![0.0; target.len()];
    let mut stripped = Vec::with_capacity(target.n_modes());
    for (s, &c) in state.iter().enumerate() {
        stripped.clear();
        stripped.extend(basis.state(s).iter().enumerate().filter(|&(j, _)| j != zero).map(|(_, &x)| x));
        match target.find(&stripped) {
            Some(t) => image[t] = c,
            None if c == 0.0 => {}
            None => {
                return Err(FockError::BasisMismatch("excitation image lies outside the target basis".into()));
            }
        }
    }
    Ok(image)
}
