//! N-sweeps of the binding energy: ED against the Bogoliubov prediction.
//!
//! For each N the residual r(N) = N·(ΔE − λ(N−1)ŵ(0)) is compared with
//! e_B − D summed over exactly the ED mode set, and r(N) is extrapolated
//! in 1/N. The 1/N (or 1/N + 1/N²) rate is a fit hypothesis; nothing
//! beyond r(N) → e_B − D is claimed for it.

use crate::bogoliubov::{self, BogoliubovSolution};
use crate::fock::{
    binding_solve, build_bogoliubov_hamiltonian, excitation_map, lowest_eigenpairs, EigenSettings, FockBasis,
    SandwichBounds, Sector,
};
use crate::model::{Momentum, PotentialSpec, TorusModel};
use crate::Error;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Required change of the ℍ_B ground energy between cutoffs M and M+2.
pub const HB_CONVERGENCE_TOL: f64 = 1e-10;
/// Largest excitation cutoff tried for ℍ_B.
pub const HB_MAX_CUTOFF: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// r(N) = r_∞ + a/N.
    #[default]
    InverseN,
    /// r(N) = r_∞ + a/N + b/N².
    InverseNSquared,
}

fn default_coupling() -> f64 {
    1.0
}

fn default_hb_cutoff() -> usize {
    4
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Template; N and λ are set per sweep point.
    pub model: TorusModel,
    #[serde(rename = "N_values")]
    pub n_values: Vec<usize>,
    /// λ = coupling / N.
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default)]
    pub fit: FitModel,
    #[serde(default)]
    pub eigen: EigenSettings,
    /// Starting excitation cutoff M for ℍ_B; raised in steps of 2 until
    /// converged.
    #[serde(default = "default_hb_cutoff")]
    pub excitation_cutoff: usize,
    #[serde(default = "default_true")]
    pub overlaps: bool,
}

impl SweepConfig {
    pub fn new(model: TorusModel, n_values: Vec<usize>) -> Self {
        SweepConfig {
            model,
            n_values,
            coupling: 1.0,
            fit: FitModel::InverseN,
            eigen: EigenSettings::default(),
            excitation_cutoff: default_hb_cutoff(),
            overlaps: true,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_values.is_empty() {
            return Err(Error::InvalidSweep("N_values is empty".into()));
        }
        if self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::InvalidSweep("every N must be at least 2".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSweep("N_values must be strictly increasing".into()));
        }
        if !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(Error::InvalidSweep(format!("coupling {} must be finite and non-negative", self.coupling)));
        }
        self.model.validate()?;
        Ok(())
    }

    pub fn model_at(&self, n: usize) -> TorusModel {
        self.model.clone().with_particles(n).with_lambda(self.coupling / n as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    #[serde(rename = "E_N")]
    pub e_n: f64,
    #[serde(rename = "E_Nm1")]
    pub e_nm1: f64,
    #[serde(rename = "deltaE")]
    pub delta_e: f64,
    /// λ(N−1)ŵ(0).
    pub leading_term: f64,
    /// N·(ΔE − leading term).
    pub residual_r: f64,
    pub prediction: f64,
    pub abs_err: f64,
    pub converged: bool,
    pub residual_norm: f64,
    pub nondegenerate: bool,
    pub sandwich: Option<SandwichBounds>,
    pub excited_mean: f64,
    pub excited_second_moment: f64,
    /// |⟨U_NΨ_N, Φ⟩| with Φ the truncated quasi-free ground state.
    pub overlap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub r_inf: f64,
    pub a: f64,
    pub b: Option<f64>,
    /// max |r(N) − fit(N)| over the fitted points.
    pub max_deviation: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HbSummary {
    pub ground_energy: f64,
    pub excitation_cutoff: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub coupling: f64,
    pub records: Vec<StudyRecord>,
    /// e_B − D over the ED mode set.
    pub prediction: f64,
    pub e_b: f64,
    pub depletion: f64,
    /// e_B − D over the whole lattice, for reference.
    pub full_lattice_prediction: f64,
    pub fit: Option<FitResult>,
    /// Why no fit was produced, if none was.
    pub fit_error: Option<String>,
    pub hb: Option<HbSummary>,
}

/// Potential seen by the Bogoliubov theory when λN = c.
fn scaled_potential(spec: &PotentialSpec, c: f64) -> PotentialSpec {
    if c == 1.0 {
        return spec.clone();
    }
    PotentialSpec::from_entries(spec.entries().map(|(p, w)| (p.clone(), c * w))).with_offset_log(spec.offset_log())
}

fn truncated_solution(model: &TorusModel) -> Result<BogoliubovSolution, Error> {
    Ok(bogoliubov::solve(model)?)
}

/// e_B − D with both sums over the nonzero modes of the model's mode set.
pub fn consistent_truncation_prediction(model: &TorusModel) -> Result<f64, Error> {
    Ok(truncated_solution(model)?.binding_coefficient())
}

pub fn run_binding_study(config: &SweepConfig) -> Result<StudyReport, Error> {
    config.validate()?;
    let effective = config.model.clone().with_potential(scaled_potential(&config.model.potential, config.coupling));
    let solution = truncated_solution(&effective)?;
    let prediction = solution.binding_coefficient();
    let full = bogoliubov::solve_full_lattice(&effective.potential)?;

    let hb = if config.overlaps {
        Some(hb_ground_state(&effective, config.excitation_cutoff, &config.eigen)?)
    } else {
        None
    };

    let records = config
        .n_values
        .par_iter()
        .map(|&n| study_point(config, n, prediction, hb.as_ref()))
        .collect::<Result<Vec<_>, Error>>()?;

    let (fit, fit_error) = match extrapolate_residual(&records, config.fit) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(StudyReport {
        coupling: config.coupling,
        records,
        prediction,
        e_b: solution.e_b,
        depletion: solution.depletion,
        full_lattice_prediction: full.binding_coefficient(),
        fit,
        fit_error,
        hb: hb.map(|h| HbSummary {
            ground_energy: h.energy,
            excitation_cutoff: h.cutoff,
            converged: h.converged,
        }),
    })
}

fn study_point(config: &SweepConfig, n: usize, prediction: f64, hb: Option<&HbGroundState>) -> Result<StudyRecord, Error> {
    let model = config.model_at(n);
    let (r, sector) = binding_solve(&model, &config.eigen)?;
    let leading = model.lambda * (n as f64 - 1.0) * model.w_hat_zero();
    let residual_r = n as f64 * (r.delta_e - leading);
    let overlap = match hb {
        Some(hb) if r.nondegenerate => Some(quasifree_overlap(&sector.basis, sector.ed.ground_vector(), hb)?),
        _ => None,
    };
    Ok(StudyRecord {
        n,
        lambda: model.lambda,
        e_n: r.e_n,
        e_nm1: r.e_nm1,
        delta_e: r.delta_e,
        leading_term: leading,
        residual_r,
        prediction,
        abs_err: (residual_r - prediction).abs(),
        converged: r.converged,
        residual_norm: r.residual_norm,
        nondegenerate: r.nondegenerate,
        sandwich: r.sandwich,
        excited_mean: r.excited_n,
        excited_second_moment: r.excited_sq_n,
        overlap,
    })
}

/// Least-squares fit of r(N) over the converged records.
pub fn extrapolate_residual(records: &[StudyRecord], model: FitModel) -> Result<FitResult, Error> {
    let points: Vec<(usize, f64)> = records.iter().filter(|r| r.converged).map(|r| (r.n, r.residual_r)).collect();
    fit_inverse_powers(&points, model)
}

/// Fits r(N) = r_∞ + a/N (+ b/N²) to (N, r) points; at least three are
/// required.
pub fn fit_inverse_powers(points: &[(usize, f64)], model: FitModel) -> Result<FitResult, Error> {
    let cols = match model {
        FitModel::InverseN => 2,
        FitModel::InverseNSquared => 3,
    };
    if points.len() < 3.max(cols) {
        return Err(Error::RankDeficient(format!("{} converged points, need at least {}", points.len(), 3.max(cols))));
    }
    let design = DMatrix::from_fn(points.len(), cols, |i, j| (points[i].0 as f64).powi(-(j as i32)));
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.rank(smax * 1e-12);
    if rank < cols {
        return Err(Error::RankDeficient(format!("design matrix has rank {rank} < {cols}")));
    }
    let coef = svd
        .solve(&rhs, smax * 1e-12)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let fitted = &design * &coef;
    let max_deviation = fitted.iter().zip(rhs.iter()).map(|(f, r)| (f - r).abs()).fold(0.0, f64::max);
    Ok(FitResult {
        model,
        r_inf: coef[0],
        a: coef[1],
        b: (cols == 3).then(|| coef[2]),
        max_deviation,
        points: points.len(),
    })
}

/// Ground state of ℍ_B in the K=0 sector of the excitation space.
#[derive(Clone, Debug)]
pub struct HbGroundState {
    pub basis: FockBasis,
    pub vector: Vec<f64>,
    pub energy: f64,
    pub cutoff: usize,
    /// Energy at cutoffs M and M+2 agreed within [`HB_CONVERGENCE_TOL`].
    pub converged: bool,
}

/// Solves ℍ_B over the model's nonzero modes, raising the excitation
/// cutoff from `start` in steps of 2 until the ground energy settles.
pub fn hb_ground_state(model: &TorusModel, start: usize, settings: &EigenSettings) -> Result<HbGroundState, Error> {
    model.validate()?;
    let modes: Vec<Momentum> = model.mode_set()?.into_iter().filter(|p| !p.is_zero()).collect();
    let k0 = Momentum::zero(model.d);
    let solve = |m: usize| -> Result<(FockBasis, Vec<f64>, f64), Error> {
        let basis = FockBasis::enumerate(&modes, Sector::Excitations { max: m }, Some(&k0))?;
        let h = build_bogoliubov_hamiltonian(&basis, &model.potential)?;
        let ed = lowest_eigenpairs(&h, &settings.clone().with_k(1))?;
        let e = ed.ground_energy();
        Ok((basis, ed.vectors.into_iter().next().unwrap_or_default(), e))
    };
    let mut m = start.max(2);
    let mut current = solve(m)?;
    loop {
        let next = solve(m + 2)?;
        let settled = (next.2 - current.2).abs() < HB_CONVERGENCE_TOL;
        if settled || m + 2 >= HB_MAX_CUTOFF {
            return Ok(HbGroundState {
                basis: next.0,
                vector: next.1,
                energy: next.2,
                cutoff: m + 2,
                converged: settled,
            });
        }
        m += 2;
        current = next;
    }
}

/// |⟨U_NΨ_N, Φ⟩| where Φ is the ℍ_B ground state restricted to at most N
/// excitations and renormalized.
pub fn quasifree_overlap(basis: &FockBasis, ground: &[f64], hb: &HbGroundState) -> Result<f64, Error> {
    let Sector::Particles(n) = basis.sector() else {
        return Err(crate::FockError::BasisMismatch("overlap needs an N-particle basis".into()).into());
    };
    let (target, image) = excitation_map(basis, ground)?;
    if target.modes() != hb.basis.modes() {
        return Err(crate::FockError::BasisMismatch("ℍ_B was solved over a different mode set".into()).into());
    }
    let mut inner = 0.0;
    let mut kept = 0.0;
    for (s, &c) in hb.vector.iter().enumerate() {
        let occ = hb.basis.state(s);
        if occ.iter().sum::<u32>() as usize > n {
            continue;
        }
        kept += c * c;
        if let Some(t) = target.find(occ) {
            inner += image[t] * c;
        }
    }
    if kept == 0.0 {
        return Ok(0.0);
    }
    Ok((inner / kept.sqrt()).abs().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn record(n: usize, r: f64) -> StudyRecord {
        StudyRecord {
            n,
            lambda: 1.0 / n as f64,
            e_n: 0.0,
            e_nm1: 0.0,
            delta_e: 0.0,
            leading_term: 0.0,
            residual_r: r,
            prediction: 0.0,
            abs_err: 0.0,
            converged: true,
            residual_norm: 0.0,
            nondegenerate: true,
            sandwich: None,
            excited_mean: 0.0,
            excited_second_moment: 0.0,
            overlap: None,
        }
    }

    #[test]
    fn constant_residual_fit() {
        let recs: Vec<_> = [8, 16, 32].iter().map(|&n| record(n, 0.3)).collect();
        let f = extrapolate_residual(&recs, FitModel::InverseN).unwrap();
        assert!((f.r_inf - 0.3).abs() < 1e-14);
        assert!(f.a.abs() < 1e-12);
    }

    #[test]
    fn exact_model_recovery() {
        let recs: Vec<_> = [8, 16, 32].iter().map(|&n| record(n, -0.02 + 0.5 / n as f64)).collect();
        let f = extrapolate_residual(&recs, FitModel::InverseN).unwrap();
        assert!((f.r_inf + 0.02).abs() < 1e-12);
        assert!((f.a - 0.5).abs() < 1e-12);
        let recs: Vec<_> = [4, 8, 16, 32]
            .iter()
            .map(|&n| record(n, 1.0 - 2.0 / n as f64 + 3.0 / (n * n) as f64))
            .collect();
        let f = extrapolate_residual(&recs, FitModel::InverseNSquared).unwrap();
        assert!((f.r_inf - 1.0).abs() < 1e-10 && (f.b.unwrap() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn fit_needs_three_converged_points() {
        let mut recs: Vec<_> = [8, 16, 32].iter().map(|&n| record(n, 0.1)).collect();
        recs[1].converged = false;
        assert!(matches!(extrapolate_residual(&recs, FitModel::InverseN), Err(Error::RankDeficient(_))));
        let dup = [(8, 0.1), (8, 0.2), (8, 0.3)];
        assert!(fit_inverse_powers(&dup, FitModel::InverseN).is_err());
    }

    #[test]
    fn sweep_validation() {
        let m = TorusModel::new(1, 2, PotentialSpec::zero(), 2.0 * PI + 0.1).unwrap();
        assert!(SweepConfig::new(m.clone(), vec![4, 4]).validate().is_err());
        assert!(SweepConfig::new(m.clone(), vec![1, 4]).validate().is_err());
        assert!(SweepConfig::new(m, vec![2, 3, 5]).validate().is_ok());
    }

    #[test]
    fn free_gas_study_is_all_zero() {
        let m = TorusModel::new(1, 2, PotentialSpec::zero(), 2.0 * PI + 0.1).unwrap();
        let rep = run_binding_study(&SweepConfig::new(m, vec![2, 3, 4])).unwrap();
        for r in &rep.records {
            assert_eq!((r.delta_e, r.residual_r, r.prediction), (0.0, 0.0, 0.0));
            assert_eq!(r.overlap, Some(1.0));
        }
    }

    #[test]
    fn zero_mode_only_has_zero_residual() {
        let m = TorusModel::new(1, 2, PotentialSpec::constant(1, 0.8), 2.0 * PI + 0.1).unwrap();
        let rep = run_binding_study(&SweepConfig::new(m, vec![2, 4, 6])).unwrap();
        for r in &rep.records {
            assert!(r.residual_r.abs() < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn consistent_prediction_one_pair() {
        let m = TorusModel::new(1, 8, PotentialSpec::pair(Momentum::new([1]), 1.0), 2.0 * PI + 0.1).unwrap();
        let p = consistent_truncation_prediction(&m).unwrap();
        assert!((p + 0.024_406_768_754_668_77).abs() < 1e-15);
    }
}
