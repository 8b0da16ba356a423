use crate::cache::{self, Cache, Lookup};
use crate::config::{RunConfig, Workflow};
use crate::error::CliError;
use bogobind::asymptotics::{run_binding_study, StudyReport};
use bogobind::bogoliubov::{self, ModeQuantities, Predictions};
use bogobind::canonical::{self, format_f64};
use bogobind::fock::{
    binding_from_ed, binding_solve, build_hamiltonian, dense_eigenpairs, identities, lanczos_solve,
    operator_identity_residuals, sector_size, BindingResult, SparseOperator,
};
use bogobind::model::normalize_zero_mode;
use bogobind::{EigenSettings, FockBasis, Momentum, Sector, TorusModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt::Write as _;
use std::path::Path;

pub const STUDY_CSV_HEADER: &str = "N,lambda,E_N,E_Nm1,deltaE,leading_term,residual_r,prediction,abs_err,converged";
pub const MODES_CSV_HEADER: &str = "p_coords,w_hat,e_p,alpha_p,n_p,eB_summand";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSums {
    pub e_b: f64,
    pub depletion: f64,
    pub binding_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub workflow: String,
    pub model: TorusModel,
    pub e_b: f64,
    pub e_b_tail_bound: f64,
    pub depletion: f64,
    pub depletion_tail_bound: f64,
    pub binding_coefficient: f64,
    pub predictions: Predictions,
    /// C in ℍ_B ≥ ½Σ|p|²a_p*a_p − C.
    pub lower_bound_constant: f64,
    pub vacuum_overlap: f64,
    pub full_lattice: LatticeSums,
    pub modes: Vec<ModeQuantities>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdReport {
    pub workflow: String,
    pub model: TorusModel,
    pub settings: EigenSettings,
    pub binding: BindingResult,
    /// Lowest levels of the K=0 sector with N particles.
    pub eigenvalues: Vec<f64>,
    pub predictions: Predictions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckReport {
    pub workflow: String,
    pub model: TorusModel,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

pub struct Context<'a> {
    pub out: &'a Path,
    pub cache: Option<Cache>,
}

pub fn run(verb: Workflow, config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    config.check_workflow(verb)?;
    std::fs::create_dir_all(ctx.out)?;
    match verb {
        Workflow::Eval => eval(config, ctx),
        Workflow::Ed => ed(config, ctx),
        Workflow::Study => study(config, ctx),
        Workflow::Selfcheck => selfcheck(config, ctx),
    }
}

fn write_json(ctx: &Context, name: &str, value: &impl Serialize) -> Result<(), CliError> {
    let text = canonical::to_string_pretty(value).map_err(std::io::Error::other)?;
    std::fs::write(ctx.out.join(name), text)?;
    Ok(())
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Runs `compute` unless the cache holds a verified entry for `key`.
/// `compute` returns (payload, residual, converged); only converged
/// payloads are stored.
fn cached<T, F>(ctx: &Context, workflow: &str, key: &str, tol: f64, compute: F) -> Result<(T, bool), CliError>
where
    T: Serialize + for<'de> Deserialize<'de>,
    F: FnOnce() -> Result<(T, f64, bool), CliError>,
{
    if let Some(cache) = &ctx.cache {
        match cache.lookup(key) {
            Lookup::Hit(payload) => match serde_json::from_value(payload) {
                Ok(t) => {
                    eprintln!("cache hit {key}");
                    return Ok((t, true));
                }
                Err(e) => eprintln!("cache entry {key} has an unexpected shape ({e}); recomputing"),
            },
            Lookup::Discarded(why) => eprintln!("cache entry {key} discarded: {why}; recomputing"),
            Lookup::Miss => eprintln!("cache miss {key}"),
        }
    }
    let (t, residual, converged) = compute()?;
    if converged {
        if let Some(cache) = &ctx.cache {
            cache.store(key, workflow, tol, residual, &to_value(&t))?;
        }
    }
    Ok((t, converged))
}

fn eval(config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let model = config.model.build()?;
    let s = bogoliubov::solve(&model)?;
    let full = bogoliubov::solve_full_lattice(&model.potential)?;
    let report = EvalReport {
        workflow: "eval".into(),
        predictions: bogoliubov::predictions_from(&model, &s),
        lower_bound_constant: bogoliubov::hb_lower_bound_constant(&model)?,
        vacuum_overlap: s.vacuum_overlap(),
        full_lattice: LatticeSums {
            e_b: full.e_b,
            depletion: full.depletion,
            binding_coefficient: full.binding_coefficient(),
        },
        e_b: s.e_b,
        e_b_tail_bound: s.e_b_tail_bound,
        depletion: s.depletion,
        depletion_tail_bound: s.depletion_tail_bound,
        binding_coefficient: s.binding_coefficient(),
        modes: s.modes,
        model,
    };
    write_json(ctx, "report.json", &report)?;
    std::fs::write(ctx.out.join("modes.csv"), modes_csv(&report.modes))?;
    Ok(())
}

pub fn modes_csv(modes: &[ModeQuantities]) -> String {
    let mut out = format!("{MODES_CSV_HEADER}\n");
    for m in modes {
        let fields = [m.w_hat, m.e_p, m.alpha_p, m.n_p, m.eb_summand].map(format_f64);
        writeln!(out, "{},{}", m.p.label(), fields.join(",")).unwrap();
    }
    out
}

fn ed(config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let model = config.model.build()?;
    let settings = config.ed.settings()?;
    let key = cache::digest("ed", &model, &settings);
    let (report, converged) = cached(ctx, "ed", &key, settings.tol, || {
        let (binding, sector) = binding_solve(&model, &settings)?;
        let report = EdReport {
            workflow: "ed".into(),
            settings: settings.clone(),
            eigenvalues: sector.ed.eigenvalues.clone(),
            predictions: bogoliubov::predict_energies(&model)?,
            binding,
            model: model.clone(),
        };
        let (res, conv) = (report.binding.residual_norm, report.binding.converged);
        Ok((report, res, conv))
    })?;
    write_json(ctx, "report.json", &report)?;
    if !converged {
        return Err(CliError::NotConverged(format!(
            "eigen-residual {:.3e} above tolerance {:.3e}",
            report.binding.residual_norm, settings.tol
        )));
    }
    Ok(())
}

fn study(config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let sweep = config.sweep()?;
    let key = cache::digest("study", &sweep, &Value::Null);
    let (report, converged) = cached(ctx, "study", &key, sweep.eigen.tol, || {
        let report = run_binding_study(&sweep)?;
        let residual = report.records.iter().map(|r| r.residual_norm).fold(0.0, f64::max);
        let converged = report.records.iter().all(|r| r.converged);
        Ok((report, residual, converged))
    })?;
    write_json(ctx, "report.json", &report)?;
    std::fs::write(ctx.out.join("study.csv"), study_csv(&report))?;
    if !converged {
        let bad: Vec<String> = report.records.iter().filter(|r| !r.converged).map(|r| r.n.to_string()).collect();
        return Err(CliError::NotConverged(format!("records N = {} did not converge", bad.join(", "))));
    }
    Ok(())
}

pub fn study_csv(report: &StudyReport) -> String {
    let mut out = format!("{STUDY_CSV_HEADER}\n");
    for r in &report.records {
        let floats = [r.lambda, r.e_n, r.e_nm1, r.delta_e, r.leading_term, r.residual_r, r.prediction, r.abs_err]
            .map(format_f64);
        writeln!(out, "{},{},{}", r.n, floats.join(","), r.converged).unwrap();
    }
    out
}

fn selfcheck(config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let model = config.model.build()?;
    let settings = config.ed.settings()?;
    let checks = invariant_checks(&model, &settings)?;
    let passed = checks.iter().all(|c| c.pass);
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    write_json(ctx, "report.json", &SelfcheckReport { workflow: "selfcheck".into(), model, checks, passed })?;
    if !passed {
        return Err(CliError::Violation(failed.join(", ")));
    }
    Ok(())
}

fn at_most(name: &str, value: f64, threshold: f64) -> CheckOutcome {
    CheckOutcome { name: name.into(), value, threshold, pass: value <= threshold }
}

fn at_least(name: &str, value: f64, threshold: f64) -> CheckOutcome {
    CheckOutcome { name: name.into(), value, threshold, pass: value >= threshold }
}

/// The invariant suite run by `selfcheck`.
pub fn invariant_checks(model: &TorusModel, settings: &EigenSettings) -> Result<Vec<CheckOutcome>, CliError> {
    let mut out = Vec::new();
    let n = model.n;
    let modes = model.mode_set()?;
    let k0 = Momentum::zero(model.d);

    // closed forms
    let s = bogoliubov::solve(model)?;
    let worst = s
        .modes
        .iter()
        .map(|m| {
            let (w, a, k2) = (m.w_hat, m.alpha_p, m.p.norm_sq());
            let (l, r) = (w * (1.0 + a * a), 2.0 * (k2 + w) * a);
            if l == 0.0 && r == 0.0 {
                0.0
            } else {
                (l - r).abs() / l.abs().max(r.abs())
            }
        })
        .fold(0.0, f64::max);
    out.push(at_most("bogoliubov_quadratic_relation", worst, 1e-12));

    let basis = FockBasis::enumerate(&modes, Sector::Particles(n), Some(&k0))?;
    let h = build_hamiltonian(model, &basis)?;
    out.push(at_most("hamiltonian_symmetry", h.symmetry_defect(), 0.0));
    out.push(at_most("hamiltonian_hermiticity", h.hermiticity_defect(8, settings.seed), 1e-10));

    if sector_size(modes.len(), Sector::Particles(n)).is_some_and(|c| c <= 20_000) {
        let full = FockBasis::enumerate(&modes, Sector::Particles(n), None)?;
        let hf = build_hamiltonian(model, &full)?;
        out.push(at_most("momentum_block_diagonal", cross_sector_weight(&full, &hf), 0.0));
        out.push(lower_bound_check(model, &full, &hf, settings.seed));
    }

    if (2..=2000).contains(&basis.len()) {
        let dense = dense_eigenpairs(&h, 1)?;
        let iter = lanczos_solve(&h, &settings.clone().with_k(1));
        out.push(at_most("lanczos_vs_dense", (dense.ground_energy() - iter.ground_energy()).abs(), 1e-9));
    }

    if model.include_zero_mode {
        let r = binding_from_ed(model, settings)?;
        out.push(at_most("eigen_residual", r.residual_norm, settings.tol));
        let slack = r.sandwich.as_ref().map_or(0.0, |b| b.slack(r.delta_e));
        out.push(at_least("sandwich_slack", slack, -1e-9));
        let nf = n as f64;
        let norm_err = (r.annihilated_norm_sq - (nf - r.excited_n))
            .abs()
            .max((r.created_norm_sq - (nf - r.excited_nm1)).abs());
        out.push(at_most("zero_mode_norm_identities", norm_err, 1e-10));
        let trial = 0.5 * model.lambda * model.w_hat_zero() * nf * (nf - 1.0);
        out.push(at_most("constant_trial_upper_bound", r.e_n - trial, 1e-10 * trial.abs().max(1.0)));

        let (shifted, _) = normalize_zero_mode(&model.potential);
        let rs = binding_from_ed(&model.clone().with_potential(shifted), settings)?;
        let leading = model.lambda * (nf - 1.0) * model.w_hat_zero();
        let shift_err = (nf * (r.delta_e - leading) - nf * rs.delta_e).abs();
        out.push(at_most("zero_mode_shift_invariance", shift_err, 1e-9));

        if sector_size(modes.len(), Sector::Particles(n + 1)).is_some_and(|c| c <= identities::MAX_DENSE_DIM as u128) {
            let ir = operator_identity_residuals(model, settings)?;
            out.push(at_most("double_commutator_identity", ir.double_commutator, 1e-10));
            out.push(at_most("ground_state_identity", ir.ground_state_identity_relative, 1e-8));
        }
    }
    Ok(out)
}

/// Total |H_ij| between states of different total momentum.
fn cross_sector_weight(basis: &FockBasis, h: &SparseOperator) -> f64 {
    let k: Vec<Momentum> = (0..basis.len()).map(|i| basis.total_momentum(i)).collect();
    (0..h.nrows())
        .flat_map(|i| h.row(i).filter(|&(j, _)| k[i] != k[j]).map(|(_, v)| v.abs()).collect::<Vec<_>>())
        .fold(0.0, |a, b| a + b)
}

/// min over random states of ⟨H⟩ − (2π)²⟨N₊⟩ + λN Σ_p ŵ(p)/2, which must be ≥ 0.
fn lower_bound_check(model: &TorusModel, basis: &FockBasis, h: &SparseOperator, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_sum: f64 = model.potential.support().map(|(_, w)| w).sum();
    let constant = 0.5 * model.lambda * model.n as f64 * w_sum;
    let gap = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    let mut worst = f64::INFINITY;
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let n_plus: f64 = v.iter().enumerate().map(|(i, c)| c * c * basis.excited_count(i) as f64).sum();
        worst = worst.min(h.quadratic_form(&v) - gap * n_plus + constant);
    }
    at_least("kinetic_gap_lower_bound", worst, -1e-9)
}
