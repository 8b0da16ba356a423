//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use bogobind::asymptotics::{hb_ground_state, run_binding_study, SweepConfig};
use bogobind::bogoliubov::{self, mode_quantities};
use bogobind::fock::{
    binding_from_ed, build_bogoliubov_hamiltonian, build_hamiltonian, dense_eigenpairs, lanczos_solve,
    observable_expectation, operator_identity_residuals, EigenSettings, FockBasis, Observable, Sector,
};
use bogobind::{Momentum, PotentialSpec, TorusModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const SHELL_1: f64 = 2.0 * PI + 0.1;
const SHELL_2: f64 = 4.0 * PI + 0.1;

fn one_pair(n: usize) -> TorusModel {
    TorusModel::new(1, n, PotentialSpec::pair(Momentum::new([1]), 1.0), SHELL_1).unwrap()
}

fn two_band(n: usize) -> TorusModel {
    let p = PotentialSpec::band(1, SHELL_2, 1.0, false).unwrap();
    TorusModel::new(1, n, p, SHELL_2).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = f();
    let elapsed = t.elapsed();
    let pass = out.pass && elapsed <= budget;
    println!(
        "[{}] {id} {name}: {} ({:.2} s, budget {} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn algebraic_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_rel: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..200 {
        let d = rng.random_range(1..=3);
        let p = loop {
            let c: Vec<i32> = (0..d).map(|_| rng.random_range(-5..=5)).collect();
            if c.iter().any(|&x| x != 0) {
                break Momentum::new(c);
            }
        };
        let w = rng.random_range(0.0..=10.0);
        let m = mode_quantities(&p, w).unwrap();
        let k2 = p.norm_sq();
        let a = m.alpha_p;
        let lhs = w * (1.0 + a * a);
        let rhs = 2.0 * (k2 + w) * a;
        let scale = lhs.abs().max(rhs.abs());
        let rel = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
        worst_rel = worst_rel.max(rel);
        let ok = rel <= 1e-12
            && (0.0..1.0).contains(&a)
            && k2 * a * a <= w * w
            && (0.0..=w * w / (2.0 * k2)).contains(&m.eb_summand);
        failures += usize::from(!ok);
    }
    Outcome {
        pass: failures == 0,
        detail: format!("200 modes, {failures} violations, worst quadratic-relation error {worst_rel:.1e}"),
    }
}

fn hb_diagonalization() -> Outcome {
    let model = one_pair(8);
    let e_b = bogoliubov::solve(&model).unwrap().e_b;
    let e_p = bogoliubov::solve(&model).unwrap().modes[0].e_p;
    let hb = hb_ground_state(&model, 4, &EigenSettings::default()).unwrap();
    let ground_err = (hb.energy - e_b).abs();

    // all momentum sectors, so that one-quasiparticle levels appear
    let modes = vec![Momentum::new([-1]), Momentum::new([1])];
    let basis = FockBasis::enumerate(&modes, Sector::Excitations { max: 16 }, None).unwrap();
    let h = build_bogoliubov_hamiltonian(&basis, &model.potential).unwrap();
    let ed = dense_eigenpairs(&h, 5).unwrap();
    let expected = [e_b, e_b + e_p, e_b + e_p, e_b + 2.0 * e_p, e_b + 2.0 * e_p];
    let level_err = ed.eigenvalues.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Outcome {
        pass: hb.converged && ground_err < 1e-8 && level_err < 1e-6,
        detail: format!(
            "ground {:.10} vs e_B {e_b:.10} (M={}, |diff| {ground_err:.1e}); 5 levels max err {level_err:.1e}",
            hb.energy, hb.cutoff
        ),
    }
}

fn quasifree_expectations() -> Outcome {
    let model = one_pair(8);
    let q = bogoliubov::solve(&model).unwrap().modes[0].clone();
    let hb = hb_ground_state(&model, 4, &EigenSettings::default()).unwrap();
    let p = Momentum::new([1]);
    let n_p = observable_expectation(&hb.basis, &hb.vector, &Observable::Occupation(p.clone())).unwrap();
    let m_p = observable_expectation(&hb.basis, &hb.vector, &Observable::Pairing(p)).unwrap();
    let (en, em) = ((n_p - q.n_p).abs(), (m_p - q.m_p).abs());
    Outcome {
        pass: en < 1e-6 && em < 1e-6,
        detail: format!("n_p {n_p:.8e} (err {en:.1e}), pairing {m_p:.8e} (err {em:.1e})"),
    }
}

fn operator_identities() -> Outcome {
    let r = operator_identity_residuals(&one_pair(3), &EigenSettings::default()).unwrap();
    Outcome {
        pass: r.double_commutator < 1e-12 && r.ground_state_identity_relative < 1e-10,
        detail: format!(
            "double commutator {:.1e}, ground-state identity {:.1e} (relative)",
            r.double_commutator, r.ground_state_identity_relative
        ),
    }
}

fn variational_sandwich() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for model in [one_pair as fn(usize) -> TorusModel, two_band] {
        for n in [4, 8, 16] {
            let r = binding_from_ed(&model(n), &EigenSettings::default()).unwrap();
            let slack = r.sandwich.as_ref().map_or(f64::NEG_INFINITY, |s| s.slack(r.delta_e));
            worst = worst.min(slack);
            count += 1;
        }
    }
    Outcome {
        pass: worst >= -1e-9,
        detail: format!("{count} cases, minimum slack {worst:.3e}"),
    }
}

fn binding_asymptotics() -> Outcome {
    let report = run_binding_study(&SweepConfig::new(one_pair(8), vec![8, 16, 24, 32, 48])).unwrap();
    let errs: Vec<f64> = report.records.iter().map(|r| r.abs_err).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let converged = report.records.iter().all(|r| r.converged);
    let pred = report.prediction;
    let (r_inf, fit_ok) = match &report.fit {
        Some(f) => (f.r_inf, (f.r_inf - pred).abs() <= 0.05 * pred.abs()),
        None => (f64::NAN, false),
    };
    let rs: Vec<String> = report.records.iter().map(|r| format!("{:.7}", r.residual_r)).collect();
    Outcome {
        pass: monotone && converged && fit_ok,
        detail: format!("r(N) = [{}], r_inf {r_inf:.7} vs prediction {pred:.7}", rs.join(", ")),
    }
}

fn moment_boundedness() -> Outcome {
    let mut means = Vec::new();
    let mut squares = Vec::new();
    for n in [4, 8, 16, 32] {
        let r = binding_from_ed(&one_pair(n), &EigenSettings::default()).unwrap();
        means.push(r.excited_n);
        squares.push(r.excited_sq_n);
    }
    let bounded = |v: &[f64]| v[3] <= 1.2 * v[..3].iter().cloned().fold(f64::MIN, f64::max);
    Outcome {
        pass: bounded(&means) && bounded(&squares),
        detail: format!("<N+> {means:.5?}, <N+^2> {squares:.5?}"),
    }
}

fn zero_mode_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=10 {
        let m = TorusModel::new(1, n, PotentialSpec::constant(1, 1.7), SHELL_1).unwrap();
        let r = binding_from_ed(&m, &EigenSettings::default()).unwrap();
        worst = worst.max((r.delta_e - m.lambda * (n as f64 - 1.0) * 1.7).abs());
    }
    Outcome {
        pass: worst < 1e-10,
        detail: format!("N = 2..10, max |ΔE − λ(N−1)ŵ(0)| {worst:.1e}"),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut cases: Vec<(TorusModel, usize)> = Vec::new();
    for n in [3, 4, 8, 16, 24, 32, 48] {
        cases.push((one_pair(n), n));
        cases.push((one_pair(n), n - 1));
    }
    for n in [4, 8, 16] {
        cases.push((two_band(n), n));
        cases.push((two_band(n), n - 1));
    }
    let k0 = Momentum::new([0]);
    let settings = EigenSettings::default().with_k(2).iterative();
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    for (model, n) in &cases {
        let modes = model.mode_set().unwrap();
        for k in [Some(&k0), None] {
            let basis = FockBasis::enumerate(&modes, Sector::Particles(*n), k).unwrap();
            if basis.len() > 2000 || basis.len() < 2 {
                continue;
            }
            let h = build_hamiltonian(model, &basis).unwrap();
            let dense = dense_eigenpairs(&h, 2).unwrap();
            let iter = lanczos_solve(&h, &settings);
            for (a, b) in dense.eigenvalues.iter().zip(&iter.eigenvalues) {
                worst = worst.max((a - b).abs());
            }
            tested += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("{tested} bases, max |Lanczos − dense| {worst:.1e}"),
    }
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        check(1, "algebraic identity suite", s(1), algebraic_identities),
        check(2, "Bogoliubov Hamiltonian diagonalization", s(5), hb_diagonalization),
        check(3, "quasi-free expectations", s(5), quasifree_expectations),
        check(4, "operator identities", s(5), operator_identities),
        check(5, "variational sandwich", s(60), variational_sandwich),
        check(6, "binding energy at desk scale", s(300), binding_asymptotics),
        check(7, "moment boundedness", s(120), moment_boundedness),
        check(8, "zero-mode exactness", s(10), zero_mode_exactness),
        check(9, "oracle equivalence", s(60), oracle_equivalence),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
