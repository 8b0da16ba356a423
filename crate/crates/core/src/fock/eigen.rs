//! Lowest eigenpairs of symmetric sparse operators.
//!
//! Small operators are diagonalized densely. Larger ones use Lanczos with
//! full reorthogonalization, computing one eigenpair at a time against the
//! already locked vectors (so degenerate levels are resolved) and
//! restarting from the current Ritz vector when the Krylov basis is full.

use super::operator::{dot, norm, SparseOperator};
use super::FockError;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSettings {
    /// Number of lowest eigenpairs.
    pub k: usize,
    /// Required ‖Hv − θv‖ for every returned pair.
    pub tol: f64,
    /// Matrix-vector products allowed per eigenpair.
    pub max_iter: usize,
    pub seed: u64,
    /// Dimensions up to this are solved densely.
    pub dense_threshold: usize,
    /// Krylov basis size before a restart.
    pub max_krylov: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings {
            k: 1,
            tol: 1e-10,
            max_iter: 5000,
            seed: 0x5eed,
            dense_threshold: 2000,
            max_krylov: 200,
        }
    }
}

impl EigenSettings {
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_dense_threshold(mut self, threshold: usize) -> Self {
        self.dense_threshold = threshold;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Always iterate, never fall back to the dense solver.
    pub fn iterative(self) -> Self {
        self.with_dense_threshold(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit vectors, largest-magnitude coefficient positive.
    pub vectors: Vec<Vec<f64>>,
    /// max_i ‖H v_i − θ_i v_i‖, recomputed after the solve.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: SolveMethod,
}

impl EdResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_vector(&self) -> &[f64] {
        &self.vectors[0]
    }

    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() > 1).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }

    /// Vector observables are reliable only when the ground level is
    /// separated by more than 1e-8; `None` when only one level was computed.
    pub fn ground_is_nondegenerate(&self) -> Option<bool> {
        self.gap().map(|g| g > 1e-8)
    }
}

fn fix_phase(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual(op: &SparseOperator, theta: f64, v: &[f64]) -> f64 {
    let hv = op.apply(v);
    hv.iter().zip(v).map(|(h, x)| (h - theta * x).powi(2)).sum::<f64>().sqrt()
}

fn check_operator(op: &SparseOperator) -> Result<(), FockError> {
    if !op.is_square() || op.symmetry_defect() > 1e-12 * op.frobenius_norm().max(1.0) {
        return Err(FockError::NotSymmetric);
    }
    if op.dim() == 0 {
        return Err(FockError::Empty);
    }
    Ok(())
}

/// k lowest eigenpairs; dense below `dense_threshold`, Lanczos above.
pub fn lowest_eigenpairs(op: &SparseOperator, settings: &EigenSettings) -> Result<EdResult, FockError> {
    check_operator(op)?;
    if op.dim() <= settings.dense_threshold {
        Ok(dense_solve(op, settings))
    } else {
        Ok(lanczos_solve(op, settings))
    }
}

/// Full dense diagonalization, the reference for the iterative path.
pub fn dense_eigenpairs(op: &SparseOperator, k: usize) -> Result<EdResult, FockError> {
    check_operator(op)?;
    Ok(dense_solve(op, &EigenSettings::default().with_k(k)))
}

fn dense_solve(op: &SparseOperator, settings: &EigenSettings) -> EdResult {
    let n = op.dim();
    let eig = SymmetricEigen::new(op.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = settings.k.clamp(1, n);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut worst: f64 = 0.0;
    for &i in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        fix_phase(&mut v);
        let theta = op.quadratic_form(&v);
        worst = worst.max(residual(op, theta, &v));
        eigenvalues.push(theta);
        vectors.push(v);
    }
    EdResult {
        eigenvalues,
        vectors,
        residual_norm: worst,
        iterations: 0,
        converged: worst <= settings.tol,
        method: SolveMethod::Dense,
    }
}

/// Lanczos regardless of dimension.
pub fn lanczos_solve(op: &SparseOperator, settings: &EigenSettings) -> EdResult {
    let n = op.dim();
    let k = settings.k.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut iterations = 0;
    let mut converged = true;
    let mut worst: f64 = 0.0;
    for _ in 0..k {
        let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pair = lanczos_lowest(op, &locked, start, settings);
        iterations += pair.iterations;
        converged &= pair.residual <= settings.tol;
        worst = worst.max(pair.residual);
        eigenvalues.push(pair.theta);
        locked.push(pair.vector);
    }
    // locking can return levels slightly out of order near degeneracies
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v = locked[i].clone();
            fix_phase(&mut v);
            v
        })
        .collect();
    EdResult {
        eigenvalues,
        vectors,
        residual_norm: worst,
        iterations,
        converged,
        method: SolveMethod::Lanczos,
    }
}

struct RitzPair {
    theta: f64,
    vector: Vec<f64>,
    residual: f64,
    iterations: usize,
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for v in against {
            let c = dot(v, w);
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn lowest_ritz(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let imin = eig.eigenvalues.imin();
    (eig.eigenvalues[imin], eig.eigenvectors.column(imin).iter().copied().collect())
}

fn lanczos_lowest(op: &SparseOperator, locked: &[Vec<f64>], mut start: Vec<f64>, s: &EigenSettings) -> RitzPair {
    let n = op.dim();
    let available = n - locked.len();
    let cap = s.max_krylov.clamp(2, available.max(2)).min(available);
    let mut iterations = 0usize;
    let mut best: Option<RitzPair> = None;

    loop {
        orthogonalize(&mut start, locked);
        let nrm = norm(&start);
        if nrm == 0.0 {
            break;
        }
        start.iter_mut().for_each(|x| *x /= nrm);
        let mut basis: Vec<Vec<f64>> = vec![std::mem::take(&mut start)];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();

        loop {
            let j = basis.len() - 1;
            let mut w = op.apply(&basis[j]);
            iterations += 1;
            let alpha = dot(&basis[j], &w);
            w.iter_mut().zip(&basis[j]).for_each(|(x, q)| *x -= alpha * q);
            if j > 0 {
                let b = betas[j - 1];
                w.iter_mut().zip(&basis[j - 1]).for_each(|(x, q)| *x -= b * q);
            }
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, locked);
            let beta = norm(&w);
            alphas.push(alpha);

            let size = basis.len();
            let exhausted = beta <= 1e-14 * alpha.abs().max(1.0) || size >= cap;
            let out_of_budget = iterations >= s.max_iter;
            if size.is_multiple_of(5) || exhausted || out_of_budget {
                let (_, coeffs) = lowest_ritz(&alphas, &betas);
                let estimate = beta * coeffs[size - 1].abs();
                if estimate <= 0.5 * s.tol || exhausted || out_of_budget {
                    let mut y = vec![0.0; n];
                    for (c, q) in coeffs.iter().zip(&basis) {
                        y.iter_mut().zip(q).for_each(|(a, b)| *a += c * b);
                    }
                    orthogonalize(&mut y, locked);
                    let ny = norm(&y);
                    y.iter_mut().for_each(|x| *x /= ny);
                    let theta = op.quadratic_form(&y);
                    let r = residual(op, theta, &y);
                    iterations += 1;
                    let candidate = RitzPair { theta, vector: y, residual: r, iterations };
                    if r <= s.tol {
                        return candidate;
                    }
                    if best.as_ref().is_none_or(|b| r < b.residual) {
                        best = Some(candidate);
                    }
                    if out_of_budget {
                        break;
                    }
                    if exhausted {
                        // restart from the Ritz vector
                        start = best.as_ref().unwrap().vector.clone();
                        break;
                    }
                }
            }
            w.iter_mut().for_each(|x| *x /= beta);
            basis.push(w);
            betas.push(beta);
        }
        if iterations >= s.max_iter {
            break;
        }
    }
    let mut out = best.unwrap_or(RitzPair { theta: f64::NAN, vector: vec![0.0; n], residual: f64::INFINITY, iterations });
    out.iterations = iterations;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let op = SparseOperator::diagonal_matrix(&[0.0, 1.0, 2.0]);
        let r = lowest_eigenpairs(&op, &EigenSettings::default()).unwrap();
        assert_eq!(r.eigenvalues, vec![0.0]);
        assert_eq!(r.ground_vector(), &[1.0, 0.0, 0.0]);
        assert!(r.converged);
    }

    #[test]
    fn two_by_two_closed_form() {
        let (a, b) = (1.5, -0.7);
        let op = SparseOperator::from_dense(&DMatrix::from_row_slice(2, 2, &[a, b, b, a]));
        for settings in [EigenSettings::default().with_k(2), EigenSettings::default().with_k(2).iterative()] {
            let r = lowest_eigenpairs(&op, &settings).unwrap();
            assert!((r.eigenvalues[0] - (a - b.abs())).abs() < 1e-14);
            assert!((r.eigenvalues[1] - (a + b.abs())).abs() < 1e-14);
            assert!((norm(r.ground_vector()) - 1.0).abs() < 1e-12);
        }
    }

    fn laplacian_chain(n: usize) -> SparseOperator {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.01 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseOperator::from_triplets(n, n, t)
    }

    #[test]
    fn lanczos_matches_dense() {
        let op = laplacian_chain(300);
        let dense = dense_eigenpairs(&op, 4).unwrap();
        let iter = lowest_eigenpairs(&op, &EigenSettings::default().with_k(4).iterative()).unwrap();
        assert!(iter.converged, "residual {}", iter.residual_norm);
        assert_eq!(iter.method, SolveMethod::Lanczos);
        for (a, b) in dense.eigenvalues.iter().zip(&iter.eigenvalues) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn lanczos_resolves_degenerate_levels() {
        let op = SparseOperator::diagonal_matrix(&[3.0, 1.0, 1.0, 2.0, 5.0, 1.0, 7.0]);
        let r = lanczos_solve(&op, &EigenSettings::default().with_k(4));
        assert!(r.converged);
        for (a, b) in r.eigenvalues.iter().zip([1.0, 1.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let op = laplacian_chain(150);
        let s = EigenSettings::default().iterative();
        let a = lowest_eigenpairs(&op, &s).unwrap();
        let b = lowest_eigenpairs(&op, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reports_non_convergence() {
        let op = laplacian_chain(400);
        let s = EigenSettings { max_iter: 3, ..EigenSettings::default().iterative() };
        let r = lowest_eigenpairs(&op, &s).unwrap();
        assert!(!r.converged);
        assert!(r.residual_norm > s.tol);
    }

    #[test]
    fn rejects_asymmetric() {
        let op = SparseOperator::from_triplets(2, 2, vec![(0, 1, 1.0)]);
        assert!(matches!(lowest_eigenpairs(&op, &EigenSettings::default()), Err(FockError::NotSymmetric)));
    }
}
