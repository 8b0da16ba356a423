use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Rows below this are multiplied serially.
const PARALLEL_ROWS: usize = 4096;

/// Real sparse matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    /// Builds from (row, col, value) triplets; duplicates are summed in
    /// input order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator { nrows, ncols, row_ptr, cols, vals, symmetric: false }
    }

    /// Symmetric matrix from its columns: `column(j)` lists (row, value)
    /// pairs of column j. Only the upper triangle is kept and mirrored, so
    /// the result is exactly symmetric.
    pub fn symmetric_from_columns<F>(dim: usize, column: F) -> Self
    where
        F: Fn(usize) -> Vec<(usize, f64)> + Sync,
    {
        let columns: Vec<Vec<(usize, f64)>> = (0..dim)
            .into_par_iter()
            .map(|j| {
                let mut entries: Vec<(usize, f64)> = column(j).into_iter().filter(|&(i, _)| i <= j).collect();
                entries.sort_by_key(|&(i, _)| i);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
                for (i, v) in entries {
                    match merged.last_mut() {
                        Some(last) if last.0 == i => last.1 += v,
                        _ => merged.push((i, v)),
                    }
                }
                merged
            })
            .collect();
        let mut triplets = Vec::new();
        for (j, entries) in columns.into_iter().enumerate() {
            for (i, v) in entries {
                triplets.push((i, j, v));
                if i != j {
                    triplets.push((j, i, v));
                }
            }
        }
        let mut op = Self::from_triplets(dim, dim, triplets);
        op.symmetric = true;
        op
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut op = Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect());
        op.symmetric = true;
        op
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        let mut op = Self::from_triplets(m.nrows(), m.ncols(), t);
        op.symmetric = op.is_square() && op.symmetry_defect() == 0.0;
        op
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Dimension of a square operator.
    pub fn dim(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let row_dot = |i: usize| -> f64 { self.row(i).map(|(j, v)| v * x[j]).sum() };
        if self.nrows >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row_dot(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row_dot(i);
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        let mut op = Self::from_triplets(self.ncols, self.nrows, t);
        op.symmetric = self.symmetric;
        op
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// ⟨x, A x⟩.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x))
    }

    /// Largest |A_ij − A_ji| over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// max over random pairs of |⟨u,Av⟩ − ⟨Au,v⟩| / (‖u‖‖v‖).
    pub fn hermiticity_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.nrows;
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = dot(&u, &self.apply(&v));
            let rhs = dot(&self.apply(&u), &v);
            worst = worst.max((lhs - rhs).abs() / (norm(&u) * norm(&v)));
        }
        worst
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
