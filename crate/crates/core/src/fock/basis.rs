use super::FockError;
use crate::model::Momentum;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Default bound on the number of basis states.
pub const DEFAULT_MAX_STATES: usize = 5_000_000;

/// Which occupation vectors belong to a basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    /// Exactly N particles, the N-particle space.
    Particles(usize),
    /// At most `max` particles, the truncated excitation Fock space.
    Excitations { max: usize },
}

/// Enumerated occupation vectors over an ordered mode set.
///
/// States are stored in descending lexicographic order of their counts
/// (so the condensate (N, 0, …) comes first when the zero mode leads).
#[derive(Clone, Debug)]
pub struct FockBasis {
    modes: Vec<Momentum>,
    sector: Sector,
    momentum: Option<Momentum>,
    occupations: Vec<u32>,
    index: HashMap<Vec<u32>, usize>,
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Unrestricted sector size: C(N+m−1, m−1) particles, or C(M+m, m) for at
/// most M excitations.
pub fn sector_size(n_modes: usize, sector: Sector) -> Option<u128> {
    let m = n_modes as u128;
    match sector {
        Sector::Particles(n) if m == 0 => Some((n == 0) as u128),
        Sector::Particles(n) => binomial(n as u128 + m - 1, m - 1),
        Sector::Excitations { max } => binomial(max as u128 + m, m),
    }
}

struct Counter {
    lattice: Vec<Vec<i64>>,
    exact: bool,
    memo: HashMap<(usize, usize, Vec<i64>), u128>,
}

impl Counter {
    /// Number of ways to place at most/exactly `rem` particles on modes
    /// `i..` with total lattice momentum `k`.
    fn count(&mut self, i: usize, rem: usize, k: &[i64]) -> u128 {
        if i == self.lattice.len() {
            let ok = k.iter().all(|&c| c == 0) && (!self.exact || rem == 0);
            return ok as u128;
        }
        let key = (i, rem, k.to_vec());
        if let Some(&c) = self.memo.get(&key) {
            return c;
        }
        let mut total: u128 = 0;
        let mut kk = k.to_vec();
        for c in 0..=rem {
            total = total.saturating_add(self.count(i + 1, rem - c, &kk));
            for (a, b) in kk.iter_mut().zip(&self.lattice[i]) {
                *a -= b;
            }
        }
        self.memo.insert(key, total);
        total
    }
}

impl FockBasis {
    pub fn enumerate(modes: &[Momentum], sector: Sector, momentum: Option<&Momentum>) -> Result<Self, FockError> {
        Self::enumerate_with_limit(modes, sector, momentum, DEFAULT_MAX_STATES)
    }

    /// Builds the basis after checking its exact size against `max_states`.
    pub fn enumerate_with_limit(
        modes: &[Momentum],
        sector: Sector,
        momentum: Option<&Momentum>,
        max_states: usize,
    ) -> Result<Self, FockError> {
        let d = modes.first().map_or(0, Momentum::dim);
        if let Some(k) = momentum {
            if !modes.is_empty() && k.dim() != d {
                return Err(FockError::BasisMismatch(format!("momentum sector {k} has wrong dimension")));
            }
        }
        let (rem, exact) = match sector {
            Sector::Particles(n) => (n, true),
            Sector::Excitations { max } => (max, false),
        };
        let mut counter = momentum.map(|_| Counter {
            lattice: modes.iter().map(|p| p.coords().iter().map(|&c| c as i64).collect()).collect(),
            exact,
            memo: HashMap::new(),
        });
        let target: Vec<i64> = momentum.map_or(Vec::new(), |k| k.coords().iter().map(|&c| c as i64).collect());

        let count = match counter.as_mut() {
            Some(c) => c.count(0, rem, &target),
            None => sector_size(modes.len(), sector).unwrap_or(u128::MAX),
        };
        if count > max_states as u128 {
            return Err(FockError::TooLarge { count, limit: max_states });
        }
        let count = count as usize;

        let m = modes.len();
        let mut occupations = Vec::with_capacity(count * m);
        let mut current = vec![0u32; m];
        if m == 0 {
            if count == 1 {
                // the vacuum of an empty mode set
                return Ok(Self::from_parts(modes.to_vec(), sector, momentum.cloned(), occupations, 1));
            }
        } else {
            descend(0, rem, &target, exact, &mut counter, &mut current, &mut occupations);
        }
        debug_assert_eq!(occupations.len(), count * m);
        Ok(Self::from_parts(modes.to_vec(), sector, momentum.cloned(), occupations, count))
    }

    fn from_parts(
        modes: Vec<Momentum>,
        sector: Sector,
        momentum: Option<Momentum>,
        occupations: Vec<u32>,
        count: usize,
    ) -> Self {
        let m = modes.len();
        let mut index = HashMap::with_capacity(count);
        for i in 0..count {
            index.insert(occupations[i * m..(i + 1) * m].to_vec(), i);
        }
        FockBasis { modes, sector, momentum, occupations, index }
    }

    pub fn modes(&self) -> &[Momentum] {
        &self.modes
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn momentum_sector(&self) -> Option<&Momentum> {
        self.momentum.as_ref()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        let m = self.modes.len();
        &self.occupations[i * m..(i + 1) * m]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u32]> {
        (0..self.len()).map(move |i| self.state(i))
    }

    pub fn find(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn mode_index(&self, p: &Momentum) -> Option<usize> {
        self.modes.iter().position(|q| q == p)
    }

    pub fn zero_mode(&self) -> Option<usize> {
        self.modes.iter().position(Momentum::is_zero)
    }

    /// Number of particles outside the zero mode.
    pub fn excited_count(&self, i: usize) -> u32 {
        let zero = self.zero_mode();
        self.state(i)
            .iter()
            .enumerate()
            .filter(|&(j, _)| Some(j) != zero)
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn particle_count(&self, i: usize) -> u32 {
        self.state(i).iter().sum()
    }

    /// Σ n_p p in lattice coordinates.
    pub fn total_momentum(&self, i: usize) -> Momentum {
        total_momentum(&self.modes, self.state(i))
    }
}

pub(crate) fn total_momentum(modes: &[Momentum], occ: &[u32]) -> Momentum {
    let d = modes.first().map_or(0, Momentum::dim);
    let mut k = vec![0i32; d];
    for (p, &c) in modes.iter().zip(occ) {
        for (a, b) in k.iter_mut().zip(p.coords()) {
            *a += c as i32 * b;
        }
    }
    Momentum::new(k)
}

fn descend(
    i: usize,
    rem: usize,
    k: &[i64],
    exact: bool,
    counter: &mut Option<Counter>,
    current: &mut [u32],
    out: &mut Vec<u32>,
) {
    let m = current.len();
    if i + 1 == m && exact && counter.is_none() {
        current[i] = rem as u32;
        out.extend_from_slice(current);
        return;
    }
    for c in (0..=rem).rev() {
        let next_k: Vec<i64> = match counter.as_ref() {
            Some(ctr) => k.iter().zip(&ctr.lattice[i]).map(|(a, b)| a - c as i64 * b).collect(),
            None => Vec::new(),
        };
        if i + 1 == m {
            let ok = match counter.as_mut() {
                Some(ctr) => ctr.count(m, rem - c, &next_k) > 0,
                None => !exact || c == rem,
            };
            if ok {
                current[i] = c as u32;
                out.extend_from_slice(current);
            }
            continue;
        }
        if let Some(ctr) = counter.as_mut() {
            if ctr.count(i + 1, rem - c, &next_k) == 0 {
                continue;
            }
        }
        current[i] = c as u32;
        descend(i + 1, rem - c, &next_k, exact, counter, current, out);
    }
    current[i] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes(ns: &[i32]) -> Vec<Momentum> {
        ns.iter().map(|&n| Momentum::new([n])).collect()
    }

    #[test]
    fn stars_and_bars_sizes() {
        let b = FockBasis::enumerate(&modes(&[-1, 0, 1]), Sector::Particles(2), None).unwrap();
        assert_eq!(b.len(), 6);
        let b = FockBasis::enumerate(&modes(&[-2, -1, 0, 1, 2]), Sector::Particles(3), None).unwrap();
        assert_eq!(b.len(), 35);
        assert_eq!(sector_size(5, Sector::Particles(3)), Some(35));
        assert_eq!(sector_size(3, Sector::Excitations { max: 2 }), Some(10));
    }

    #[test]
    fn momentum_filter_matches_brute_force() {
        let ms = modes(&[-1, 0, 1]);
        let b = FockBasis::enumerate(&ms, Sector::Particles(2), Some(&Momentum::new([0]))).unwrap();
        let states: Vec<&[u32]> = b.states().collect();
        assert_eq!(states, vec![&[1, 0, 1][..], &[0, 2, 0][..]]);

        // brute force over the unrestricted basis
        let full = FockBasis::enumerate(&ms, Sector::Particles(2), None).unwrap();
        let filtered: Vec<&[u32]> = full
            .states()
            .filter(|s| total_momentum(&ms, s).is_zero())
            .collect();
        assert_eq!(filtered, states);
    }

    #[test]
    fn order_is_descending_lexicographic_and_indexed() {
        let b = FockBasis::enumerate(&modes(&[0, 1, 2]), Sector::Particles(3), None).unwrap();
        assert_eq!(b.state(0), &[3, 0, 0]);
        for i in 1..b.len() {
            assert!(b.state(i - 1) > b.state(i));
            assert_eq!(b.find(b.state(i)), Some(i));
        }
    }

    #[test]
    fn excitation_sector() {
        let ms = modes(&[-1, 1]);
        let b = FockBasis::enumerate(&ms, Sector::Excitations { max: 4 }, None).unwrap();
        assert_eq!(b.len(), 15);
        let k0 = FockBasis::enumerate(&ms, Sector::Excitations { max: 4 }, Some(&Momentum::new([0]))).unwrap();
        let states: Vec<&[u32]> = k0.states().collect();
        assert_eq!(states, vec![&[2, 2][..], &[1, 1][..], &[0, 0][..]]);
    }

    #[test]
    fn resource_limit_is_checked_before_enumeration() {
        let ms = modes(&[-3, -2, -1, 0, 1, 2, 3]);
        let err = FockBasis::enumerate_with_limit(&ms, Sector::Particles(40), None, 1000).unwrap_err();
        assert!(matches!(err, FockError::TooLarge { limit: 1000, .. }));
    }

    #[test]
    fn momentum_sector_sizes_partition_full_basis() {
        let ms = modes(&[-2, -1, 0, 1, 2]);
        let full = FockBasis::enumerate(&ms, Sector::Particles(6), None).unwrap().len();
        let sum: usize = (-12..=12)
            .map(|k| FockBasis::enumerate(&ms, Sector::Particles(6), Some(&Momentum::new([k]))).unwrap().len())
            .sum();
        assert_eq!(sum, full);
    }
}
