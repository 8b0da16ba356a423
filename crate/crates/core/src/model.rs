//! Problem instances: the momentum lattice of the unit torus, interaction
//! potentials given by their Fourier coefficients, and the full model.

use serde::de::Error as _;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use thiserror::Error;

/// (2π)², the spectral gap of the Laplacian on the unit torus.
pub const TWO_PI_SQ: f64 = 4.0 * PI * PI;

/// Default upper bound on the size of a generated mode set.
pub const DEFAULT_MAX_MODES: usize = 4096;

// Relative slack when comparing |n|² against (cutoff / 2π)², so that a
// cutoff of exactly 2πk includes the shell |n| = k.
const CUTOFF_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension must be positive, got {0}")]
    InvalidDimension(i64),
    #[error("momentum cutoff must be finite and nonnegative, got {0}")]
    InvalidCutoff(f64),
    #[error("mode set exceeds the limit of {limit} modes")]
    TooManyModes { limit: usize },
    #[error("particle number must be positive")]
    InvalidParticleNumber,
    #[error("coupling must be finite and nonnegative, got {0}")]
    InvalidCoupling(f64),
    #[error("momentum {momentum} does not have dimension {expected}")]
    DimensionMismatch { momentum: Momentum, expected: usize },
    #[error("invalid potential: {0}")]
    InvalidPotential(ValidationReport),
    #[error("potential is not real in position space: imaginary part {imag:e} at x = {x:?}")]
    ComplexValue { x: Vec<f64>, imag: f64 },
    #[error("mean-field regime requires lambda*N in [0.5, 2], got {0}")]
    OutsideMeanField(f64),
    #[error("{0}")]
    Malformed(String),
}

/// A point of the dual lattice (2πℤ)^d, stored by its integer coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Momentum(Vec<i32>);

impl Momentum {
    pub fn new(coords: impl Into<Vec<i32>>) -> Self {
        Momentum(coords.into())
    }

    pub fn zero(d: usize) -> Self {
        Momentum(vec![0; d])
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Σ nᵢ² over the integer coordinates.
    pub fn lattice_norm_sq(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    /// |p|² = (2π)² Σ nᵢ².
    pub fn norm_sq(&self) -> f64 {
        TWO_PI_SQ * self.lattice_norm_sq() as f64
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Physical components 2πnᵢ.
    pub fn physical(&self) -> Vec<f64> {
        self.0.iter().map(|&c| 2.0 * PI * c as f64).collect()
    }

    /// Coordinates joined with `;`, e.g. `-1;0`.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl fmt::Debug for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2π({})", self.label().replace(';', ","))
    }
}

impl Neg for &Momentum {
    type Output = Momentum;
    fn neg(self) -> Momentum {
        Momentum(self.0.iter().map(|c| -c).collect())
    }
}

impl Add for &Momentum {
    type Output = Momentum;
    fn add(self, rhs: &Momentum) -> Momentum {
        Momentum(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Momentum {
    type Output = Momentum;
    fn sub(self, rhs: &Momentum) -> Momentum {
        Momentum(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// All lattice momenta with |p| ≤ `cutoff`, in lexicographic order of the
/// integer coordinates.
pub fn build_mode_set(d: usize, cutoff: f64, include_zero: bool) -> Result<Vec<Momentum>, ModelError> {
    build_mode_set_with_limit(d, cutoff, include_zero, DEFAULT_MAX_MODES)
}

pub fn build_mode_set_with_limit(
    d: usize,
    cutoff: f64,
    include_zero: bool,
    max_modes: usize,
) -> Result<Vec<Momentum>, ModelError> {
    if d == 0 {
        return Err(ModelError::InvalidDimension(0));
    }
    if !cutoff.is_finite() || cutoff < 0.0 {
        return Err(ModelError::InvalidCutoff(cutoff));
    }
    let reduced = cutoff / (2.0 * PI);
    let bound_sq = reduced * reduced * (1.0 + CUTOFF_SLACK);
    let radius = bound_sq.sqrt().floor();
    if radius > i32::MAX as f64 / 2.0 {
        return Err(ModelError::TooManyModes { limit: max_modes });
    }
    let radius = radius as i32;

    let mut modes = Vec::new();
    let mut n = vec![-radius; d];
    loop {
        let lattice_sq: i64 = n.iter().map(|&c| (c as i64) * (c as i64)).sum();
        let is_zero = lattice_sq == 0;
        if lattice_sq as f64 <= bound_sq && (include_zero || !is_zero) {
            if modes.len() == max_modes {
                return Err(ModelError::TooManyModes { limit: max_modes });
            }
            modes.push(Momentum(n.clone()));
        }
        // odometer step, last coordinate fastest
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(modes);
            }
            axis -= 1;
            if n[axis] < radius {
                n[axis] += 1;
                break;
            }
            n[axis] = -radius;
        }
    }
}

/// Fourier coefficients ŵ(p) of an even interaction with nonnegative
/// Fourier transform. Only finitely many coefficients are nonzero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PotentialSpec {
    coefficients: BTreeMap<Momentum, f64>,
    offset_log: f64,
}

impl PotentialSpec {
    /// ŵ ≡ 0.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Momentum, f64)>) -> Self {
        PotentialSpec {
            coefficients: entries.into_iter().collect(),
            offset_log: 0.0,
        }
    }

    /// Only the zero mode: ŵ(0) = `value`.
    pub fn constant(d: usize, value: f64) -> Self {
        Self::from_entries([(Momentum::zero(d), value)])
    }

    /// ŵ(±p) = `value` for a single pair, zero elsewhere.
    pub fn pair(p: Momentum, value: f64) -> Self {
        let q = -&p;
        Self::from_entries([(p, value), (q, value)])
    }

    /// ŵ(p) = `value` for all 0 < |p| ≤ `radius` (and at p = 0 when
    /// `include_zero`).
    pub fn band(d: usize, radius: f64, value: f64, include_zero: bool) -> Result<Self, ModelError> {
        let modes = build_mode_set(d, radius, include_zero)?;
        Ok(Self::from_entries(modes.into_iter().map(|p| (p, value))))
    }

    pub fn with_offset_log(mut self, offset: f64) -> Self {
        self.offset_log = offset;
        self
    }

    /// ŵ(p), zero when not stored.
    pub fn get(&self, p: &Momentum) -> f64 {
        self.coefficients.get(p).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Momentum, f64)> {
        self.coefficients.iter().map(|(p, &w)| (p, w))
    }

    /// Stored momenta with nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = (&Momentum, f64)> {
        self.entries().filter(|&(_, w)| w != 0.0)
    }

    pub fn offset_log(&self) -> f64 {
        self.offset_log
    }

    /// Largest |p| carrying a nonzero coefficient; ŵ vanishes beyond it.
    pub fn support_radius(&self) -> f64 {
        self.support().map(|(p, _)| p.norm()).fold(0.0, f64::max)
    }

    /// w(0) = Σ_p ŵ(p).
    pub fn value_at_origin(&self) -> f64 {
        self.coefficients.values().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.coefficients.values().map(|w| w.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.support().next().is_none()
    }

    pub fn check_dimension(&self, d: usize) -> Result<(), ModelError> {
        match self.coefficients.keys().find(|p| p.dim() != d) {
            Some(p) => Err(ModelError::DimensionMismatch { momentum: p.clone(), expected: d }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Evenness { p: Momentum, value: f64, mirror: f64 },
    Negative { p: Momentum, value: f64 },
    NonFinite { p: Momentum },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Evenness { p, value, mirror } => {
                write!(f, "evenness at p={p} (ŵ(p)={value}, ŵ(-p)={mirror})")
            }
            Violation::Negative { p, value } => write!(f, "nonnegativity at p={p} (ŵ(p)={value})"),
            Violation::NonFinite { p } => write!(f, "finiteness at p={p}"),
        }
    }
}

/// Every violated potential invariant; empty means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks evenness, nonnegativity and finiteness by exact comparison of the
/// stored values.
pub fn validate_potential(spec: &PotentialSpec) -> ValidationReport {
    let mut violations = Vec::new();
    for (p, w) in spec.entries() {
        if !w.is_finite() {
            violations.push(Violation::NonFinite { p: p.clone() });
            continue;
        }
        if w < 0.0 {
            violations.push(Violation::Negative { p: p.clone(), value: w });
        }
        let mirror = spec.get(&-p);
        // report each asymmetric pair once, at its larger momentum
        if mirror != w && (p > &-p || !spec.coefficients.contains_key(&-p)) {
            violations.push(Violation::Evenness { p: p.clone(), value: w, mirror });
        }
    }
    ValidationReport { violations }
}

/// w(x) = Σ_p ŵ(p) e^{ip·x} for x in the unit cell.
pub fn real_space_eval(spec: &PotentialSpec, x: &[f64]) -> Result<f64, ModelError> {
    let (mut re, mut im) = (0.0, 0.0);
    for (p, w) in spec.support() {
        if p.dim() != x.len() {
            return Err(ModelError::DimensionMismatch { momentum: p.clone(), expected: x.len() });
        }
        let phase: f64 = p.physical().iter().zip(x).map(|(k, xi)| k * xi).sum();
        re += w * phase.cos();
        im += w * phase.sin();
    }
    let scale = re.abs().max(spec.abs_sum());
    if im.abs() > 1e-12 * scale {
        return Err(ModelError::ComplexValue { x: x.to_vec(), imag: im });
    }
    Ok(re)
}

/// Energy shift removed by [`normalize_zero_mode`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroModeOffset {
    pub w0: f64,
}

impl ZeroModeOffset {
    /// λ ŵ(0) N(N−1)/2, the exact interaction shift on the N-particle space.
    pub fn energy(&self, lambda: f64, n: usize) -> f64 {
        let n = n as f64;
        lambda * self.w0 * n * (n - 1.0) / 2.0
    }
}

/// Removes ŵ(0), returning the shifted potential and the energy offset.
pub fn normalize_zero_mode(spec: &PotentialSpec) -> (PotentialSpec, ZeroModeOffset) {
    let d = spec.coefficients.keys().next().map_or(0, Momentum::dim);
    let zero = Momentum::zero(d);
    let w0 = spec.get(&zero);
    let mut out = spec.clone();
    if w0 != 0.0 {
        out.coefficients.remove(&zero);
        out.offset_log += w0;
    }
    (out, ZeroModeOffset { w0 })
}

// Canonical wire form: {"entries": [[n1, .., nd, value], ..], "offset_log": x}
// with entries sorted by coordinates.
struct Entry<'a>(&'a Momentum, f64);

impl Serialize for Entry<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.dim() + 1))?;
        for c in self.0.coords() {
            seq.serialize_element(&(*c as i64))?;
        }
        seq.serialize_element(&self.1)?;
        seq.end()
    }
}

impl Serialize for PotentialSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            entries: Vec<Entry<'a>>,
            offset_log: f64,
        }
        Repr {
            entries: self.coefficients.iter().map(|(p, &w)| Entry(p, w)).collect(),
            offset_log: self.offset_log,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PotentialSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            entries: Vec<Vec<f64>>,
            #[serde(default)]
            offset_log: f64,
        }
        let repr = Repr::deserialize(d)?;
        let mut coefficients = BTreeMap::new();
        for row in repr.entries {
            let Some((&value, coords)) = row.split_last() else {
                return Err(D::Error::custom("potential entry must be [coords.., value]"));
            };
            if coords.is_empty() {
                return Err(D::Error::custom("potential entry has no coordinates"));
            }
            let mut n = Vec::with_capacity(coords.len());
            for &c in coords {
                if c.fract() != 0.0 || c.abs() > i32::MAX as f64 {
                    return Err(D::Error::custom(format!("non-integer lattice coordinate {c}")));
                }
                n.push(c as i32);
            }
            if coefficients.insert(Momentum(n), value).is_some() {
                return Err(D::Error::custom("duplicate potential entry"));
            }
        }
        Ok(PotentialSpec { coefficients, offset_log: repr.offset_log })
    }
}

/// N bosons on the unit torus T^d with coupling λ and potential ŵ,
/// truncated to the modes |p| ≤ `mode_cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusModel {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub potential: PotentialSpec,
    pub mode_cutoff: f64,
    pub include_zero_mode: bool,
}

impl TorusModel {
    /// Model with λ = 1/N and the zero mode included.
    pub fn new(d: usize, n: usize, potential: PotentialSpec, mode_cutoff: f64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidParticleNumber);
        }
        let model = TorusModel {
            d,
            n,
            lambda: 1.0 / n as f64,
            potential,
            mode_cutoff,
            include_zero_mode: true,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Same coupling, different particle number.
    pub fn with_particles(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_potential(mut self, potential: PotentialSpec) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_zero_mode(mut self, include: bool) -> Self {
        self.include_zero_mode = include;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d == 0 {
            return Err(ModelError::InvalidDimension(0));
        }
        if self.n == 0 {
            return Err(ModelError::InvalidParticleNumber);
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(ModelError::InvalidCoupling(self.lambda));
        }
        if !self.mode_cutoff.is_finite() || self.mode_cutoff < 0.0 {
            return Err(ModelError::InvalidCutoff(self.mode_cutoff));
        }
        self.potential.check_dimension(self.d)?;
        let report = validate_potential(&self.potential);
        if !report.is_valid() {
            return Err(ModelError::InvalidPotential(report));
        }
        Ok(())
    }

    /// λN ∈ [0.5, 2].
    pub fn check_mean_field_regime(&self) -> Result<(), ModelError> {
        let ln = self.lambda * self.n as f64;
        if (0.5..=2.0).contains(&ln) {
            Ok(())
        } else {
            Err(ModelError::OutsideMeanField(ln))
        }
    }

    pub fn mode_set(&self) -> Result<Vec<Momentum>, ModelError> {
        build_mode_set(self.d, self.mode_cutoff, self.include_zero_mode)
    }

    pub fn w_hat(&self, p: &Momentum) -> f64 {
        self.potential.get(p)
    }

    pub fn w_hat_zero(&self) -> f64 {
        self.potential.get(&Momentum::zero(self.d))
    }

    /// Canonical JSON document of the model.
    pub fn canonical_json(&self) -> String {
        crate::canonical::to_string(self).expect("model serialization is infallible")
    }
}
