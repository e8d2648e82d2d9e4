//! Finitely supported points of the infinite probability simplex.
//!
//! A [`SimplexPoint`] stores only its strictly positive coordinates, in
//! increasing index order. Indices start at 1. Faces of the simplex are
//! described by a [`FaceIndexSet`].

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Allowed deviation of the total mass from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Negative values at least this close to zero are treated as rounding dust.
pub const DUST_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("weights sum to {sum}, expected 1 within {NORMALIZATION_TOL}")]
    NotNormalized { sum: f64 },
    #[error("negative weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("non-finite weight at index {index}")]
    NonFinite { index: usize },
    #[error("index {0} appears more than once")]
    DuplicateIndex(usize),
    #[error("invalid index {0}: indices start at 1")]
    InvalidIndex(usize),
    #[error("face index set is empty")]
    EmptyFace,
    #[error("invalid geometric profile: n = {n}, ratio = {ratio}")]
    InvalidProfile { n: usize, ratio: f64 },
}

/// Sum with Neumaier compensation.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// A point of the simplex `S` with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    entries: Vec<(usize, f64)>,
}

impl SimplexPoint {
    /// Builds a point from `(index, weight)` pairs in any order.
    ///
    /// Zero weights are dropped. The weights must sum to 1 within
    /// [`NORMALIZATION_TOL`]; nothing is renormalized.
    pub fn new<I>(pairs: I) -> Result<Self, SimplexError>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (index, weight) in pairs {
            if index == 0 {
                return Err(SimplexError::InvalidIndex(index));
            }
            if !weight.is_finite() {
                return Err(SimplexError::NonFinite { index });
            }
            if weight < 0.0 {
                return Err(SimplexError::NegativeWeight { index, weight });
            }
            entries.push((index, weight));
        }
        entries.sort_by_key(|&(i, _)| i);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(SimplexError::DuplicateIndex(w[0].0));
        }
        entries.retain(|&(_, w)| w > 0.0);
        let sum = compensated_sum(entries.iter().map(|&(_, w)| w));
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(SimplexError::NotNormalized { sum });
        }
        Ok(Self { entries })
    }

    /// The vertex `e^(n)`.
    pub fn extreme(n: usize) -> Result<Self, SimplexError> {
        if n == 0 {
            return Err(SimplexError::InvalidIndex(0));
        }
        Ok(Self {
            entries: vec![(n, 1.0)],
        })
    }

    /// Uniform weights on `1..=n`.
    pub fn uniform(n: usize) -> Result<Self, SimplexError> {
        if n == 0 {
            return Err(SimplexError::EmptyFace);
        }
        let w = 1.0 / n as f64;
        Ok(Self {
            entries: (1..=n).map(|i| (i, w)).collect(),
        })
    }

    /// Weights proportional to `ratio^k` on `1..=n`.
    pub fn geometric_profile(n: usize, ratio: f64) -> Result<Self, SimplexError> {
        if n == 0 || !(ratio > 0.0 && ratio < 1.0) {
            return Err(SimplexError::InvalidProfile { n, ratio });
        }
        // ratio^(k-1) differs from ratio^k by a constant factor only.
        let raw: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32)).collect();
        let total = compensated_sum(raw.iter().copied());
        let entries = raw
            .into_iter()
            .enumerate()
            .map(|(k, w)| (k + 1, w / total))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        Ok(Self { entries })
    }

    /// A point of the relative interior of the face, drawn uniformly with
    /// normalized exponential spacings. Deterministic in `seed`.
    pub fn sample_interior(face: &FaceIndexSet, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::sample_interior_with(face, &mut rng)
    }

    /// Same as [`SimplexPoint::sample_interior`], drawing from a caller-owned generator.
    pub fn sample_interior_with<R: rand::Rng + ?Sized>(face: &FaceIndexSet, rng: &mut R) -> Self {
        let raw: Vec<f64> = face
            .iter()
            .map(|_| loop {
                let e: f64 = Exp1.sample(rng);
                if e > 0.0 {
                    break e;
                }
            })
            .collect();
        let total = compensated_sum(raw.iter().copied());
        let entries = face.iter().zip(raw).map(|(i, w)| (i, w / total)).collect();
        Self { entries }
    }

    /// Wraps weights produced by an operator. Rounding dust is clamped to
    /// zero and zeros are dropped; the total mass is not checked here.
    pub(crate) fn from_computed(mut entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, w)| w >= -DUST_TOL || w.is_nan()));
        entries.retain(|&(_, w)| w > 0.0);
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Indices carrying positive mass, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Largest index carrying mass.
    pub fn max_index(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i)
    }

    /// Coordinate `x_k`, zero off the support.
    pub fn get(&self, k: usize) -> f64 {
        match self.entries.binary_search_by_key(&k, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.entries.iter().map(|&(_, w)| w))
    }

    /// `|sum - 1|`.
    pub fn mass_defect(&self) -> f64 {
        (self.total_mass() - 1.0).abs()
    }

    /// ℓ¹ distance over the union of supports.
    pub fn l1_distance(&self, other: &SimplexPoint) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut p, mut q) = (0, 0);
        let mut terms = Vec::with_capacity(a.len() + b.len());
        while p < a.len() || q < b.len() {
            match (a.get(p), b.get(q)) {
                (Some(&(i, x)), Some(&(j, y))) if i == j => {
                    terms.push((x - y).abs());
                    p += 1;
                    q += 1;
                }
                (Some(&(i, x)), Some(&(j, _))) if i < j => {
                    terms.push(x);
                    p += 1;
                }
                (Some(&(_, x)), None) => {
                    terms.push(x);
                    p += 1;
                }
                (_, Some(&(_, y))) => {
                    terms.push(y);
                    q += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        compensated_sum(terms)
    }

    /// Mass on indices strictly greater than `n`.
    pub fn tail_mass(&self, n: usize) -> f64 {
        let start = self.entries.partition_point(|&(i, _)| i <= n);
        compensated_sum(self.entries[start..].iter().map(|&(_, w)| w))
    }

    /// Mass on the index window `lo..=hi`.
    pub fn window_mass(&self, lo: usize, hi: usize) -> f64 {
        compensated_sum(
            self.entries
                .iter()
                .filter(|&&(i, _)| i >= lo && i <= hi)
                .map(|&(_, w)| w),
        )
    }

    /// The point translated `by` positions to the right.
    pub fn shifted(&self, by: usize) -> Self {
        Self {
            entries: self.entries.iter().map(|&(i, w)| (i + by, w)).collect(),
        }
    }

    /// Dense coordinates `x_1..=x_n`.
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, w) in self.entries.iter().take_while(|&&(i, _)| i <= n) {
            out[i - 1] = w;
        }
        out
    }

    /// The face spanned by the support, if the point is not empty.
    pub fn face(&self) -> Option<FaceIndexSet> {
        FaceIndexSet::new(self.support()).ok()
    }
}

impl fmt::Display for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, (i, w)) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}: {w}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for SimplexPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SimplexPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(usize, f64)>::deserialize(deserializer)?;
        SimplexPoint::new(pairs).map_err(serde::de::Error::custom)
    }
}

/// A finite index set `K`, defining the face `S^K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct FaceIndexSet {
    indices: Vec<usize>,
}

impl FaceIndexSet {
    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self, SimplexError> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        if indices.is_empty() {
            return Err(SimplexError::EmptyFace);
        }
        indices.sort_unstable();
        if indices[0] == 0 {
            return Err(SimplexError::InvalidIndex(0));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(SimplexError::DuplicateIndex(w[0]));
        }
        Ok(Self { indices })
    }

    /// `K_n = {1, ..., n}`.
    pub fn initial(n: usize) -> Result<Self, SimplexError> {
        Self::new(1..=n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    pub fn max_index(&self) -> usize {
        *self.indices.last().expect("faces are nonempty")
    }
}

impl<'de> Deserialize<'de> for FaceIndexSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(deserializer)?;
        FaceIndexSet::new(indices).map_err(serde::de::Error::custom)
    }
}
