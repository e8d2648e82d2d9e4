//! Skew-symmetric coefficient matrices `(a_ki)` of Volterra operators.
//!
//! Every Volterra operator acts as `(V x)_k = x_k (1 + Σ_i a_ki x_i)` with
//! `a_ki = -a_ik` and `|a_ki| <= 1`. The infinite matrix is represented by a
//! [`SkewSpec`], one of a few structural kinds whose entries are evaluated
//! lazily.

mod tensor;

pub use tensor::{from_tensor, linear_induced_tensor, to_tensor, DeterminingTensor};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index window used when validating kinds with infinitely many entries.
pub const DEFAULT_WINDOW: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkewError {
    #[error("entries ({k},{i}) and ({i},{k}) are not negatives of each other")]
    NotSkew { k: usize, i: usize },
    #[error("|a({k},{i})| = |{value}| exceeds 1")]
    BoundExceeded { k: usize, i: usize, value: f64 },
    #[error("diagonal entry ({k},{k}) is {value}, expected 0")]
    NonzeroDiagonal { k: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("row {row} has length {len}, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("pair coefficient {index} is {value}, expected 0 < a <= 1")]
    InvalidPairCoefficient { index: usize, value: f64 },
    #[error("mixing weight {0} outside [0, 1]")]
    InvalidMixWeight(f64),
    #[error("p({i}{j},{k}) = {value} > 0 with k outside {{i, j}}")]
    NotVolterra {
        i: usize,
        j: usize,
        k: usize,
        value: f64,
    },
    #[error("row {row} of the stochastic matrix is invalid (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("invalid determining tensor at ({i}{j},{k}): {reason}")]
    InvalidTensor {
        i: usize,
        j: usize,
        k: usize,
        reason: &'static str,
    },
}

/// A finite skew-symmetric matrix, stored row-major and indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSkew {
    n: usize,
    entries: Vec<f64>,
}

impl DenseSkew {
    /// Builds an `n x n` matrix from row-major entries. Only the shape is
    /// checked; use [`SkewSpec::validate`] for the skew conditions.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, SkewError> {
        if n == 0 {
            return Err(SkewError::EmptyMatrix);
        }
        if entries.len() != n * n {
            return Err(SkewError::DimensionMismatch {
                left: entries.len(),
                right: n * n,
            });
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SkewError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(SkewError::RaggedRow {
                    row: r + 1,
                    len: row.len(),
                    expected: n,
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(n, entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    /// Fills the strict upper triangle from `upper(k, i)` for `k < i` and
    /// mirrors it with the opposite sign.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut upper: F) -> Self {
        let mut m = Self::zeros(n);
        for k in 1..=n {
            for i in k + 1..=n {
                let a = upper(k, i);
                m.entries[(k - 1) * n + (i - 1)] = a;
                m.entries[(i - 1) * n + (k - 1)] = -a;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `a_ki`, zero outside `1..=n`.
    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        if k == 0 || i == 0 || k > self.n || i > self.n {
            0.0
        } else {
            self.entries[(k - 1) * self.n + (i - 1)]
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|a| -a).collect(),
        }
    }

    fn check(&self, offset: usize) -> Result<(), SkewError> {
        for k in 1..=self.n {
            for i in 1..=self.n {
                check_entry(k + offset, i + offset, self.get(k, i), self.get(i, k))?;
            }
        }
        Ok(())
    }
}

fn check_entry(k: usize, i: usize, a_ki: f64, a_ik: f64) -> Result<(), SkewError> {
    if k == i && a_ki != 0.0 {
        return Err(SkewError::NonzeroDiagonal { k, value: a_ki });
    }
    if a_ki.is_nan() || a_ki.abs() > 1.0 {
        return Err(SkewError::BoundExceeded { k, i, value: a_ki });
    }
    if a_ki != -a_ik {
        return Err(SkewError::NotSkew { k, i });
    }
    Ok(())
}

/// Dense blocks placed on consecutive index ranges, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonal {
    blocks: Vec<DenseSkew>,
    // offsets[b] is the number of indices preceding block b
    offsets: Vec<usize>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<DenseSkew>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut acc = 0;
        for b in &blocks {
            offsets.push(acc);
            acc += b.dim();
        }
        Self { blocks, offsets }
    }

    pub fn blocks(&self) -> &[DenseSkew] {
        &self.blocks
    }

    /// Index offset of each block.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total_dim(&self) -> usize {
        self.offsets
            .last()
            .zip(self.blocks.last())
            .map_or(0, |(o, b)| o + b.dim())
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        if k == 0 || i == 0 {
            return 0.0;
        }
        let b = self.offsets.partition_point(|&o| o < k);
        if b == 0 {
            return 0.0;
        }
        let (off, block) = (self.offsets[b - 1], &self.blocks[b - 1]);
        if i <= off || i > off + block.dim() {
            return 0.0;
        }
        block.get(k - off, i - off)
    }
}

/// Coefficients `a^(k)` coupling the index pairs `(2k-1, 2k)`:
/// `a_{2k,2k-1} = a^(k)`, `a_{2k-1,2k} = -a^(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSequence {
    coeffs: Vec<f64>,
}

impl PairSequence {
    /// Coefficients must satisfy `0 < a^(k) <= 1`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, SkewError> {
        if let Some((idx, &value)) = coeffs.iter().enumerate().find(|(_, &a)| !(a > 0.0 && a <= 1.0)) {
            return Err(SkewError::InvalidPairCoefficient {
                index: idx + 1,
                value,
            });
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        if k == 0 || i == 0 || k.abs_diff(i) != 1 {
            return 0.0;
        }
        let (lo, hi) = (k.min(i), k.max(i));
        if lo % 2 == 0 {
            return 0.0;
        }
        let a = self.coeffs.get(hi / 2 - 1).copied().unwrap_or(0.0);
        if k == hi {
            a
        } else {
            -a
        }
    }
}

/// The infinite coefficient matrix of a Volterra operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkewSpecRepr", into = "SkewSpecRepr")]
pub enum SkewSpec {
    /// The identity operator.
    Zero,
    Dense(DenseSkew),
    BlockDiagonal(BlockDiagonal),
    PairSequence(PairSequence),
    /// `a_ki = (-1)^i` for `i > k`, `a_ki = -(-1)^k` for `i < k`.
    AlternatingSign,
}

/// Outcome of a successful [`SkewSpec::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Validation {
    /// Indices `1..=checked` were examined.
    pub checked: usize,
    /// Whether the check covered every nonzero entry.
    pub exhaustive: bool,
}

/// Outcome of [`SkewSpec::is_pure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Purity {
    pub pure: bool,
    pub checked: usize,
    pub exhaustive: bool,
}

impl SkewSpec {
    pub fn dense_from_rows(rows: &[Vec<f64>]) -> Result<Self, SkewError> {
        Ok(Self::Dense(DenseSkew::from_rows(rows)?))
    }

    pub fn pair_sequence(coeffs: Vec<f64>) -> Result<Self, SkewError> {
        Ok(Self::PairSequence(PairSequence::new(coeffs)?))
    }

    pub fn block_diagonal(blocks: Vec<DenseSkew>) -> Self {
        Self::BlockDiagonal(BlockDiagonal::new(blocks))
    }

    /// The coefficient `a_ki`. Indices outside a finite kind's range give 0.
    #[inline]
    pub fn entry(&self, k: usize, i: usize) -> f64 {
        match self {
            SkewSpec::Zero => 0.0,
            SkewSpec::Dense(d) => d.get(k, i),
            SkewSpec::BlockDiagonal(b) => b.get(k, i),
            SkewSpec::PairSequence(p) => p.get(k, i),
            SkewSpec::AlternatingSign => alternating_entry(k, i),
        }
    }

    /// Number of leading indices that can carry nonzero entries, or `None`
    /// when every index can.
    pub fn extent(&self) -> Option<usize> {
        match self {
            SkewSpec::Zero => Some(0),
            SkewSpec::Dense(d) => Some(d.dim()),
            SkewSpec::BlockDiagonal(b) => Some(b.total_dim()),
            SkewSpec::PairSequence(p) => Some(2 * p.coeffs().len()),
            SkewSpec::AlternatingSign => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SkewSpec::Zero => "zero",
            SkewSpec::Dense(_) => "dense",
            SkewSpec::BlockDiagonal(_) => "block",
            SkewSpec::PairSequence(_) => "pair",
            SkewSpec::AlternatingSign => "alternating",
        }
    }

    /// Checks skew-symmetry, `|a_ki| <= 1` and the zero diagonal. Finite
    /// kinds are checked exhaustively, the alternating kind on `1..=window`.
    pub fn validate(&self, window: usize) -> Result<Validation, SkewError> {
        match self {
            SkewSpec::Zero => Ok(Validation {
                checked: 0,
                exhaustive: true,
            }),
            SkewSpec::Dense(d) => {
                d.check(0)?;
                Ok(Validation {
                    checked: d.dim(),
                    exhaustive: true,
                })
            }
            SkewSpec::BlockDiagonal(b) => {
                for (block, &off) in b.blocks.iter().zip(&b.offsets) {
                    block.check(off)?;
                }
                Ok(Validation {
                    checked: b.total_dim(),
                    exhaustive: true,
                })
            }
            SkewSpec::PairSequence(p) => {
                let n = 2 * p.coeffs().len();
                self.check_window(n)?;
                Ok(Validation {
                    checked: n,
                    exhaustive: true,
                })
            }
            SkewSpec::AlternatingSign => {
                self.check_window(window)?;
                Ok(Validation {
                    checked: window,
                    exhaustive: false,
                })
            }
        }
    }

    fn check_window(&self, n: usize) -> Result<(), SkewError> {
        for k in 1..=n {
            for i in 1..=n {
                check_entry(k, i, self.entry(k, i), self.entry(i, k))?;
            }
        }
        Ok(())
    }

    /// The finite section `(a_ki)_{k,i <= n}`.
    pub fn truncate(&self, n: usize) -> DenseSkew {
        let mut entries = Vec::with_capacity(n * n);
        for k in 1..=n {
            for i in 1..=n {
                entries.push(self.entry(k, i));
            }
        }
        DenseSkew { n, entries }
    }

    /// Whether `|a_ki| = 1` for every `k != i` in the checked range.
    pub fn is_pure(&self, window: usize) -> Purity {
        let (n, exhaustive) = match self.extent() {
            Some(n) => (n, true),
            None => (window, false),
        };
        let pure = match self {
            SkewSpec::Zero => false,
            _ => (1..=n).all(|k| (1..=n).all(|i| k == i || self.entry(k, i).abs() == 1.0)),
        };
        Purity {
            pure,
            checked: n,
            exhaustive,
        }
    }
}

#[inline]
fn alternating_entry(k: usize, i: usize) -> f64 {
    let sign = |m: usize| if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    match i.cmp(&k) {
        std::cmp::Ordering::Greater => sign(i),
        std::cmp::Ordering::Less => -sign(k),
        std::cmp::Ordering::Equal => 0.0,
    }
}

/// Entrywise `lambda * a + (1 - lambda) * b`.
pub fn mix(a: &DenseSkew, b: &DenseSkew, lambda: f64) -> Result<DenseSkew, SkewError> {
    if a.dim() != b.dim() {
        return Err(SkewError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SkewError::InvalidMixWeight(lambda));
    }
    let entries = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(&x, &y)| (lambda * x + (1.0 - lambda) * y).clamp(-1.0, 1.0))
        .collect();
    Ok(DenseSkew { n: a.n, entries })
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SkewSpecRepr {
    Zero,
    Dense { rows: Vec<Vec<f64>> },
    Block { blocks: Vec<Vec<Vec<f64>>> },
    Pair { coeffs: Vec<f64> },
    Alternating,
}

impl TryFrom<SkewSpecRepr> for SkewSpec {
    type Error = SkewError;

    fn try_from(repr: SkewSpecRepr) -> Result<Self, Self::Error> {
        Ok(match repr {
            SkewSpecRepr::Zero => SkewSpec::Zero,
            SkewSpecRepr::Dense { rows } => SkewSpec::dense_from_rows(&rows)?,
            SkewSpecRepr::Block { blocks } => SkewSpec::block_diagonal(
                blocks
                    .iter()
                    .map(|rows| DenseSkew::from_rows(rows))
                    .collect::<Result<_, _>>()?,
            ),
            SkewSpecRepr::Pair { coeffs } => SkewSpec::pair_sequence(coeffs)?,
            SkewSpecRepr::Alternating => SkewSpec::AlternatingSign,
        })
    }
}

impl From<SkewSpec> for SkewSpecRepr {
    fn from(spec: SkewSpec) -> Self {
        match spec {
            SkewSpec::Zero => SkewSpecRepr::Zero,
            SkewSpec::Dense(d) => SkewSpecRepr::Dense { rows: d.rows() },
            SkewSpec::BlockDiagonal(b) => SkewSpecRepr::Block {
                blocks: b.blocks.iter().map(DenseSkew::rows).collect(),
            },
            SkewSpec::PairSequence(p) => SkewSpecRepr::Pair { coeffs: p.coeffs },
            SkewSpec::AlternatingSign => SkewSpecRepr::Alternating,
        }
    }
}
