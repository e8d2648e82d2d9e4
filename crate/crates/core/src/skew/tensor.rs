use serde::Serialize;

use super::{DenseSkew, SkewError};
use crate::simplex::{compensated_sum, NORMALIZATION_TOL};

/// Heredity coefficients `p_{ij,k}` of a quadratic stochastic operator on
/// the first `dim` indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminingTensor {
    dim: usize,
    // index ((i-1) * dim + (j-1)) * dim + (k-1)
    values: Vec<f64>,
    volterra: bool,
}

impl DeterminingTensor {
    /// Builds a tensor from `p(i, j, k)` for `i, j, k` in `1..=dim` and checks
    /// nonnegativity, symmetry in `(i, j)` and that each `p_{ij,.}` sums to 1.
    pub fn from_fn<F>(dim: usize, mut p: F) -> Result<Self, SkewError>
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        if dim == 0 {
            return Err(SkewError::EmptyMatrix);
        }
        let mut values = Vec::with_capacity(dim * dim * dim);
        for i in 1..=dim {
            for j in 1..=dim {
                for k in 1..=dim {
                    values.push(p(i, j, k));
                }
            }
        }
        Self::new(dim, values)
    }

    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self, SkewError> {
        if dim == 0 {
            return Err(SkewError::EmptyMatrix);
        }
        if values.len() != dim * dim * dim {
            return Err(SkewError::DimensionMismatch {
                left: values.len(),
                right: dim * dim * dim,
            });
        }
        let mut t = Self {
            dim,
            values,
            volterra: false,
        };
        t.check()?;
        t.volterra = t.first_non_volterra().is_none();
        Ok(t)
    }

    fn check(&self) -> Result<(), SkewError> {
        let n = self.dim;
        for i in 1..=n {
            for j in 1..=n {
                for k in 1..=n {
                    let v = self.get(i, j, k);
                    let reason = if !v.is_finite() {
                        Some("non-finite coefficient")
                    } else if v < 0.0 {
                        Some("negative coefficient")
                    } else if v != self.get(j, i, k) {
                        Some("not symmetric in the parent indices")
                    } else {
                        None
                    };
                    if let Some(reason) = reason {
                        return Err(SkewError::InvalidTensor { i, j, k, reason });
                    }
                }
                let sum = compensated_sum((1..=n).map(|k| self.get(i, j, k)));
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(SkewError::InvalidTensor {
                        i,
                        j,
                        k: 0,
                        reason: "offspring distribution does not sum to 1",
                    });
                }
            }
        }
        Ok(())
    }

    fn first_non_volterra(&self) -> Option<(usize, usize, usize, f64)> {
        let n = self.dim;
        (1..=n)
            .flat_map(|i| (1..=n).flat_map(move |j| (1..=n).map(move |k| (i, j, k))))
            .find_map(|(i, j, k)| {
                let v = self.get(i, j, k);
                (k != i && k != j && v > 0.0).then_some((i, j, k, v))
            })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether `p_{ij,k} = 0` for every `k` outside `{i, j}`.
    pub fn is_volterra(&self) -> bool {
        self.volterra
    }

    /// `p_{ij,k}` for indices in `1..=dim`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.values[((i - 1) * n + (j - 1)) * n + (k - 1)]
    }

    /// The offspring distribution `p_{ij,.}` as a slice over `k`.
    #[inline]
    pub fn offspring(&self, i: usize, j: usize) -> &[f64] {
        let n = self.dim;
        let start = ((i - 1) * n + (j - 1)) * n;
        &self.values[start..start + n]
    }
}

/// The Volterra tensor of a skew matrix: `p_{kk,k} = 1` and
/// `p_{ik,k} = (1 + a_ki) / 2` for `i != k`.
pub fn to_tensor(spec: &DenseSkew) -> DeterminingTensor {
    let n = spec.dim();
    let mut values = vec![0.0; n * n * n];
    let idx = |i: usize, j: usize, k: usize| ((i - 1) * n + (j - 1)) * n + (k - 1);
    for k in 1..=n {
        values[idx(k, k, k)] = 1.0;
        for i in (1..=n).filter(|&i| i != k) {
            let p = (1.0 + spec.get(k, i)) / 2.0;
            values[idx(i, k, k)] = p;
            values[idx(k, i, k)] = p;
        }
    }
    DeterminingTensor {
        dim: n,
        values,
        volterra: true,
    }
}

/// Recovers `a_ki = 2 p_{ik,k} - 1` from a Volterra tensor.
///
/// Evaluated as `p_{ik,k} - p_{ik,i}`, which equals `2 p_{ik,k} - 1` when
/// the two coefficients sum to 1 and is skew-symmetric in floating point.
pub fn from_tensor(t: &DeterminingTensor) -> Result<DenseSkew, SkewError> {
    if let Some((i, j, k, value)) = t.first_non_volterra() {
        return Err(SkewError::NotVolterra { i, j, k, value });
    }
    let n = t.dim();
    let mut entries = vec![0.0; n * n];
    for k in 1..=n {
        for i in (1..=n).filter(|&i| i != k) {
            entries[(k - 1) * n + (i - 1)] = t.get(i, k, k) - t.get(i, k, i);
        }
    }
    DenseSkew::new(n, entries)
}

/// The tensor `p_{ij,k} = (p_ik + p_jk) / 2` of the quadratic operator
/// induced by a row-stochastic matrix.
pub fn linear_induced_tensor(stoch: &[Vec<f64>]) -> Result<DeterminingTensor, SkewError> {
    let n = stoch.len();
    if n == 0 {
        return Err(SkewError::EmptyMatrix);
    }
    for (r, row) in stoch.iter().enumerate() {
        if row.len() != n {
            return Err(SkewError::RaggedRow {
                row: r + 1,
                len: row.len(),
                expected: n,
            });
        }
        let sum = compensated_sum(row.iter().copied());
        if row.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(SkewError::NotStochastic { row: r + 1, sum });
        }
    }
    DeterminingTensor::from_fn(n, |i, j, k| (stoch[i - 1][k - 1] + stoch[j - 1][k - 1]) / 2.0)
}
