//! Compatible families of finite truncations and the error bounds relating
//! their powers.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::operator::interaction;
use crate::simplex::SimplexPoint;
use crate::skew::{SkewError, SkewSpec, DEFAULT_WINDOW};

/// Additive slack for the power-truncation bound.
pub const GAP_SLACK: f64 = 1e-10;
/// Additive slack for the tail-replacement bound.
pub const TAIL_SLACK: f64 = 1e-12;
/// Step of the upward truncation scan in [`converge_power`].
pub const SCAN_STEP: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtensionError {
    #[error("truncation order must be at least 1")]
    ZeroTruncation,
    #[error("power must be at least 1")]
    ZeroPower,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("invalid coefficient matrix: {0}")]
    InvalidSpec(#[from] SkewError),
    #[error("bound violated at m = {m}, k = {k}: gap {gap} > {bound}")]
    BoundViolated {
        m: usize,
        k: usize,
        gap: f64,
        bound: f64,
    },
}

/// A base coefficient matrix read through its finite sections, with a second
/// matrix used for the tail block of the `W` construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibleFamily {
    base: SkewSpec,
    tail: SkewSpec,
}

impl CompatibleFamily {
    /// Uses the base itself for the tail.
    pub fn new(base: SkewSpec) -> Result<Self, ExtensionError> {
        base.validate(DEFAULT_WINDOW)?;
        Ok(Self {
            tail: base.clone(),
            base,
        })
    }

    pub fn with_tail(base: SkewSpec, tail: SkewSpec) -> Result<Self, ExtensionError> {
        base.validate(DEFAULT_WINDOW)?;
        tail.validate(DEFAULT_WINDOW)?;
        Ok(Self { base, tail })
    }

    pub fn base(&self) -> &SkewSpec {
        &self.base
    }

    pub fn tail(&self) -> &SkewSpec {
        &self.tail
    }

    /// Whether the section of order `n + 1` restricts to the section of order `n`.
    pub fn is_compatible_at(&self, n: usize) -> bool {
        let (small, large) = (self.base.truncate(n), self.base.truncate(n + 1));
        (1..=n).all(|k| (1..=n).all(|i| small.get(k, i) == large.get(k, i)))
    }

    /// The truncated operator on indices `1..=n`, identity on the rest.
    pub fn vn_apply(&self, n: usize, x: &SimplexPoint) -> Result<SimplexPoint, ExtensionError> {
        if n == 0 {
            return Err(ExtensionError::ZeroTruncation);
        }
        let e = x.entries();
        let out = e
            .iter()
            .map(|&(k, xk)| {
                if k <= n {
                    (k, xk * (1.0 + interaction(&self.base, k, e, n)))
                } else {
                    (k, xk)
                }
            })
            .collect();
        Ok(SimplexPoint::from_computed(out))
    }

    /// The truncated operator on `1..=n` joined with the tail operator on
    /// indices `n+1, n+2, ...`.
    pub fn wn_apply(&self, n: usize, x: &SimplexPoint) -> Result<SimplexPoint, ExtensionError> {
        if n == 0 {
            return Err(ExtensionError::ZeroTruncation);
        }
        let e = x.entries();
        let tail = &e[e.partition_point(|&(i, _)| i <= n)..];
        let out = e
            .iter()
            .map(|&(k, xk)| {
                if k <= n {
                    (k, xk * (1.0 + interaction(&self.base, k, e, n)))
                } else {
                    (k, xk * (1.0 + interaction(&self.tail, k, tail, usize::MAX)))
                }
            })
            .collect();
        Ok(SimplexPoint::from_computed(out))
    }

    /// `m` applications of [`CompatibleFamily::vn_apply`].
    pub fn vn_power(&self, n: usize, x: &SimplexPoint, m: usize) -> Result<SimplexPoint, ExtensionError> {
        let mut y = x.clone();
        for _ in 0..m {
            y = self.vn_apply(n, &y)?;
        }
        Ok(y)
    }
}

/// `α_1 = 1`, `α_m = α_{m-1} (2 + 2^{m-1}) + 2^{2(m-1)}`.
pub fn alpha(m: usize) -> Result<f64, ExtensionError> {
    AlphaTable::new(m).map(|t| t.values[m - 1])
}

/// `α_1..=α_M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaTable {
    values: Vec<f64>,
}

impl AlphaTable {
    pub fn new(max_m: usize) -> Result<Self, ExtensionError> {
        if max_m == 0 {
            return Err(ExtensionError::ZeroPower);
        }
        let mut values = vec![1.0];
        for m in 2..=max_m {
            let prev = values[m - 2];
            let p = 2f64.powi((m - 1) as i32);
            values.push(prev * (2.0 + p) + p * p);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `α_m` for `1 <= m <= M`.
    pub fn get(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }
}

/// One coordinate of a power-truncation comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub gap: f64,
    pub bound: f64,
}

impl GapRow {
    /// `gap / bound`, with `0 / 0 = 0`.
    pub fn ratio(&self) -> f64 {
        if self.gap == 0.0 {
            0.0
        } else {
            self.gap / self.bound
        }
    }
}

/// Compares the `m`-th powers of the order-`n` and order-`n+p` truncations
/// on `k <= n` against `α_m x_k Σ_{j=n+1}^{n+p} x_j`.
pub fn power_truncation_gap(
    fam: &CompatibleFamily,
    x: &SimplexPoint,
    m: usize,
    n: usize,
    p: usize,
) -> Result<Vec<GapRow>, ExtensionError> {
    let rows = gap_rows(fam, x, m, n, p)?;
    match rows.iter().find(|r| r.gap > r.bound + GAP_SLACK) {
        Some(r) => Err(ExtensionError::BoundViolated {
            m,
            k: r.k,
            gap: r.gap,
            bound: r.bound,
        }),
        None => Ok(rows),
    }
}

fn gap_rows(
    fam: &CompatibleFamily,
    x: &SimplexPoint,
    m: usize,
    n: usize,
    p: usize,
) -> Result<Vec<GapRow>, ExtensionError> {
    let alpha_m = alpha(m)?;
    let a = fam.vn_power(n, x, m)?;
    let b = fam.vn_power(n + p, x, m)?;
    let window = x.window_mass(n + 1, n + p);
    Ok(x.iter()
        .take_while(|&(k, _)| k <= n)
        .map(|(k, xk)| GapRow {
            m,
            n,
            p,
            k,
            gap: (a.get(k) - b.get(k)).abs(),
            bound: alpha_m * xk * window,
        })
        .collect())
}

/// Gap rows for a grid of `(m, n, p)` cells, evaluated in parallel. Rows are
/// returned in grid order; bounds are not enforced.
pub fn gap_study(
    fam: &CompatibleFamily,
    x: &SimplexPoint,
    grid: &[(usize, usize, usize)],
) -> Result<Vec<GapRow>, ExtensionError> {
    let cells: Vec<Vec<GapRow>> = grid
        .par_iter()
        .map(|&(m, n, p)| gap_rows(fam, x, m, n, p))
        .collect::<Result<_, _>>()?;
    Ok(cells.into_iter().flatten().collect())
}

/// Largest `gap / bound` over the rows, 0 when empty.
pub fn max_gap_ratio(rows: &[GapRow]) -> f64 {
    rows.iter().map(GapRow::ratio).fold(0.0, f64::max)
}

/// CSV with columns `m,n,p,k,gap,bound`.
pub fn write_gap_csv<W: Write>(rows: &[GapRow], mut w: W) -> io::Result<()> {
    writeln!(w, "m,n,p,k,gap,bound")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.m, r.n, r.p, r.k, r.gap, r.bound)?;
    }
    Ok(())
}

/// Result of [`converge_power`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerApproximation {
    pub point: SimplexPoint,
    /// Truncation order used.
    pub n: usize,
    /// `α_m` times the mass beyond `n`.
    pub bound: f64,
}

/// Approximates the `m`-th power of the limit operator by a truncation of
/// order `n`, scanning `n = 16, 32, ...` until `α_m · tail_mass(x, n) < eps`
/// or `n` reaches the support bound of `x`, where the result is exact.
pub fn converge_power(
    fam: &CompatibleFamily,
    x: &SimplexPoint,
    m: usize,
    eps: f64,
) -> Result<PowerApproximation, ExtensionError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(ExtensionError::InvalidTolerance(eps));
    }
    let alpha_m = alpha(m)?;
    let cap = x.max_index().max(1);
    let mut n = SCAN_STEP.min(cap);
    loop {
        let bound = alpha_m * x.tail_mass(n);
        if bound < eps || n >= cap {
            return Ok(PowerApproximation {
                point: fam.vn_power(n, x, m)?,
                n,
                bound,
            });
        }
        n = (n + SCAN_STEP).min(cap);
    }
}

/// One coordinate of a tail-replacement comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailGapRow {
    pub n: usize,
    pub k: usize,
    /// `|W_n(x)_k - V_n(x)_k|` with the family's own tail.
    pub gap: f64,
    /// The same gap with the alternative tail.
    pub gap_other: f64,
    /// `x_k · tail_mass(x, n)`.
    pub bound: f64,
}

impl TailGapRow {
    /// Larger of the two gaps over the bound, with `0 / 0 = 0`.
    pub fn ratio(&self) -> f64 {
        let gap = self.gap.max(self.gap_other);
        if gap == 0.0 {
            0.0
        } else {
            gap / self.bound
        }
    }
}

/// Tail-replacement gaps for the family's tail and for `other_tail`, without
/// enforcing the bound.
pub fn tail_gap_rows(
    fam: &CompatibleFamily,
    x: &SimplexPoint,
    n: usize,
    other_tail: &SkewSpec,
) -> Result<Vec<TailGapRow>, ExtensionError> {
    let other = CompatibleFamily::with_tail(fam.base.clone(), other_tail.clone())?;
    let v = fam.vn_apply(n, x)?;
    let w = fam.wn_apply(n, x)?;
    let w_other = other.wn_apply(n, x)?;
    let tail = x.tail_mass(n);
    Ok(x.iter()
        .map(|(k, xk)| TailGapRow {
            n,
            k,
            gap: (w.get(k) - v.get(k)).abs(),
            gap_other: (w_other.get(k) - v.get(k)).abs(),
            bound: xk * tail,
        })
        .collect())
}

/// Checks `|W_n(x)_k - V_n(x)_k| <= x_k · tail_mass(x, n)` for the family's
/// tail and for `other_tail`.
pub fn check_w_equals_v(
    fam: &CompatibleFamily,
    x: &SimplexPoint,
    n: usize,
    other_tail: &SkewSpec,
) -> Result<Vec<TailGapRow>, ExtensionError> {
    let rows = tail_gap_rows(fam, x, n, other_tail)?;
    if let Some(r) = rows
        .iter()
        .find(|r| r.gap.max(r.gap_other) > r.bound + TAIL_SLACK)
    {
        return Err(ExtensionError::BoundViolated {
            m: 1,
            k: r.k,
            gap: r.gap.max(r.gap_other),
            bound: r.bound,
        });
    }
    Ok(rows)
}

/// CSV with columns `n,k,gap,gap_other,bound`.
pub fn write_tail_csv<W: Write>(rows: &[TailGapRow], mut w: W) -> io::Result<()> {
    writeln!(w, "n,k,gap,gap_other,bound")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.n, r.k, r.gap, r.gap_other, r.bound)?;
    }
    Ok(())
}
