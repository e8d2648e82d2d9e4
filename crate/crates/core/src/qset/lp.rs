//! Dense Phase-I simplex method for feasibility over a simplex face.

use serde::Serialize;
use thiserror::Error;

use crate::simplex::{FaceIndexSet, SimplexPoint};

/// Entries smaller than this are never used as pivots.
pub const PIVOT_TOL: f64 = 1e-10;
/// Phase-I objectives at or below this count as feasible; witnesses must
/// satisfy every row within it.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Allowed mass defect of a reported witness.
pub const WITNESS_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("no progress after {0} pivots")]
    CyclingDetected(usize),
    #[error("row {row} has {len} coefficients, face has {expected} indices")]
    DimensionMismatch { row: usize, len: usize, expected: usize },
    #[error("non-finite coefficient in row {0}")]
    NonFinite(usize),
    #[error("solver witness violates row {row} by {violation}")]
    WitnessRejected { row: usize, violation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Ge,
}

/// `Σ_j coeffs[j] y_{face[j]}  (<= | >=)  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LpRow {
    pub fn new(coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        Self { coeffs, sense, rhs }
    }

    /// Amount by which `y` (dense over the face) violates the row.
    pub fn violation(&self, y: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(y).map(|(c, v)| c * v).sum();
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
        }
    }
}

/// Linear rows over the simplex `S^K`: `y >= 0`, `Σ y = 1`, plus `rows`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpProblem {
    pub face: FaceIndexSet,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LpStatus {
    Feasible { witness: SimplexPoint },
    Infeasible { phase_one_objective: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpResult {
    #[serde(flatten)]
    pub status: LpStatus,
    pub iterations: usize,
}

impl LpResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, LpStatus::Feasible { .. })
    }

    pub fn witness(&self) -> Option<&SimplexPoint> {
        match &self.status {
            LpStatus::Feasible { witness } => Some(witness),
            LpStatus::Infeasible { .. } => None,
        }
    }
}

struct Tableau {
    cols: usize,
    // rows 0..m are constraints, row m is the reduced-cost row; the last
    // column holds right-hand sides
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let p = self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        let total_rows = self.data.len() / w;
        for r in (0..total_rows).filter(|&r| r != pr) {
            let f = self.at(r, pc);
            if f != 0.0 {
                for (v, &q) in self.data[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * q;
                }
                self.data[r * w + pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }
}

/// Decides whether the rows admit a point of the face's simplex.
///
/// Bland's rule guarantees termination in exact arithmetic; an iteration
/// cap turns floating-point cycling into [`LpError::CyclingDetected`].
pub fn lp_feasible(problem: &LpProblem) -> Result<LpResult, LpError> {
    let n = problem.face.len();
    for (r, row) in problem.rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(LpError::DimensionMismatch {
                row: r,
                len: row.coeffs.len(),
                expected: n,
            });
        }
        if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite(r));
        }
    }

    // Normalized rows with nonnegative right-hand side; the simplex row is
    // an equality and is appended last.
    let m = problem.rows.len() + 1;
    let mut norm: Vec<(Vec<f64>, Option<Sense>, f64)> = problem
        .rows
        .iter()
        .map(|row| {
            if row.rhs < 0.0 {
                let flipped = match row.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                };
                (row.coeffs.iter().map(|c| -c).collect(), Some(flipped), -row.rhs)
            } else {
                (row.coeffs.clone(), Some(row.sense), row.rhs)
            }
        })
        .collect();
    norm.push((vec![1.0; n], None, 1.0));

    let slacks = problem.rows.len();
    let artificial_rows: Vec<usize> = norm
        .iter()
        .enumerate()
        .filter(|(_, (_, s, _))| *s != Some(Sense::Le))
        .map(|(r, _)| r)
        .collect();
    let first_artificial = n + slacks;
    let cols = first_artificial + artificial_rows.len();
    let w = cols + 1;

    let mut data = vec![0.0; (m + 1) * w];
    let mut basis = vec![0; m];
    for (r, (coeffs, sense, rhs)) in norm.iter().enumerate() {
        data[r * w..r * w + n].copy_from_slice(coeffs);
        match sense {
            Some(Sense::Le) => {
                data[r * w + n + r] = 1.0;
                basis[r] = n + r;
            }
            Some(Sense::Ge) => data[r * w + n + r] = -1.0,
            None => {}
        }
        data[r * w + cols] = *rhs;
    }
    for (a, &r) in artificial_rows.iter().enumerate() {
        data[r * w + first_artificial + a] = 1.0;
        basis[r] = first_artificial + a;
    }
    // Reduced costs of the Phase-I objective Σ artificials.
    for &r in &artificial_rows {
        for c in 0..w {
            if c < first_artificial || c == cols {
                data[m * w + c] -= data[r * w + c];
            }
        }
    }

    let mut t = Tableau { cols, data, basis };
    let cap = 10_000 + 50 * (m + cols);
    let mut iterations = 0;
    loop {
        let entering = (0..first_artificial).find(|&c| t.at(m, c) < -PIVOT_TOL);
        let Some(pc) = entering else { break };
        let mut leaving: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = t.at(r, pc);
            if a > PIVOT_TOL {
                let ratio = t.at(r, cols) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        if ratio < best - 1e-12 || (ratio <= best + 1e-12 && t.basis[r] < t.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
        }
        // Phase I is bounded below by 0, so a column with negative reduced
        // cost always has a positive entry up to round-off.
        let Some((pr, _)) = leaving else { break };
        t.pivot(pr, pc);
        iterations += 1;
        if iterations > cap {
            return Err(LpError::CyclingDetected(iterations));
        }
    }

    let objective: f64 = (0..m)
        .filter(|&r| t.basis[r] >= first_artificial)
        .map(|r| t.at(r, cols).max(0.0))
        .sum();
    if objective > FEASIBILITY_TOL {
        return Ok(LpResult {
            status: LpStatus::Infeasible {
                phase_one_objective: objective,
            },
            iterations,
        });
    }

    let mut y = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            y[t.basis[r]] = t.at(r, cols).max(0.0);
        }
    }
    let witness = verified_witness(problem, y)?;
    Ok(LpResult {
        status: LpStatus::Feasible { witness },
        iterations,
    })
}

/// Clamps, renormalizes and re-checks a candidate independently of the tableau.
fn verified_witness(problem: &LpProblem, mut y: Vec<f64>) -> Result<SimplexPoint, LpError> {
    let total: f64 = y.iter().sum();
    let simplex_row = problem.rows.len();
    if total.is_nan() || total <= 0.0 {
        return Err(LpError::WitnessRejected {
            row: simplex_row,
            violation: 1.0,
        });
    }
    for v in &mut y {
        *v /= total;
    }
    for (r, row) in problem.rows.iter().enumerate() {
        let violation = row.violation(&y);
        if violation > FEASIBILITY_TOL {
            return Err(LpError::WitnessRejected { row: r, violation });
        }
    }
    let witness = SimplexPoint::from_computed(problem.face.iter().zip(y).collect::<Vec<(usize, f64)>>());
    let defect = witness.mass_defect();
    if defect > WITNESS_MASS_TOL {
        return Err(LpError::WitnessRejected {
            row: simplex_row,
            violation: defect,
        });
    }
    Ok(witness)
}
