//! The region `Q = {y in S : Σ_i a_ki y_i <= 0 for all k}` and related
//! linear systems.

mod lp;

pub use lp::{
    lp_feasible, LpError, LpProblem, LpResult, LpRow, LpStatus, Sense, FEASIBILITY_TOL, PIVOT_TOL,
    WITNESS_MASS_TOL,
};

use thiserror::Error;

use crate::operator::{fixed_point_residual, interaction, OperatorHandle};
use crate::simplex::{FaceIndexSet, SimplexPoint};
use crate::skew::{DenseSkew, SkewSpec};

/// Residual below which a point counts as a member of `Q`, and a fixed-point
/// residual counts as zero.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsetError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("point is not in Q: residual {0}")]
    NotInQ(f64),
    #[error("point of Q is not fixed: residual {0}")]
    FixViolation(f64),
    #[error("block {block} admits no nonnegative solution (phase-one objective {objective})")]
    BlockInfeasible { block: usize, objective: f64 },
    #[error("at least one block is required")]
    NoBlocks,
    #[error("emptiness check needs n >= 2, got {0}")]
    InvalidDimension(usize),
    #[error("system over 1..={0} is unexpectedly feasible")]
    UnexpectedlyFeasible(usize),
}

fn face_rows(
    spec: &SkewSpec,
    face: &FaceIndexSet,
    rows: impl Iterator<Item = usize>,
    sense: Sense,
) -> LpProblem {
    let rows = rows
        .map(|k| LpRow::new(face.iter().map(|i| spec.entry(k, i)).collect(), sense, 0.0))
        .collect();
    LpProblem {
        face: face.clone(),
        rows,
    }
}

/// `Q_K`: rows `Σ_{i in K} a_ki y_i <= 0` for `k in K`.
pub fn q_set_problem(spec: &SkewSpec, face: &FaceIndexSet) -> LpProblem {
    face_rows(spec, face, face.iter(), Sense::Le)
}

/// The reversed system `Σ_{i in K} a_ki z_i >= 0` for `k in K`.
pub fn nonnegative_system_problem(spec: &SkewSpec, face: &FaceIndexSet) -> LpProblem {
    face_rows(spec, face, face.iter(), Sense::Ge)
}

pub fn q_set_point(spec: &SkewSpec, face: &FaceIndexSet) -> Result<LpResult, QsetError> {
    Ok(lp_feasible(&q_set_problem(spec, face))?)
}

pub fn nonnegative_system_point(spec: &SkewSpec, face: &FaceIndexSet) -> Result<LpResult, QsetError> {
    Ok(lp_feasible(&nonnegative_system_problem(spec, face))?)
}

/// `(k, Σ_i a_ki y_i)` for every `k` in the face.
pub fn face_row_values(spec: &SkewSpec, face: &FaceIndexSet, y: &SimplexPoint) -> Vec<(usize, f64)> {
    face.iter()
        .map(|k| (k, interaction(spec, k, y.entries(), usize::MAX)))
        .collect()
}

/// Largest `Σ_i a_ki y_i`, clipped below at 0, over rows `k` up to
/// `max(max supp(y) + 2, extent)`.
pub fn q_membership_residual(spec: &SkewSpec, y: &SimplexPoint) -> f64 {
    let window = (y.max_index() + 2).max(spec.extent().unwrap_or(0));
    (1..=window)
        .map(|k| interaction(spec, k, y.entries(), usize::MAX))
        .fold(0.0, f64::max)
}

/// Checks that a member of `Q` is a fixed point; returns the fixed-point residual.
pub fn verify_q_subset_fix(spec: &SkewSpec, y: &SimplexPoint) -> Result<f64, QsetError> {
    let membership = q_membership_residual(spec, y);
    if membership > MEMBERSHIP_TOL {
        return Err(QsetError::NotInQ(membership));
    }
    let op = OperatorHandle::Volterra(spec.clone());
    let residual = fixed_point_residual(&op, y).expect("Volterra application cannot fail");
    if residual > MEMBERSHIP_TOL {
        return Err(QsetError::FixViolation(residual));
    }
    Ok(residual)
}

/// Block weights `1/2, 1/4, ..., 2^-(N-1), 2^-(N-1)`.
pub fn block_weights(count: usize) -> Vec<f64> {
    (1..=count)
        .map(|b| 0.5f64.powi(if b < count { b } else { count - 1 } as i32))
        .collect()
}

/// Glues nonnegative solutions of `A_b z >= 0` on each block into one point
/// of the block-diagonal system.
pub fn finitely_generated_solution(blocks: &[DenseSkew]) -> Result<SimplexPoint, QsetError> {
    if blocks.is_empty() {
        return Err(QsetError::NoBlocks);
    }
    let weights = block_weights(blocks.len());
    let mut entries = Vec::new();
    let mut offset = 0;
    for (b, (block, w)) in blocks.iter().zip(weights).enumerate() {
        let face = FaceIndexSet::initial(block.dim()).expect("blocks are nonempty");
        let result = nonnegative_system_point(&SkewSpec::Dense(block.clone()), &face)?;
        match result.status {
            LpStatus::Feasible { witness } => {
                entries.extend(witness.iter().map(|(i, z)| (i + offset, w * z)));
            }
            LpStatus::Infeasible { phase_one_objective } => {
                return Err(QsetError::BlockInfeasible {
                    block: b,
                    objective: phase_one_objective,
                })
            }
        }
        offset += block.dim();
    }
    Ok(SimplexPoint::from_computed(entries))
}

/// Rows `k = 1..=n+2` of the alternating-sign system restricted to the face
/// `{1..n}`.
pub fn example52_problem(n: usize) -> Result<LpProblem, QsetError> {
    if n < 2 {
        return Err(QsetError::InvalidDimension(n));
    }
    let face = FaceIndexSet::initial(n).expect("n >= 2");
    Ok(face_rows(&SkewSpec::AlternatingSign, &face, 1..=n + 2, Sense::Le))
}

/// Certifies that the alternating-sign system has no solution on `{1..n}`.
/// Returns the Phase-I objective.
pub fn example52_emptiness(n: usize) -> Result<f64, QsetError> {
    let result = lp_feasible(&example52_problem(n)?)?;
    match result.status {
        LpStatus::Infeasible { phase_one_objective } => Ok(phase_one_objective),
        LpStatus::Feasible { .. } => Err(QsetError::UnexpectedlyFeasible(n)),
    }
}
