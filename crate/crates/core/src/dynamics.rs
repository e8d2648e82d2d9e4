//! Trajectories `x, V x, V^2 x, ...` and their diagnostics.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::operator::{OperatorError, OperatorHandle};
use crate::qset;
use crate::simplex::SimplexPoint;

/// Default Cauchy tolerance on consecutive ℓ¹ steps.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default number of trailing steps examined by [`detect_convergence`].
pub const DEFAULT_CONVERGENCE_WINDOW: usize = 50;

/// Additive slack for the growth bound `(V^m x)_k <= 2^m x_k`.
pub const GROWTH_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("thinning stride must be at least 1")]
    InvalidStride,
    #[error("convergence window must be at least 2, got {0}")]
    InvalidWindow(usize),
    #[error("trajectory has {steps} steps, window needs {window}")]
    TrajectoryTooShort { steps: usize, window: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("trajectory was not generated by a Volterra operator")]
    NotVolterra,
    #[error("growth bound violated at step {m}, index {k}: {value} > {bound}")]
    BoundViolated {
        m: usize,
        k: usize,
        value: f64,
        bound: f64,
    },
    #[error("trajectory has not converged")]
    NotConverged,
    #[error("limit violates the fixed-point region at row {k}: {value} > {tol}")]
    LimitNotInQ { k: usize, value: f64, tol: f64 },
}

/// A stored orbit of an operator.
///
/// With a stride `s > 1` only every `s`-th point (and the last one) is kept;
/// step sizes are recorded for every step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    operator: OperatorHandle,
    points: Vec<SimplexPoint>,
    steps: Vec<usize>,
    step_sizes: Vec<f64>,
    stride: usize,
    support_collapse: Option<usize>,
}

pub fn iterate(op: &OperatorHandle, x0: &SimplexPoint, steps: usize) -> Result<Trajectory, DynamicsError> {
    iterate_thinned(op, x0, steps, 1)
}

pub fn iterate_thinned(
    op: &OperatorHandle,
    x0: &SimplexPoint,
    steps: usize,
    stride: usize,
) -> Result<Trajectory, DynamicsError> {
    if steps == 0 {
        return Err(DynamicsError::NoSteps);
    }
    if stride == 0 {
        return Err(DynamicsError::InvalidStride);
    }
    let tracks_support = op.as_volterra().is_some();
    let mut points = vec![x0.clone()];
    let mut stored_steps = vec![0];
    let mut step_sizes = Vec::with_capacity(steps);
    let mut support_collapse = None;
    let mut current = x0.clone();
    for m in 1..=steps {
        let next = op.apply(&current)?;
        step_sizes.push(next.l1_distance(&current));
        if tracks_support && support_collapse.is_none() && next.support_len() < current.support_len() {
            support_collapse = Some(m);
        }
        if m % stride == 0 || m == steps {
            points.push(next.clone());
            stored_steps.push(m);
        }
        current = next;
    }
    Ok(Trajectory {
        operator: op.clone(),
        points,
        steps: stored_steps,
        step_sizes,
        stride,
        support_collapse,
    })
}

impl Trajectory {
    pub fn operator(&self) -> &OperatorHandle {
        &self.operator
    }

    /// Stored points, starting with the initial point.
    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }

    /// Step number of each stored point.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    /// `||x^(m+1) - x^(m)||_1` for every step `m`.
    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn len_steps(&self) -> usize {
        self.step_sizes.len()
    }

    pub fn initial(&self) -> &SimplexPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &SimplexPoint {
        self.points.last().expect("trajectories are nonempty")
    }

    /// First step at which a Volterra orbit lost a support index.
    ///
    /// Volterra operators preserve supports exactly, so this only happens
    /// when a coordinate underflows to zero in floating point.
    pub fn support_collapse(&self) -> Option<usize> {
        self.support_collapse
    }

    /// Largest `|Σ x - 1|` over the stored points.
    pub fn max_mass_defect(&self) -> f64 {
        self.points
            .iter()
            .map(SimplexPoint::mass_defect)
            .fold(0.0, f64::max)
    }

    /// Sparse CSV with columns `step,index,weight`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step,index,weight")?;
        for (step, point) in self.steps.iter().zip(&self.points) {
            for (i, x) in point.iter() {
                writeln!(w, "{step},{i},{x}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Converged {
        limit: SimplexPoint,
        at_step: usize,
    },
    NotConvergedWithinBudget,
    /// Heuristic: steps stay well above tolerance without shrinking.
    Oscillating,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    #[serde(flatten)]
    pub status: ConvergenceStatus,
    pub window: usize,
    pub tol: f64,
    pub support_collapse: Option<usize>,
}

impl ConvergenceVerdict {
    pub fn is_converged(&self) -> bool {
        matches!(self.status, ConvergenceStatus::Converged { .. })
    }

    pub fn limit(&self) -> Option<&SimplexPoint> {
        match &self.status {
            ConvergenceStatus::Converged { limit, .. } => Some(limit),
            _ => None,
        }
    }
}

/// Windowed Cauchy test on the trailing `window` step sizes.
///
/// Converged when every trailing step is below `tol`; Oscillating when every
/// trailing step exceeds `10 tol` and the steps are not strictly decreasing.
pub fn detect_convergence(
    traj: &Trajectory,
    tol: f64,
    window: usize,
) -> Result<ConvergenceVerdict, DynamicsError> {
    if window < 2 {
        return Err(DynamicsError::InvalidWindow(window));
    }
    let sizes = traj.step_sizes();
    if sizes.len() < window {
        return Err(DynamicsError::TrajectoryTooShort {
            steps: sizes.len(),
            window,
        });
    }
    let trailing = &sizes[sizes.len() - window..];
    let status = if trailing.iter().all(|&d| d < tol) {
        let at_step = sizes.iter().rposition(|&d| d >= tol).map_or(0, |p| p + 1);
        ConvergenceStatus::Converged {
            limit: traj.last().clone(),
            at_step,
        }
    } else if trailing.iter().all(|&d| d > 10.0 * tol) && !trailing.windows(2).all(|w| w[1] < w[0]) {
        ConvergenceStatus::Oscillating
    } else {
        ConvergenceStatus::NotConvergedWithinBudget
    };
    Ok(ConvergenceVerdict {
        status,
        window,
        tol,
        support_collapse: traj.support_collapse(),
    })
}

/// Checks `(V^m x)_k <= 2^m x_k` on every stored point.
pub fn check_growth_bound(traj: &Trajectory) -> Result<(), DynamicsError> {
    if traj.operator().as_volterra().is_none() {
        return Err(DynamicsError::NotVolterra);
    }
    let x0 = traj.initial();
    for (&m, point) in traj.steps().iter().zip(traj.points()) {
        let factor = 2f64.powi(m.min(i32::MAX as usize) as i32);
        for (k, value) in point.iter() {
            let start = x0.get(k);
            let bound = if start > 0.0 { factor * start } else { 0.0 };
            if value > bound + GROWTH_SLACK {
                return Err(DynamicsError::BoundViolated { m, k, value, bound });
            }
        }
    }
    Ok(())
}

/// Checks that a converged limit satisfies `Σ_i a_ki y_i <= tol` for every
/// `k` in the face spanned by the initial point.
pub fn check_limit_in_q(
    traj: &Trajectory,
    verdict: &ConvergenceVerdict,
    tol: f64,
) -> Result<(), DynamicsError> {
    let spec = traj.operator().as_volterra().ok_or(DynamicsError::NotVolterra)?;
    let limit = verdict.limit().ok_or(DynamicsError::NotConverged)?;
    let face = traj
        .initial()
        .face()
        .expect("simplex points have nonempty support");
    let worst = qset::face_row_values(spec, &face, limit)
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1));
    match worst {
        Some((k, value)) if value > tol => Err(DynamicsError::LimitNotInQ { k, value, tol }),
        _ => Ok(()),
    }
}
