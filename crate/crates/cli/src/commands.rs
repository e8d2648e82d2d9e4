use serde::Serialize;
use volterra_core::dynamics::{
    check_growth_bound, check_limit_in_q, detect_convergence, iterate_thinned, ConvergenceVerdict,
};
use volterra_core::extension::{
    converge_power, gap_study, max_gap_ratio, tail_gap_rows, write_gap_csv, write_tail_csv, CompatibleFamily,
    TailGapRow, GAP_SLACK, TAIL_SLACK,
};
use volterra_core::operator::{conjugate_apply, fixed_point_residual, OperatorHandle};
use volterra_core::qset::{
    example52_emptiness, q_membership_residual, q_set_point, verify_q_subset_fix, LpResult, QsetError,
};
use volterra_core::simplex::NORMALIZATION_TOL;
use volterra_core::{FaceIndexSet, SimplexPoint, SkewSpec};

use crate::config::ScenarioConfig;
use crate::report::{Header, OutDir};
use crate::{svg, CliError};

/// Findings that make a run exit with status 1.
#[derive(Debug, Default)]
pub struct Outcome {
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Check {
    Holds,
    Violated {
        detail: String,
    },
    /// Failed, but on a point produced after floating-point underflow.
    Inconclusive {
        detail: String,
    },
    NotApplicable {
        reason: String,
    },
}

fn operator(cfg: &ScenarioConfig) -> Result<OperatorHandle, CliError> {
    ScenarioConfig::require(&cfg.operator, "operator")?.handle()
}

fn volterra_spec(cfg: &ScenarioConfig) -> Result<SkewSpec, CliError> {
    match operator(cfg)? {
        OperatorHandle::Volterra(spec) => Ok(spec),
        _ => Err(CliError::Config(
            "operator: this command needs a coefficient matrix kind".into(),
        )),
    }
}

fn initial(cfg: &ScenarioConfig) -> Result<SimplexPoint, CliError> {
    ScenarioConfig::require(&cfg.initial, "initial")?.point(cfg.seed, "initial")
}

#[derive(Serialize)]
struct ConjugateReport {
    second: SimplexPoint,
    value: SimplexPoint,
}

#[derive(Serialize)]
struct ApplyReport {
    operator: &'static str,
    input: SimplexPoint,
    output: SimplexPoint,
    conjugate: Option<ConjugateReport>,
    mass: f64,
    mass_defect: f64,
    simplex_check: Check,
    fixed_point_residual: f64,
}

pub fn apply(cfg: &ScenarioConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let op = operator(cfg)?;
    let x = initial(cfg)?;
    let y = op.apply(&x).map_err(CliError::violation)?;
    let conjugate = match (&cfg.second, &op) {
        (None, _) => None,
        (Some(second), OperatorHandle::Volterra(spec)) => {
            let second = second.point(cfg.seed.wrapping_add(1), "second")?;
            let value = conjugate_apply(spec, &x, &second);
            Some(ConjugateReport { second, value })
        }
        (Some(_), _) => {
            return Err(CliError::Config(
                "second: the conjugate form needs a coefficient matrix kind".into(),
            ))
        }
    };
    let mass_defect = y.mass_defect();
    let mut outcome = Outcome::default();
    let simplex_check = if mass_defect <= NORMALIZATION_TOL {
        Check::Holds
    } else {
        let detail = format!("output mass defect {mass_defect}");
        outcome.violations.push(detail.clone());
        Check::Violated { detail }
    };
    let report = ApplyReport {
        operator: ScenarioConfig::require(&cfg.operator, "operator")?.kind_name(),
        fixed_point_residual: y.l1_distance(&x),
        mass: y.total_mass(),
        input: x,
        output: y,
        conjugate,
        mass_defect,
        simplex_check,
    };
    out.write_json("apply.json", &Header::new("apply", cfg.hash(), cfg.seed), &report)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct IterateReport<'a> {
    operator: &'static str,
    steps: usize,
    stride: usize,
    initial: &'a SimplexPoint,
    last: &'a SimplexPoint,
    max_mass_defect: f64,
    support_collapse: Option<usize>,
    verdict: Option<ConvergenceVerdict>,
    verdict_error: Option<String>,
    growth_bound: Check,
    limit_in_q: Check,
    step_sizes: &'a [f64],
}

pub fn iterate(cfg: &ScenarioConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let op = operator(cfg)?;
    let x = initial(cfg)?;
    let steps = *ScenarioConfig::require(&cfg.steps, "steps")?;
    let traj = iterate_thinned(&op, &x, steps, cfg.stride).map_err(|e| match e {
        volterra_core::dynamics::DynamicsError::Operator(e) => CliError::violation(e),
        other => CliError::Config(format!("steps: {other}")),
    })?;
    let mut outcome = Outcome::default();

    let (verdict, verdict_error) = match detect_convergence(&traj, cfg.tol, cfg.window) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let growth_bound = match check_growth_bound(&traj) {
        Ok(()) => Check::Holds,
        Err(volterra_core::dynamics::DynamicsError::NotVolterra) => Check::NotApplicable {
            reason: "operator is not a Volterra operator".into(),
        },
        Err(e) => {
            outcome.violations.push(e.to_string());
            Check::Violated {
                detail: e.to_string(),
            }
        }
    };
    let limit_in_q = match &verdict {
        Some(v) if v.is_converged() && op.as_volterra().is_some() => {
            match check_limit_in_q(&traj, v, cfg.q_tol) {
                Ok(()) => Check::Holds,
                Err(e) => match traj.support_collapse() {
                    Some(step) => Check::Inconclusive {
                        detail: format!("{e}; support collapsed by underflow at step {step}"),
                    },
                    None => {
                        outcome.violations.push(e.to_string());
                        Check::Violated {
                            detail: e.to_string(),
                        }
                    }
                },
            }
        }
        _ => Check::NotApplicable {
            reason: "no converged Volterra limit".into(),
        },
    };

    out.write_with("trajectory.csv", |w| traj.write_csv(w))?;
    if let Some(svg_cfg) = &cfg.svg {
        let text = svg::coordinate_plot(&traj, &svg_cfg.coords);
        out.write_with("trajectory.svg", |w| {
            std::io::Write::write_all(w, text.as_bytes())
        })?;
    }
    let report = IterateReport {
        operator: ScenarioConfig::require(&cfg.operator, "operator")?.kind_name(),
        steps,
        stride: cfg.stride,
        initial: traj.initial(),
        last: traj.last(),
        max_mass_defect: traj.max_mass_defect(),
        support_collapse: traj.support_collapse(),
        verdict,
        verdict_error,
        growth_bound,
        limit_in_q,
        step_sizes: traj.step_sizes(),
    };
    out.write_json(
        "diagnostics.json",
        &Header::new("iterate", cfg.hash(), cfg.seed),
        &report,
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct EmptinessRow {
    n: usize,
    infeasible: bool,
    phase_one_objective: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct QsetReport {
    face: Option<FaceIndexSet>,
    result: Option<LpResult>,
    witness_q_residual: Option<f64>,
    witness_fixed_point_residual: Option<f64>,
    fix_check: Check,
    emptiness: Vec<EmptinessRow>,
}

pub fn qset(cfg: &ScenarioConfig, out: &OutDir) -> Result<Outcome, CliError> {
    if cfg.face.is_none() && cfg.emptiness.is_none() {
        return Err(CliError::Config(
            "face: missing field `face` (or `emptiness`)".into(),
        ));
    }
    let mut outcome = Outcome::default();
    let mut report = QsetReport {
        face: cfg.face.clone(),
        result: None,
        witness_q_residual: None,
        witness_fixed_point_residual: None,
        fix_check: Check::NotApplicable {
            reason: "no witness".into(),
        },
        emptiness: Vec::new(),
    };
    if let Some(face) = &cfg.face {
        let spec = volterra_spec(cfg)?;
        let result = q_set_point(&spec, face).map_err(CliError::violation)?;
        if let Some(y) = result.witness() {
            let op = OperatorHandle::Volterra(spec.clone());
            report.witness_q_residual = Some(q_membership_residual(&spec, y));
            report.witness_fixed_point_residual =
                Some(fixed_point_residual(&op, y).map_err(CliError::violation)?);
            // The witness solves the face rows only; rows beyond the face are
            // not part of the problem.
            let restricted = restrict(&spec, face);
            report.fix_check = match verify_q_subset_fix(&restricted, y) {
                Ok(_) => Check::Holds,
                Err(e) => {
                    outcome.violations.push(e.to_string());
                    Check::Violated {
                        detail: e.to_string(),
                    }
                }
            };
        }
        report.result = Some(result);
    }
    if let Some(range) = &cfg.emptiness {
        for n in range.from..=range.to {
            let row = match example52_emptiness(n) {
                Ok(obj) => EmptinessRow {
                    n,
                    infeasible: true,
                    phase_one_objective: Some(obj),
                    error: None,
                },
                Err(e @ QsetError::InvalidDimension(_)) => {
                    return Err(CliError::Config(format!("emptiness: {e}")))
                }
                Err(e) => {
                    outcome.violations.push(e.to_string());
                    EmptinessRow {
                        n,
                        infeasible: false,
                        phase_one_objective: None,
                        error: Some(e.to_string()),
                    }
                }
            };
            report.emptiness.push(row);
        }
    }
    out.write_json("qset.json", &Header::new("qset", cfg.hash(), cfg.seed), &report)?;
    Ok(outcome)
}

/// The coefficient matrix restricted to rows and columns in the face.
fn restrict(spec: &SkewSpec, face: &FaceIndexSet) -> SkewSpec {
    let n = face.max_index();
    let full = spec.truncate(n);
    SkewSpec::Dense(volterra_core::DenseSkew::from_upper(n, |k, i| {
        if face.contains(k) && face.contains(i) {
            full.get(k, i)
        } else {
            0.0
        }
    }))
}

#[derive(Serialize)]
struct PowerReport {
    m: usize,
    eps: f64,
    n: usize,
    bound: f64,
    max_deviation_from_full_support: f64,
}

#[derive(Serialize)]
struct StudySummary {
    gap_rows: usize,
    max_gap_ratio: f64,
    gap_violations: usize,
    tail_rows: usize,
    max_tail_ratio: f64,
    tail_violations: usize,
    converge_power: Option<PowerReport>,
}

pub fn truncation_study(cfg: &ScenarioConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let study = ScenarioConfig::require(&cfg.study, "study")?;
    let bad = |field: &str, e: &dyn std::fmt::Display| CliError::Config(format!("study.{field}: {e}"));
    let x = study.profile.point(cfg.seed, "study.profile")?;
    let fam = CompatibleFamily::with_tail(study.base.clone(), study.tails.0.clone())
        .map_err(|e| bad("base", &e))?;
    if study.m.contains(&0) {
        return Err(bad("m", &"powers must be at least 1"));
    }
    if study.n.contains(&0) || study.w_n.contains(&0) {
        return Err(bad("n", &"truncation orders must be at least 1"));
    }
    let grid: Vec<(usize, usize, usize)> = study
        .m
        .iter()
        .flat_map(|&m| {
            study
                .n
                .iter()
                .flat_map(move |&n| study.p.iter().map(move |&p| (m, n, p)))
        })
        .collect();
    let rows = gap_study(&fam, &x, &grid).map_err(CliError::violation)?;
    let gap_violations = rows.iter().filter(|r| r.gap > r.bound + GAP_SLACK).count();

    let mut tail_rows: Vec<TailGapRow> = Vec::new();
    for &n in &study.w_n {
        tail_rows.extend(tail_gap_rows(&fam, &x, n, &study.tails.1).map_err(|e| bad("tails", &e))?);
    }
    let tail_violations = tail_rows
        .iter()
        .filter(|r| r.gap.max(r.gap_other) > r.bound + TAIL_SLACK)
        .count();

    let converge = match study.eps {
        None => None,
        Some(eps) => {
            let m = study.m.iter().copied().max().unwrap_or(1);
            let approx = converge_power(&fam, &x, m, eps).map_err(|e| bad("eps", &e))?;
            let full = fam
                .vn_power(x.max_index().max(1), &x, m)
                .map_err(CliError::violation)?;
            let deviation = (1..=x.max_index())
                .map(|k| (approx.point.get(k) - full.get(k)).abs())
                .fold(0.0, f64::max);
            Some(PowerReport {
                m,
                eps,
                n: approx.n,
                bound: approx.bound,
                max_deviation_from_full_support: deviation,
            })
        }
    };

    let mut outcome = Outcome::default();
    if gap_violations > 0 {
        outcome.violations.push(format!(
            "{gap_violations} power-truncation gaps exceed their bound"
        ));
    }
    if tail_violations > 0 {
        outcome.violations.push(format!(
            "{tail_violations} tail-replacement gaps exceed their bound"
        ));
    }
    if let Some(p) = &converge {
        if p.max_deviation_from_full_support >= p.eps {
            outcome.violations.push(format!(
                "adaptive power deviates by {} >= {}",
                p.max_deviation_from_full_support, p.eps
            ));
        }
    }

    out.write_with("gaps.csv", |w| write_gap_csv(&rows, w))?;
    out.write_with("w_vs_v.csv", |w| write_tail_csv(&tail_rows, w))?;
    let summary = StudySummary {
        gap_rows: rows.len(),
        max_gap_ratio: max_gap_ratio(&rows),
        gap_violations,
        tail_rows: tail_rows.len(),
        max_tail_ratio: tail_rows.iter().map(TailGapRow::ratio).fold(0.0, f64::max),
        tail_violations,
        converge_power: converge,
    };
    out.write_json(
        "summary.json",
        &Header::new("truncation-study", cfg.hash(), cfg.seed),
        &summary,
    )?;
    Ok(outcome)
}
