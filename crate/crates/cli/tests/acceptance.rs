use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use volterra_core::dynamics::{
    check_growth_bound, detect_convergence, iterate, ConvergenceStatus, DEFAULT_CONVERGENCE_WINDOW,
    DEFAULT_TOL,
};
use volterra_core::extension::{check_w_equals_v, converge_power, power_truncation_gap, CompatibleFamily};
use volterra_core::operator::{
    conjugate_apply, fixed_point_residual, tensor_apply, volterra_apply, OperatorHandle,
};
use volterra_core::qset::{
    example52_emptiness, finitely_generated_solution, q_membership_residual, q_set_point, QsetError,
};
use volterra_core::skew::{from_tensor, to_tensor};
use volterra_core::{DenseSkew, FaceIndexSet, SimplexPoint, SkewSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries on the 2^-32 grid keep tensor roundtrips exact.
fn dyadic(rng: &mut ChaCha8Rng, n: usize) -> DenseSkew {
    let scale = (1u64 << 32) as f64;
    DenseSkew::from_upper(n, |_, _| {
        rng.random_range(-(1i64 << 32)..=(1i64 << 32)) as f64 / scale
    })
}

fn interior(rng: &mut ChaCha8Rng, n: usize) -> SimplexPoint {
    SimplexPoint::sample_interior_with(&FaceIndexSet::initial(n).unwrap(), rng)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn samples(seed: u64) -> Vec<(DenseSkew, Vec<SimplexPoint>)> {
    let mut rng = rng(seed);
    (0..200)
        .map(|_| {
            let n = rng.random_range(2..=64);
            let a = dyadic(&mut rng, n);
            let xs = (0..10).map(|_| interior(&mut rng, n)).collect();
            (a, xs)
        })
        .collect()
}

fn simplex_preservation() -> Outcome {
    let mut worst = 0.0f64;
    for (a, xs) in samples(1) {
        let spec = SkewSpec::Dense(a);
        for x in xs {
            let y = volterra_apply(&spec, &x);
            worst = worst.max(y.mass_defect());
            ensure(y.mass_defect() <= 1e-12, || {
                format!("mass defect {}", y.mass_defect())
            })?;
            ensure(y.iter().all(|(_, w)| w >= -1e-15), || {
                "negative coordinate".into()
            })?;
            ensure(y.support().eq(x.support()), || "support changed".into())?;
        }
    }
    Ok(format!("2000 images, max mass defect {worst:.1e}"))
}

fn canonical_identities() -> Outcome {
    let mut rng = rng(2);
    let mut worst = 0.0f64;
    for (a, xs) in samples(2) {
        let n = a.dim();
        let t = to_tensor(&a);
        ensure(from_tensor(&t).map_err(|e| e.to_string())? == a, || {
            format!("roundtrip at dim {n}")
        })?;
        let spec = SkewSpec::Dense(a);
        for x in &xs {
            let y = interior(&mut rng, n);
            let xy = conjugate_apply(&spec, x, &y);
            ensure(xy == conjugate_apply(&spec, &y, x), || {
                "conjugate not symmetric".into()
            })?;
            let vx = volterra_apply(&spec, x);
            let diag = conjugate_apply(&spec, x, x).l1_distance(&vx);
            ensure(diag < 1e-15, || format!("conjugate diagonal off by {diag}"))?;
            let via = tensor_apply(&t, x, n).map_err(|e| e.to_string())?;
            for k in 1..=n {
                let d = (via.get(k) - vx.get(k)).abs();
                worst = worst.max(d);
                ensure(d <= 1e-13, || format!("tensor form off by {d}"))?;
            }
        }
    }
    Ok(format!("200 roundtrips exact, max tensor deviation {worst:.1e}"))
}

fn lipschitz_and_growth() -> Outcome {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.random_range(2..=32);
        let spec = SkewSpec::Dense(dyadic(&mut rng, n));
        let (x, y) = (interior(&mut rng, n), interior(&mut rng, n));
        let d = x.l1_distance(&y);
        let lhs = volterra_apply(&spec, &x).l1_distance(&volterra_apply(&spec, &y));
        worst = worst.max(lhs / d);
        ensure(lhs <= 3.0 * d + 1e-12, || format!("ratio {}", lhs / d))?;
    }
    for _ in 0..500 {
        let n = rng.random_range(2..=32);
        let op = OperatorHandle::volterra(SkewSpec::Dense(dyadic(&mut rng, n))).unwrap();
        let traj = iterate(&op, &interior(&mut rng, n), 10).map_err(|e| e.to_string())?;
        check_growth_bound(&traj).map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "max Lipschitz ratio {worst:.3}, 500 trajectories within 2^m x_k"
    ))
}

fn all_kinds(rng: &mut ChaCha8Rng) -> Vec<SkewSpec> {
    vec![
        SkewSpec::Zero,
        SkewSpec::Dense(dyadic(rng, 64)),
        SkewSpec::block_diagonal(vec![
            dyadic(rng, 7),
            DenseSkew::from_upper(3, |_, _| -1.0),
            dyadic(rng, 60),
        ]),
        SkewSpec::pair_sequence((1..=32).map(|k| 1.0 / k as f64).collect()).unwrap(),
        SkewSpec::AlternatingSign,
    ]
}

fn fixed_points() -> Outcome {
    let mut rng = rng(4);
    for spec in all_kinds(&mut rng) {
        for i in 1..=64 {
            let e = SimplexPoint::extreme(i).unwrap();
            ensure(volterra_apply(&spec, &e) == e, || {
                format!("{} moves e{i}", spec.kind_name())
            })?;
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=16);
        let spec = SkewSpec::Dense(dyadic(&mut rng, n));
        let r = q_set_point(&spec, &FaceIndexSet::initial(n).unwrap()).map_err(|e| e.to_string())?;
        let y = r.witness().ok_or("finite Q reported empty")?;
        ensure(q_membership_residual(&spec, y) <= 1e-9, || {
            "witness outside Q".into()
        })?;
        let op = OperatorHandle::volterra(spec).unwrap();
        let res = fixed_point_residual(&op, y).map_err(|e| e.to_string())?;
        worst = worst.max(res);
        ensure(res <= 1e-9, || format!("witness residual {res}"))?;
    }
    Ok(format!(
        "vertices fixed for 5 kinds, max witness residual {worst:.1e}"
    ))
}

fn example_pairs() -> Outcome {
    let op = OperatorHandle::volterra(SkewSpec::pair_sequence(vec![1.0; 20]).unwrap()).unwrap();
    let traj = iterate(&op, &SimplexPoint::uniform(40).unwrap(), 5000).map_err(|e| e.to_string())?;
    let v = detect_convergence(&traj, DEFAULT_TOL, DEFAULT_CONVERGENCE_WINDOW).map_err(|e| e.to_string())?;
    let ConvergenceStatus::Converged { limit, at_step } = &v.status else {
        return Err(format!("verdict {:?}", v.status));
    };
    let odd: f64 = limit.iter().filter(|(k, _)| k % 2 == 1).map(|(_, w)| w).sum();
    ensure(odd < 1e-6, || format!("odd mass {odd}"))?;
    for (s, w) in traj.points().windows(2).enumerate() {
        for k in 1..=40 {
            let (before, after) = (w[0].get(k), w[1].get(k));
            let ok = if k % 2 == 0 {
                after >= before - 1e-14
            } else {
                after <= before + 1e-14
            };
            ensure(ok, || format!("coordinate {k} not monotone at step {}", s + 1))?;
        }
    }
    Ok(format!("converged at step {at_step}, odd mass {odd:.1e}"))
}

fn example_alternating() -> Outcome {
    for n in 2..64 {
        match example52_emptiness(n) {
            Ok(_) => {}
            Err(QsetError::UnexpectedlyFeasible(n)) => return Err(format!("feasible at n = {n}")),
            Err(e) => return Err(e.to_string()),
        }
    }
    let op = OperatorHandle::volterra(SkewSpec::AlternatingSign).unwrap();
    let mut rng = rng(6);
    let starts = [SimplexPoint::uniform(40).unwrap(), interior(&mut rng, 40)];
    let mut limits = Vec::new();
    for x in &starts {
        let traj = iterate(&op, x, 10_000).map_err(|e| e.to_string())?;
        check_growth_bound(&traj).map_err(|e| e.to_string())?;
        let v =
            detect_convergence(&traj, DEFAULT_TOL, DEFAULT_CONVERGENCE_WINDOW).map_err(|e| e.to_string())?;
        let limit = v.limit().ok_or_else(|| format!("verdict {:?}", v.status))?;
        ensure(limit.max_index() <= 40, || "limit left the face".into())?;
        let res = q_membership_residual(&SkewSpec::AlternatingSign, limit);
        ensure(res > 0.0, || "truncated limit lies in the infinite Q".into())?;
        limits.push(format!("{:?}", limit.support().collect::<Vec<_>>()));
    }
    Ok(format!(
        "infeasible for n in 2..64, truncated limits supported on {}",
        limits.join(" and ")
    ))
}

fn shift() -> Outcome {
    let op = OperatorHandle::shift();
    let mut rng = rng(7);
    let mut starts = vec![SimplexPoint::extreme(1).unwrap()];
    starts.extend((0..5).map(|_| {
        let n = rng.random_range(2..=20);
        interior(&mut rng, n)
    }));
    for x0 in starts {
        let traj = iterate(&op, &x0, 100).map_err(|e| e.to_string())?;
        ensure(traj.last() == &x0.shifted(100), || {
            "support not translated by 100".into()
        })?;
        for x in traj.points() {
            let max = x.iter().map(|(_, w)| w).fold(0.0, f64::max);
            let res = fixed_point_residual(&op, x).map_err(|e| e.to_string())?;
            ensure(max > 0.0 && res >= 2.0 * max, || {
                format!("residual {res} below 2·{max}")
            })?;
        }
    }
    Ok("6 starts translated by 100, residual >= 2 max coordinate throughout".into())
}

fn block_construction() -> Outcome {
    let mut rng = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let blocks: Vec<DenseSkew> = (0..8)
            .map(|_| {
                let d = rng.random_range(1..=8);
                dyadic(&mut rng, d)
            })
            .collect();
        let z = finitely_generated_solution(&blocks).map_err(|e| e.to_string())?;
        ensure(z.mass_defect() <= 1e-12, || {
            format!("mass defect {}", z.mass_defect())
        })?;
        let total: usize = blocks.iter().map(DenseSkew::dim).sum();
        let spec = SkewSpec::block_diagonal(blocks);
        for k in 1..=total {
            let v: f64 = z.iter().map(|(i, w)| spec.entry(k, i) * w).sum();
            worst = worst.min(v);
            ensure(v >= -1e-9, || format!("row {k} is {v}"))?;
        }
    }
    Ok(format!("25 block systems, min row value {worst:.1e}"))
}

fn extension_machinery() -> Outcome {
    let mut rng = rng(9);
    let bases = [
        SkewSpec::AlternatingSign,
        SkewSpec::pair_sequence((1..=100).map(|k| 1.0 / (1 + k % 4) as f64).collect()).unwrap(),
        SkewSpec::Dense(dyadic(&mut rng, 200)),
    ];
    for base in &bases {
        let fam = CompatibleFamily::new(base.clone()).map_err(|e| e.to_string())?;
        for n in 1..128 {
            let x = interior(&mut rng, n);
            let v = fam.vn_apply(n, &x).map_err(|e| e.to_string())?;
            for n2 in n + 1..=128 {
                ensure(fam.vn_apply(n2, &x).map_err(|e| e.to_string())? == v, || {
                    format!("{} incompatible at {n} < {n2}", base.kind_name())
                })?;
            }
        }
    }

    let fam = CompatibleFamily::new(SkewSpec::AlternatingSign).unwrap();
    let x = SimplexPoint::geometric_profile(2000, 0.99).unwrap();
    let mut configs = 0;
    let mut worst = 0.0f64;
    for m in 1..=5 {
        for n in [100, 300, 500, 1000, 1500] {
            for p in [100, 500] {
                let rows = power_truncation_gap(&fam, &x, m, n, p).map_err(|e| e.to_string())?;
                worst = rows.iter().map(|r| r.ratio()).fold(worst, f64::max);
                configs += 1;
            }
        }
    }

    let tails = [SkewSpec::AlternatingSign, SkewSpec::Zero];
    for (i, tail) in tails.iter().enumerate() {
        let fam = CompatibleFamily::with_tail(SkewSpec::AlternatingSign, tail.clone()).unwrap();
        for n in [1, 10, 100, 500, 1000, 1999] {
            check_w_equals_v(&fam, &x, n, &tails[1 - i]).map_err(|e| e.to_string())?;
        }
    }

    let mut scans = Vec::new();
    for ratio in [0.99, 0.9] {
        let x = SimplexPoint::geometric_profile(2000, ratio).unwrap();
        let full = fam.vn_power(2000, &x, 5).map_err(|e| e.to_string())?;
        let approx = converge_power(&fam, &x, 5, 1e-6).map_err(|e| e.to_string())?;
        for k in 1..=2000 {
            let d = (approx.point.get(k) - full.get(k)).abs();
            ensure(d < 1e-6, || format!("converge_power off by {d} at {k}"))?;
        }
        scans.push(format!("n = {} for ratio {ratio}", approx.n));
    }
    Ok(format!(
        "{configs} gap configurations (max ratio {worst:.3}), converge_power {}",
        scans.join(", ")
    ))
}

fn injectivity() -> Outcome {
    let mut rng = rng(10);
    let mut tested = 0;
    let mut worst = f64::INFINITY;
    while tested < 10_000 {
        let n = rng.random_range(2..=32);
        let spec = SkewSpec::Dense(dyadic(&mut rng, n));
        let x = interior(&mut rng, n);
        let y = if tested % 2 == 0 {
            interior(&mut rng, n)
        } else {
            // Nearby pairs at the threshold distance.
            let (i, j) = (rng.random_range(1..=n), rng.random_range(1..=n));
            if i == j || x.get(j) < 1e-6 {
                continue;
            }
            let moved = x.iter().map(|(k, w)| {
                let d = if k == i {
                    5e-7
                } else if k == j {
                    -5e-7
                } else {
                    0.0
                };
                (k, w + d)
            });
            SimplexPoint::new(moved.collect::<Vec<_>>()).map_err(|e| e.to_string())?
        };
        if x.l1_distance(&y) < 1e-6 * (1.0 - 1e-9) {
            continue;
        }
        let out = volterra_apply(&spec, &x).l1_distance(&volterra_apply(&spec, &y));
        worst = worst.min(out);
        ensure(out >= 1e-12, || format!("output distance {out}"))?;
        tested += 1;
    }
    Ok(format!("10000 pairs, min output distance {worst:.1e}"))
}

const RERUNS: [(&str, &str); 8] = [
    ("apply", "transitive"),
    ("iterate", "example-5.1"),
    ("iterate", "example-5.2"),
    ("iterate", "shift"),
    ("iterate", "rps"),
    ("qset", "example-5.2"),
    ("qset", "rps"),
    ("truncation-study", "geometric"),
];

fn run_cli(cmd: &str, scenario: &str, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_volterra"))
        .args([cmd, "--scenario", scenario, "--seed", "11", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(status.success(), || {
        format!("{cmd} {scenario} exited with {status}")
    })
}

fn reproducibility() -> Outcome {
    let mut files = 0;
    for (cmd, scenario) in RERUNS {
        let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
        for d in &dirs {
            run_cli(cmd, scenario, d.path())?;
        }
        let mut names: Vec<_> = fs::read_dir(dirs[0].path())
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for name in names {
            let a = fs::read(dirs[0].path().join(&name)).map_err(|e| e.to_string())?;
            let b = fs::read(dirs[1].path().join(&name)).map_err(|e| format!("{name:?}: {e}"))?;
            ensure(a == b, || format!("{cmd} {scenario}: {name:?} differs"))?;
            files += 1;
        }
    }
    Ok(format!(
        "{} scenario runs, {files} files byte-identical",
        RERUNS.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("simplex preservation", simplex_preservation, Some(5)),
        ("canonical identities", canonical_identities, Some(5)),
        ("Lipschitz and growth bounds", lipschitz_and_growth, Some(10)),
        ("fixed points", fixed_points, Some(10)),
        ("paired species example", example_pairs, Some(2)),
        ("alternating example", example_alternating, Some(10)),
        ("shift operator", shift, Some(1)),
        ("block construction", block_construction, Some(2)),
        ("truncation machinery", extension_machinery, Some(60)),
        ("injectivity", injectivity, Some(5)),
        ("reproducibility", reproducibility, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > Duration::from_secs(b));
        let limit = budget.map(|b| format!(" / {b} s")).unwrap_or_default();
        let line = match (&outcome, over) {
            (Ok(detail), false) => format!("PASS {detail}"),
            (Ok(detail), true) => format!("FAIL over budget; {detail}"),
            (Err(e), _) => format!("FAIL {e}"),
        };
        if line.starts_with("FAIL") {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {line} [{:.2} s{limit}]",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
