//! Acceptance criteria 1-10. Runs as a plain binary so that every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

use std::time::Instant;

use clwr::analysis::l1_distance_sampled;
use clwr::{
    calibrate_rate, capacity_sweep, check_entropy, exponential_bound, l1_distance_exact, l1_error_away_from_waves, l1_error_vs_exact,
    linear_bound, loglog_slope, BoundParams, Branch, Capacity, CapacityDrop, ConstrainedProblem, EntropyProbe,
    ExogenousCapacity, FluxModel, Grid, PiecewiseConstraint, Scheme, Trajectory, WaveKind, WeightKernel,
    CLASSIFY_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// pinned tolerances
const EXIT_FLUX_REL: f64 = 0.10;
const INITIAL_GAP: f64 = 0.0155;
const FAR_EXCEEDS: f64 = 5.0;
const PAIR_SECONDS: f64 = 5.0;
const SLOPE_TARGET: f64 = 0.9;
const SLOPE_TOL: f64 = 0.15;
const SWEEP_SECONDS: f64 = 30.0;
const SHOCK_CONTRACT_TOL: f64 = 1e-10;
const LINEARITY_TOL: f64 = 1e-10;
const FROZEN_RATE: f64 = 0.275;
const FROZEN_TOL: f64 = 1e-12;
const SAMPLED_TOL: f64 = 1e-4;
const MIN_ORDER: f64 = 0.5;
const MIN_CLASSICAL_ORDER: f64 = 0.8;
const EXACT_ERROR: f64 = 1e-12;
const SMOOTH_MARGIN: f64 = 0.05;
const MASS_TOL_PER_STEP: f64 = 1e-10;
const ENTROPY_DX_FACTOR: f64 = 10.0;
const ENTROPY_OMITTED_MAX: f64 = -0.01;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_problem() -> ConstrainedProblem {
    let flux = FluxModel::quadratic();
    let p = PiecewiseConstraint::new(vec![0.8], vec![0.1875, 0.05], &flux).unwrap();
    ConstrainedProblem::new(flux, p, WeightKernel::affine(1.0).unwrap())
}

fn problems() -> Vec<ConstrainedProblem> {
    let flux = FluxModel::quadratic();
    let w = WeightKernel::affine(1.0).unwrap();
    let two = PiecewiseConstraint::new(vec![0.3, 0.7], vec![0.22, 0.12, 0.06], &flux).unwrap();
    let capped = PiecewiseConstraint::new(vec![0.5], vec![0.25, 0.1], &flux).unwrap();
    vec![
        reference_problem(),
        ConstrainedProblem::new(flux.clone(), two, w.clone()),
        ConstrainedProblem::new(flux, capped, w),
    ]
}

fn instability() -> Outcome {
    let setup = CapacityDrop::default();
    let start = Instant::now();
    let runs = setup.paired_runs(10, false).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let above = runs.first.mean_exit_flux_after(0.5);
    let below = runs.second.mean_exit_flux_after(0.5);
    let settled = |traj: &Trajectory, target: f64| {
        traj.steps
            .iter()
            .filter(|s| s.t > 0.5)
            .all(|s| (s.exit_flux - target).abs() <= EXIT_FLUX_REL * target)
    };
    let d0 = runs.distances[0].1;
    let d = runs.final_distance();
    check(
        settled(&runs.first, 0.05)
            && settled(&runs.second, 0.1875)
            && (d0 - INITIAL_GAP).abs() < 1e-12
            && d > FAR_EXCEEDS * INITIAL_GAP
            && secs < PAIR_SECONDS,
        format!("exit fluxes {above:.4} / {below:.4}, L1 at T=1 {d:.4} vs initial {d0:.4}, {secs:.2}s"),
    )
}

fn scaling_law() -> Outcome {
    let start = Instant::now();
    let report = capacity_sweep(&CapacityDrop::default(), &[0.05, 0.075, 0.1, 0.125, 0.15], 10, 0)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let slope = report.fit.slope;
    check(
        (slope - SLOPE_TARGET).abs() <= SLOPE_TOL && secs < SWEEP_SECONDS,
        format!("slope {slope:.4}, {secs:.2}s"),
    )
}

fn classifier_exhaustive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0usize;
    let mut pathological = 0usize;
    for pb in problems() {
        let jumps = pb.constraint.jumps().to_vec();
        let mut data: Vec<(f64, f64)> = Vec::with_capacity(170_000);
        let n = 400;
        for i in 0..n {
            for j in 0..n {
                data.push((i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64));
            }
        }
        for _ in 0..10_000 {
            let rho_r: f64 = rng.gen();
            let rho_l = if rng.gen_bool(0.2) {
                jumps[rng.gen_range(0..jumps.len())] + rng.gen_range(-1.5..1.5) * CLASSIFY_TOL
            } else {
                rng.gen()
            };
            data.push((rho_l.clamp(0.0, 1.0), rho_r));
        }
        for &j in &jumps {
            data.extend((0..n).map(|k| (j, k as f64 / (n - 1) as f64)));
        }
        for (rho_l, rho_r) in data {
            let cases = pb.matching_cases(rho_l, rho_r).map_err(|e| e.to_string())?;
            if cases.len() != 1 {
                return Err(format!("({rho_l}, {rho_r}) matches {cases:?}"));
            }
            if cases[0].is_pathological() {
                pathological += 1;
                if !jumps.iter().any(|j| (rho_l - j).abs() <= CLASSIFY_TOL) {
                    return Err(format!("({rho_l}, {rho_r}) tagged {} away from jumps", cases[0]));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} data over 3 constraints, {pathological} pathological"))
}

fn random_pathological(rng: &mut ChaCha8Rng, pbs: &[ConstrainedProblem]) -> (usize, f64, f64) {
    loop {
        let k = rng.gen_range(0..pbs.len());
        let jumps = pbs[k].constraint.jumps();
        let rho_l = jumps[rng.gen_range(0..jumps.len())];
        let rho_r: f64 = rng.gen();
        if pbs[k].classify(rho_l, rho_r).is_ok_and(|c| c.is_pathological()) {
            return (k, rho_l, rho_r);
        }
    }
}

fn extremality() -> Outcome {
    let pbs = problems();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let (k, rho_l, rho_r) = random_pathological(&mut rng, &pbs);
        let pb = &pbs[k];
        let f = &pb.flux;
        let all = pb.enumerate_solutions(rho_l, rho_r).map_err(|e| e.to_string())?;
        let exits: Vec<f64> = all.iter().map(|s| s.exit_flux(f)).collect();
        let max = exits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = exits.iter().cloned().fold(f64::INFINITY, f64::min);
        let q = pb.solve_q(rho_l, rho_r).map_err(|e| e.to_string())?.exit_flux(f);
        let p = pb.solve_p(rho_l, rho_r).map_err(|e| e.to_string())?.exit_flux(f);
        if q != max || p != min {
            return Err(format!("({rho_l}, {rho_r}): q {q} max {max}, p {p} min {min}"));
        }
    }
    Ok("1000 pathological data, solve_q = max and solve_p = min exactly".into())
}

fn nonclassical_contract() -> Outcome {
    let pbs = problems();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seen = 0usize;
    let mut worst = 0.0f64;
    while seen < 1000 {
        let pb = &pbs[rng.gen_range(0..pbs.len())];
        let (rho_l, rho_r): (f64, f64) = if rng.gen_bool(0.3) {
            let j = pb.constraint.jumps();
            (j[rng.gen_range(0..j.len())], rng.gen())
        } else {
            (rng.gen(), rng.gen())
        };
        let f = &pb.flux;
        let sols = pb.enumerate_solutions(rho_l, rho_r).map_err(|e| e.to_string())?;
        for s in sols.iter().filter(|s| !s.is_classical()) {
            let p_bar = s.p_bar.expect("nonclassical solutions carry a level");
            let hat = f.rho_hat(p_bar).map_err(|e| e.to_string())?;
            let chk = f.rho_check(p_bar).map_err(|e| e.to_string())?;
            let wave = s
                .solution
                .waves()
                .iter()
                .find(|w| w.kind == WaveKind::NonclassicalShock)
                .ok_or_else(|| format!("({rho_l}, {rho_r}) has no nonclassical wave"))?;
            let residual = [
                f.flow(hat) - p_bar,
                f.flow(chk) - p_bar,
                f.flow(wave.left) - p_bar,
                f.flow(wave.right) - p_bar,
            ]
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()));
            worst = worst.max(residual);
            let rb = f.critical_density();
            let (pm, pp) = pb.constraint.one_sided(rho_l, CLASSIFY_TOL);
            if residual > SHOCK_CONTRACT_TOL
                || !(chk <= rb && rb <= hat)
                || !(wave.right <= rb && rb <= wave.left)
                || !(p_bar >= pp - CLASSIFY_TOL && p_bar <= pm + CLASSIFY_TOL)
            {
                return Err(format!("({rho_l}, {rho_r}) p_bar {p_bar}: residual {residual:e}"));
            }
            seen += 1;
        }
    }
    Ok(format!("{seen} nonclassical solutions, worst residual {worst:.1e}"))
}

fn linear_distance() -> Outcome {
    let pb = reference_problem();
    let f = &pb.flux;
    let q = pb.solve_q(0.8, 0.5).map_err(|e| e.to_string())?;
    let p = pb.solve_p(0.8, 0.5).map_err(|e| e.to_string())?;
    let setup = CapacityDrop::default().two_solver_setup();
    let mut rates = Vec::new();
    for t in [0.1, 0.5, 1.0] {
        let d = l1_distance_exact(f, &q.solution, &p.solution, t, -3.0, 3.0).map_err(|e| e.to_string())?;
        let bound = linear_bound(f, setup, t).map_err(|e| e.to_string())?.total;
        if d > bound {
            return Err(format!("t = {t}: distance {d} above linear bound {bound}"));
        }
        let sampled = l1_distance_sampled(|x| q.solution.at(f, t, x), |x| p.solution.at(f, t, x), -3.0, 3.0, 100_000);
        if (sampled - d).abs() > SAMPLED_TOL {
            return Err(format!("t = {t}: exact {d}, sampled {sampled}"));
        }
        rates.push(d / t);
    }
    let spread = rates.iter().map(|r| (r - rates[0]).abs()).fold(0.0, f64::max);
    check(
        spread <= LINEARITY_TOL && (rates[0] - FROZEN_RATE).abs() <= FROZEN_TOL,
        format!("distance / t = {:.12}, spread {spread:.1e}", rates[0]),
    )
}

fn convergence() -> Outcome {
    let pb = reference_problem();
    let f = pb.flux.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lines = Vec::new();
    let (mut min_order, mut min_classical, mut n_classical) = (f64::INFINITY, f64::INFINITY, 0);
    let mut data = 0;
    while data < 20 {
        let (rho_l, rho_r): (f64, f64) = (rng.gen(), rng.gen());
        let Ok(case) = pb.classify(rho_l, rho_r) else { continue };
        if case.is_pathological() {
            continue;
        }
        let exact = pb.solve_q(rho_l, rho_r).map_err(|e| e.to_string())?;
        let tau = pb.validity_horizon(&exact);
        if tau < 0.1 {
            continue;
        }
        let t = (0.5 * tau).min(0.4);
        let mut errors = Vec::new();
        let mut smooth = Vec::new();
        for dx in [0.02, 0.01, 0.005, 0.0025] {
            let grid = Grid::new(-2.0, 2.0, dx, dx / 10.0, &f).map_err(|e| e.to_string())?;
            let cap = Capacity::NonLocal {
                p: pb.constraint.clone(),
                branch: Branch::Plus,
            };
            let scheme = Scheme::new(f.clone(), grid, pb.weight.clone(), cap).map_err(|e| e.to_string())?;
            let traj = scheme.run(grid.riemann_cells(rho_l, rho_r), &[t], false).map_err(|e| e.to_string())?;
            let cells = &traj.last().cells;
            errors.push((dx, l1_error_vs_exact(&grid, cells, &f, &exact.solution, t)));
            smooth.push((dx, l1_error_away_from_waves(&grid, cells, &f, &exact.solution, t, SMOOTH_MARGIN)));
        }
        data += 1;
        if errors.iter().all(|e| e.1 <= EXACT_ERROR) {
            lines.push(format!("({rho_l:.3}, {rho_r:.3}) {case} exact"));
            continue;
        }
        let decreasing = errors.windows(2).all(|w| w[1].1 < w[0].1);
        let order = loglog_slope(&errors).map_err(|e| e.to_string())?.slope;
        // errors at round-off level away from the waves count as exact
        smooth.retain(|e| e.1 > EXACT_ERROR);
        let smooth_order = if smooth.len() < 2 {
            f64::INFINITY
        } else {
            loglog_slope(&smooth).map_err(|e| e.to_string())?.slope
        };
        lines.push(format!(
            "({rho_l:.3}, {rho_r:.3}) {case:<4} order {order:.2}, away from waves {smooth_order:.2}"
        ));
        if !decreasing {
            return Err(format!("({rho_l}, {rho_r}) errors not decreasing: {errors:?}"));
        }
        min_order = min_order.min(order);
        if case.is_classical() {
            n_classical += 1;
            min_classical = min_classical.min(smooth_order);
        }
    }
    for l in &lines {
        println!("      {l}");
    }
    check(
        min_order >= MIN_ORDER && min_classical >= MIN_CLASSICAL_ORDER && n_classical > 0,
        format!("20 data, min order {min_order:.3}, min classical order away from waves {min_classical:.3} over {n_classical}"),
    )
}

fn conservation() -> Outcome {
    let f = FluxModel::quadratic();
    let setup = CapacityDrop::default();
    let mut runs: Vec<(String, Trajectory)> = Vec::new();
    let scheme = setup.scheme().map_err(|e| e.to_string())?;
    for rho_l in [setup.rho_l_above, setup.rho_l_below, 0.8, 1.0, 0.0] {
        let traj = scheme
            .run(scheme.grid.riemann_cells(rho_l, setup.rho_r), &[1.0], true)
            .map_err(|e| e.to_string())?;
        runs.push((format!("capacity drop rho_l={rho_l}"), traj));
    }
    let grid = Grid::new(-5.0, 5.0, 0.02, 0.005, &f).map_err(|e| e.to_string())?;
    let light = ExogenousCapacity::traffic_light(0.25, 1.0, 2.0).map_err(|e| e.to_string())?;
    let s = Scheme::new(f.clone(), grid, WeightKernel::affine(1.0).unwrap(), Capacity::Exogenous(light))
        .map_err(|e| e.to_string())?;
    let traj = s.run(grid.riemann_cells(0.3, 0.3), &[6.0], true).map_err(|e| e.to_string())?;
    runs.push(("traffic light".into(), traj));
    let pb = &problems()[1];
    let cap = Capacity::NonLocal {
        p: pb.constraint.clone(),
        branch: Branch::Minus,
    };
    let s = Scheme::new(f.clone(), grid, pb.weight.clone(), cap).map_err(|e| e.to_string())?;
    let bumpy = grid.sample(|x| 0.5 + 0.45 * (3.0 * x).sin());
    let traj = s.run(bumpy, &[2.0], true).map_err(|e| e.to_string())?;
    runs.push(("two jumps, oscillating data".into(), traj));

    let mut worst_ratio = 0.0f64;
    for (name, traj) in &runs {
        let n = traj.steps.len();
        let in_range = traj
            .history
            .as_ref()
            .unwrap()
            .iter()
            .chain(traj.snapshots.iter().map(|s| &s.cells))
            .all(|c| c.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let defect = traj.mass_defect();
        worst_ratio = worst_ratio.max(defect / n as f64);
        if !in_range || defect > MASS_TOL_PER_STEP * n as f64 || traj.max_cap_excess() > 0.0 {
            return Err(format!(
                "{name}: in range {in_range}, defect {defect:e} over {n} steps, cap excess {:e}",
                traj.max_cap_excess()
            ));
        }
    }
    Ok(format!("{} runs, worst mass defect per step {worst_ratio:.1e}", runs.len()))
}

fn entropy() -> Outcome {
    let setup = CapacityDrop::default();
    let scheme = setup.scheme().map_err(|e| e.to_string())?;
    let traj = scheme
        .run(scheme.grid.riemann_cells(setup.rho_l_above, setup.rho_r), &[setup.t_end], true)
        .map_err(|e| e.to_string())?;
    let probe = EntropyProbe::regular(&scheme.flux, 19, setup.t_end, 4, -2.0, 2.0, 0.25);
    let with = check_entropy(&traj, &scheme.flux, &probe, true).map_err(|e| e.to_string())?;
    let without = check_entropy(&traj, &scheme.flux, &probe, false).map_err(|e| e.to_string())?;
    let tol = ENTROPY_DX_FACTOR * scheme.grid.dx;
    check(
        with.min_residual >= -tol && without.min_residual < ENTROPY_OMITTED_MAX,
        format!(
            "with boundary term {:.5} (tol {tol}), without {:.5}",
            with.min_residual, without.min_residual
        ),
    )
}

fn gronwall() -> Outcome {
    let setup = CapacityDrop::default();
    let runs = setup.paired_runs(20, false).map_err(|e| e.to_string())?;
    let h = setup.p_hi - setup.p_lo;
    let rate = calibrate_rate(h, &runs.distances).map_err(|e| e.to_string())?;
    for &(t, d) in runs.distances.iter().filter(|(t, _)| *t > 0.0) {
        let bound = exponential_bound(BoundParams::new(h, rate, t).map_err(|e| e.to_string())?);
        if d > bound {
            return Err(format!("t = {t}: distance {d} above bound {bound}"));
        }
    }
    Ok(format!("h = {h}, calibrated N = {rate:.4}, 20 output times"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("instability of the reference pair", instability),
        ("scaling law of the capacity sweep", scaling_law),
        ("classifier exhaustiveness", classifier_exhaustive),
        ("extremality of the two solvers", extremality),
        ("nonclassical shock contract", nonclassical_contract),
        ("linear distance between solvers", linear_distance),
        ("convergence to exact solutions", convergence),
        ("conservation and bounds", conservation),
        ("entropy inequality", entropy),
        ("exponential stability bound", gronwall),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
