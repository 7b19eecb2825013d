//! The four batch commands behind the `clwr` binary. Each reads a validated
//! [`RunConfig`], writes CSV files into an output directory and returns a
//! short human-readable summary.

use std::path::{Path, PathBuf};

use crate::analysis::{
    calibrate_rate, exponential_bound, l1_distance_exact, linear_bound, BoundParams, TwoSolverSetup,
};
use crate::config::{CompareMode, ExogenousKind, InitKind, RunConfig, SolverChoice};
use crate::constrained::{ConstrainedProblem, ConstrainedSolution};
use crate::error::{Error, Result};
use crate::experiments::{capacity_sweep, run_pair, CapacityDrop};
use crate::report::{format_g12 as fmt, CsvTable, Field};

/// Environment variable that replaces `output.dir`.
pub const OUTPUT_ENV: &str = "CLWR_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Riemann,
    Simulate,
    Compare,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Riemann => "riemann",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Outcome {
    fn write(&mut self, dir: &Path, name: &str, table: &CsvTable) -> Result<()> {
        let path = dir.join(name);
        table.write(&path)?;
        self.files.push(path);
        Ok(())
    }
}

/// `$CLWR_OUT` when set and non-empty, `output.dir` otherwise.
pub fn output_dir(config: &RunConfig) -> PathBuf {
    match std::env::var(OUTPUT_ENV) {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(&config.output.dir),
    }
}

/// Runs `command`, writing into `out_dir` (created if missing).
pub fn run(command: Command, config: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::config(format!("cannot create output directory {}: {e}", out_dir.display())))?;
    log::info!("{} -> {}", command.name(), out_dir.display());
    match command {
        Command::Riemann => riemann(config, out_dir),
        Command::Simulate => simulate(config, out_dir),
        Command::Compare => compare(config, out_dir),
        Command::Sweep => sweep(config, out_dir),
    }
}

fn table(config: &RunConfig, title: &str, columns: &[&str]) -> CsvTable {
    let mut t = CsvTable::new(columns);
    t.comment(title.to_owned());
    t.config_block(&config.to_toml());
    t
}

fn problem(config: &RunConfig) -> Result<ConstrainedProblem> {
    let flux = config.flux()?;
    let p = config.constraint(&flux)?;
    Ok(ConstrainedProblem::new(flux, p, config.weight()?))
}

fn require_riemann(config: &RunConfig, what: &str) -> Result<()> {
    if config.init.kind != InitKind::Riemann {
        return Err(Error::config(format!("{what} needs init.kind = \"riemann\"")));
    }
    Ok(())
}

fn riemann(config: &RunConfig, out: &Path) -> Result<Outcome> {
    require_riemann(config, "riemann")?;
    let pb = problem(config)?;
    let flux = &pb.flux;
    let (rho_l, rho_r) = (config.init.rho_l, config.init.rho_r);
    let case = pb.classify(rho_l, rho_r)?;
    let labelled: Vec<(String, ConstrainedSolution)> = if config.riemann.enumerate {
        pb.enumerate_solutions(rho_l, rho_r)?
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("admissible_{}", i + 1), s))
            .collect()
    } else {
        match config.riemann.solver {
            SolverChoice::Q => vec![("q".into(), pb.solve_q(rho_l, rho_r)?)],
            SolverChoice::P => vec![("p".into(), pb.solve_p(rho_l, rho_r)?)],
            SolverChoice::Both => {
                let q = pb.solve_q(rho_l, rho_r)?;
                let p = pb.solve_p(rho_l, rho_r)?;
                if q == p {
                    vec![("q=p".into(), q)]
                } else {
                    vec![("q".into(), q), ("p".into(), p)]
                }
            }
        }
    };
    // by default sample well inside the shortest positive horizon
    let t = config.riemann.t.unwrap_or_else(|| {
        labelled
            .iter()
            .map(|(_, s)| s.horizon)
            .filter(|h| *h > 0.0)
            .fold(config.grid.t_end, |t, h| t.min(0.5 * h))
    });
    let mut outcome = Outcome::default();
    outcome.summary.push(format!("case {case} for (rho_l, rho_r) = ({rho_l}, {rho_r})"));

    let mut sols = table(
        config,
        "constrained Riemann solutions",
        &["solution", "label", "case", "p_bar", "exit_flux", "trace_left", "trace_right", "horizon"],
    );
    sols.comment(format!("case = {case}"));
    let mut waves = table(
        config,
        "wave table",
        &["solution", "kind", "left", "right", "speed_lo", "speed_hi"],
    );
    waves.comment(format!("case = {case}"));
    for (i, (label, s)) in labelled.iter().enumerate() {
        let (l, r) = s.traces(flux);
        let p_bar = s.p_bar.map_or(Field::from("classical"), Field::from);
        sols.push(vec![
            (i + 1).into(),
            label.as_str().into(),
            case.as_str().into(),
            p_bar,
            s.exit_flux(flux).into(),
            l.into(),
            r.into(),
            s.horizon.into(),
        ]);
        for w in s.solution.waves() {
            waves.push(vec![
                (i + 1).into(),
                w.kind.as_str().into(),
                w.left.into(),
                w.right.into(),
                w.speed_lo.into(),
                w.speed_hi.into(),
            ]);
        }
        let p_text = s.p_bar.map_or("classical".to_owned(), |p| format!("p_bar = {}", fmt(p)));
        outcome.summary.push(format!(
            "solution {} ({label}): {p_text}, exit flux {}, horizon {}",
            i + 1,
            fmt(s.exit_flux(flux)),
            fmt(s.horizon)
        ));
        if t >= s.horizon {
            let warning = format!("solution {} sampled at t = {} beyond its horizon {}", i + 1, fmt(t), fmt(s.horizon));
            log::warn!("{warning}");
            sols.comment(format!("warning: {warning}"));
        }
    }
    outcome.write(out, "riemann_solutions.csv", &sols)?;
    outcome.write(out, "riemann_waves.csv", &waves)?;

    let names: Vec<String> = (1..=labelled.len()).map(|i| format!("rho_{i}")).collect();
    let mut cols = vec!["x"];
    cols.extend(names.iter().map(String::as_str));
    let mut samples = table(config, "profiles at the sampling time", &cols);
    samples.comment(format!("t = {}", fmt(t)));
    let (a, b) = (config.grid.x_min, config.grid.x_max);
    let n = config.riemann.samples;
    for k in 0..n {
        let x = a + (b - a) * k as f64 / (n - 1) as f64;
        let mut row = vec![Field::from(x)];
        row.extend(labelled.iter().map(|(_, s)| Field::from(s.solution.at(flux, t, x))));
        samples.push(row);
    }
    outcome.write(out, "riemann_samples.csv", &samples)?;
    Ok(outcome)
}

fn simulate(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let scheme = config.scheme()?;
    let g = scheme.grid;
    let cells = config.initial_cells(&g, &scheme.flux)?;
    let traj = scheme.run(cells, &config.output_times(), false)?;
    let n_steps = traj.steps.len();
    let defect = traj.mass_defect();
    if defect > 1e-10 * n_steps.max(1) as f64 {
        return Err(Error::Numerical {
            step: n_steps,
            message: format!("mass balance off by {defect}"),
        });
    }
    let excess = traj.max_cap_excess();
    if excess > 0.0 {
        return Err(Error::Numerical {
            step: n_steps,
            message: format!("exit flux exceeded the cap by {excess}"),
        });
    }
    let mut outcome = Outcome::default();
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let mut t = table(config, "density snapshot", &["x_center", "rho"]);
        t.comment(format!("t = {}", snap.t));
        t.comment(format!("xi = {}", snap.xi_current));
        for (x, v) in g.centers().into_iter().zip(&snap.cells) {
            t.push(vec![x.into(), (*v).into()]);
        }
        outcome.write(out, &format!("profile_{i:03}.csv"), &t)?;
    }
    let mut steps = table(config, "per-step constraint history", &["t", "xi", "q", "exit_flux"]);
    for s in &traj.steps {
        steps.push(vec![s.t.into(), s.xi.into(), s.q.into(), s.exit_flux.into()]);
    }
    outcome.write(out, "steps.csv", &steps)?;
    let last = traj.last();
    outcome.summary.push(format!("{n_steps} steps to t = {}", fmt(last.t)));
    outcome.summary.push(format!("mass balance defect {defect:.3e}"));
    outcome.summary.push(format!(
        "final xi {}, final exit flux {}",
        fmt(last.xi_current),
        fmt(traj.steps.last().map_or(f64::NAN, |s| s.exit_flux))
    ));
    Ok(outcome)
}

fn compare(config: &RunConfig, out: &Path) -> Result<Outcome> {
    require_riemann(config, "compare")?;
    match config.compare.mode {
        CompareMode::Solvers => compare_solvers(config, out),
        CompareMode::Pair => compare_pair(config, out),
    }
}

const DISTANCE_COLUMNS: [&str; 4] = ["t", "l1_distance", "bound_linear", "bound_exponential"];

fn compare_solvers(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let pb = problem(config)?;
    let flux = &pb.flux;
    let (rho_l, rho_r) = (config.init.rho_l, config.init.rho_r);
    let q = pb.solve_q(rho_l, rho_r)?;
    let p = pb.solve_p(rho_l, rho_r)?;
    let times = &config.compare.times;
    let mut t = table(config, "distance between the extreme solvers", &DISTANCE_COLUMNS);
    t.comment(format!("case = {}", q.case));
    let mut outcome = Outcome::default();
    if q == p {
        t.comment("both solvers return the same solution");
        for &s in times {
            t.push(vec![s.into(), 0.0.into(), 0.0.into(), 0.0.into()]);
        }
        outcome.summary.push(format!("case {}: solvers agree, distance 0", q.case));
        outcome.write(out, "compare.csv", &t)?;
        return Ok(outcome);
    }
    let (p_hi, p_lo) = (q.exit_flux(flux), p.exit_flux(flux));
    let h = p_hi - p_lo;
    let reach = q
        .solution
        .breakpoints()
        .into_iter()
        .chain(p.solution.breakpoints())
        .fold(0.0f64, |m, s| m.max(s.abs()));
    let mut rows = Vec::new();
    for &s in times {
        let half = reach * s + 1.0;
        let d = l1_distance_exact(flux, &p.solution, &q.solution, s, -half, half)?;
        let lin = linear_bound(flux, TwoSolverSetup { rho_l, rho_r, p_hi, p_lo }, s)?;
        rows.push((s, d, lin.total));
    }
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let rate = calibrate_rate(h, &samples)?;
    t.comment(format!("h = {h}"));
    t.comment(format!("N = {rate}"));
    for (s, d, lin) in rows {
        let e = exponential_bound(BoundParams::new(h, rate, s)?);
        t.push(vec![s.into(), d.into(), lin.into(), e.into()]);
        outcome.summary.push(format!(
            "t = {}: distance {}, linear bound {}, exponential bound {}",
            fmt(s),
            fmt(d),
            fmt(lin),
            fmt(e)
        ));
    }
    outcome.summary.insert(0, format!("case {}, h = {}, calibrated N = {}", q.case, fmt(h), fmt(rate)));
    outcome.write(out, "compare.csv", &t)?;
    Ok(outcome)
}

fn compare_pair(config: &RunConfig, out: &Path) -> Result<Outcome> {
    if config.exogenous_q.kind != ExogenousKind::None {
        return Err(Error::config("compare mode \"pair\" needs exogenous_q.kind = \"none\""));
    }
    let scheme = config.scheme()?;
    let g = scheme.grid;
    let (rho_l, alt, rho_r) = (config.init.rho_l, config.compare.rho_l_alt, config.init.rho_r);
    let runs = run_pair(
        &scheme,
        g.riemann_cells(rho_l, rho_r),
        g.riemann_cells(alt, rho_r),
        &config.compare.times,
        false,
    )?;
    let p = config.constraint(&scheme.flux)?;
    let levels = p.levels();
    // the jump nearest to the two left states and its two levels
    let mid = 0.5 * (rho_l + alt);
    let nearest = p
        .jumps()
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - mid).abs().partial_cmp(&(b.1 - mid).abs()).unwrap());
    let mut t = table(config, "distance between two scheme runs", &DISTANCE_COLUMNS);
    t.comment(format!("rho_l = {rho_l}, rho_l_alt = {alt}, rho_r = {rho_r}"));
    t.comment(format!("initial distance = {}", runs.distances[0].1));
    let mut outcome = Outcome::default();
    let samples = &runs.distances[1..];
    match nearest {
        None => {
            t.comment("capacity has no jump: h = 0");
            for &(s, d) in samples {
                t.push(vec![s.into(), d.into(), 0.0.into(), 0.0.into()]);
            }
            outcome.summary.push("capacity has no jump, bounds are zero".into());
        }
        Some((i, &jump)) => {
            let h = levels
                .windows(2)
                .map(|w| w[0] - w[1])
                .fold(0.0, f64::max);
            let setup = TwoSolverSetup {
                rho_l: jump,
                rho_r,
                p_hi: levels[i],
                p_lo: levels[i + 1],
            };
            let rate = calibrate_rate(h, samples)?;
            t.comment(format!("h = {h}"));
            t.comment(format!("N = {rate}"));
            outcome.summary.push(format!("h = {}, calibrated N = {}", fmt(h), fmt(rate)));
            for &(s, d) in samples {
                let lin = linear_bound(&scheme.flux, setup, s)?.total;
                let e = exponential_bound(BoundParams::new(h, rate, s)?);
                t.push(vec![s.into(), d.into(), lin.into(), e.into()]);
                outcome.summary.push(format!("t = {}: distance {}", fmt(s), fmt(d)));
            }
        }
    }
    outcome.write(out, "compare.csv", &t)?;
    Ok(outcome)
}

fn sweep(config: &RunConfig, out: &Path) -> Result<Outcome> {
    if config.exogenous_q.kind != ExogenousKind::None {
        return Err(Error::config("sweep needs exogenous_q.kind = \"none\""));
    }
    let c = &config.constraint;
    if c.jumps.len() != 1 {
        return Err(Error::config(format!(
            "sweep needs a capacity with exactly one jump, found {}",
            c.jumps.len()
        )));
    }
    let flux = config.flux()?;
    let g = &config.grid;
    let base = CapacityDrop {
        flux,
        weight: config.weight()?,
        p_hi: c.levels[0],
        p_lo: c.levels[1],
        jump: c.jumps[0],
        rho_l_above: config.sweep.rho_l_above,
        rho_l_below: config.sweep.rho_l_below,
        rho_r: config.init.rho_r,
        x_min: g.x_min,
        x_max: g.x_max,
        dx: g.dx,
        dt: g.dt,
        t_end: g.t_end,
        branch: config.scheme.branch,
    };
    let report = capacity_sweep(&base, &config.sweep.p2, config.sweep.n_outputs, config.sweep.jobs)?;
    let mut t = table(
        config,
        "distance at t_end against the capacity gap",
        &["p2", "gap", "l1_distance", "bound_linear", "bound_exponential"],
    );
    let mut outcome = Outcome::default();
    for p in &report.points {
        t.comment(format!("N(p2 = {}) = {}", p.p2, p.rate));
        t.push(vec![
            p.p2.into(),
            p.gap.into(),
            p.l1_distance.into(),
            p.bound_linear.into(),
            p.bound_exponential.into(),
        ]);
        outcome.summary.push(format!(
            "p2 = {}: distance {}, calibrated N {}",
            fmt(p.p2),
            fmt(p.l1_distance),
            fmt(p.rate)
        ));
    }
    outcome.write(out, "sweep.csv", &t)?;
    let mut fit = table(config, "log-log fit of distance against gap", &["slope", "intercept", "residual"]);
    fit.push(vec![
        report.fit.slope.into(),
        report.fit.intercept.into(),
        report.fit.residual.into(),
    ]);
    outcome.write(out, "sweep_fit.csv", &fit)?;
    outcome.summary.push(format!("fitted slope {}", fmt(report.fit.slope)));
    Ok(outcome)
}
