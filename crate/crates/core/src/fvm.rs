//! Godunov scheme with a flux cap at the face `x = 0`.
//!
//! The cap is either the non-local one, `q_n = p(xi_n)` with `xi_n` the
//! weighted average of the cell values at the previous step, or an exogenous
//! schedule `q(t)`.

use serde::Serialize;

use crate::constraint::{Branch, PiecewiseConstraint, WeightKernel};
use crate::error::{Error, Result};
use crate::flux::FluxModel;

/// Largest admissible Courant number `dt * max|f'| / dx`.
pub const CFL_LIMIT: f64 = 0.5;
/// Snapping tolerance for `xi` against the jumps of `p`.
pub const XI_SNAP_TOL: f64 = 1e-10;
/// Relative slack when checking that grid positions land on faces.
const FACE_TOL: f64 = 1e-9;
/// Cell values may overshoot `[0, R]` by this much through rounding.
const RANGE_SLACK: f64 = 1e-12;

/// Exact-Riemann numerical flux.
pub fn godunov_flux(flux: &FluxModel, rho_l: f64, rho_r: f64) -> f64 {
    if rho_l <= rho_r {
        flux.flow(rho_l).min(flux.flow(rho_r))
    } else if rho_r <= flux.critical_density() && flux.critical_density() <= rho_l {
        flux.max_flow()
    } else {
        flux.flow(rho_l).max(flux.flow(rho_r))
    }
}

/// Godunov flux capped at `q`.
pub fn constrained_flux(flux: &FluxModel, rho_l: f64, rho_r: f64, q: f64) -> f64 {
    godunov_flux(flux, rho_l, rho_r).min(q)
}

/// Uniform grid on `[x_min, x_max]` with `x = 0` on a face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub n_cells: usize,
    /// Index of the face at `x = 0`; cell `i` lies between faces `i` and `i + 1`.
    pub interface: usize,
}

fn snap_ratio(value: f64, quantity: &str) -> Result<usize> {
    let n = value.round();
    if n < 0.0 || (value - n).abs() > FACE_TOL * value.abs().max(1.0) {
        return Err(Error::InvalidGrid(format!("{quantity} = {value} is not a whole number of cells")));
    }
    Ok(n as usize)
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, dx: f64, dt: f64, flux: &FluxModel) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < 0.0 && x_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain [{x_min}, {x_max}] must contain x = 0 in its interior"
            )));
        }
        if !(dx > 0.0 && dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dx = {dx} and dt = {dt} must be positive")));
        }
        let n_cells = snap_ratio((x_max - x_min) / dx, "domain length / dx")?;
        let interface = snap_ratio(-x_min / dx, "-x_min / dx")?;
        let grid = Grid {
            x_min,
            x_max,
            dx,
            dt,
            n_cells,
            interface,
        };
        let cfl = grid.courant_number(flux);
        if cfl > CFL_LIMIT + 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "CFL number dt*max|f'|/dx = {cfl} exceeds {CFL_LIMIT}"
            )));
        }
        Ok(grid)
    }

    pub fn courant_number(&self, flux: &FluxModel) -> f64 {
        self.dt * flux.max_char_speed() / self.dx
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn face(&self, j: usize) -> f64 {
        if j == self.interface {
            0.0
        } else {
            self.x_min + j as f64 * self.dx
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.cell_center(i)).collect()
    }

    /// Cell averages of the Riemann datum; exact since `x = 0` is a face.
    pub fn riemann_cells(&self, rho_l: f64, rho_r: f64) -> Vec<f64> {
        (0..self.n_cells)
            .map(|i| if i < self.interface { rho_l } else { rho_r })
            .collect()
    }

    /// Midpoint values of a profile.
    pub fn sample(&self, profile: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_cells).map(|i| profile(self.cell_center(i))).collect()
    }

    pub fn mass(&self, cells: &[f64]) -> f64 {
        self.dx * cells.iter().sum::<f64>()
    }
}

/// Prescribed exit capacity `q(t)`, piecewise constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExogenousCapacity {
    /// `level` on `[k*period, k*period + green)`, zero otherwise.
    TrafficLight { level: f64, green: f64, period: f64 },
    /// `levels[i]` on `[times[i], times[i+1])`; `times[0]` must be `0`.
    Table { times: Vec<f64>, levels: Vec<f64> },
}

impl ExogenousCapacity {
    pub fn traffic_light(level: f64, green: f64, period: f64) -> Result<Self> {
        if !(level >= 0.0 && green > 0.0 && period > green) {
            return Err(Error::InvalidConstraint(format!(
                "traffic light needs level >= 0 and 0 < green < period, got ({level}, {green}, {period})"
            )));
        }
        Ok(ExogenousCapacity::TrafficLight { level, green, period })
    }

    pub fn table(times: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != levels.len() {
            return Err(Error::InvalidConstraint(format!(
                "capacity table needs matching non-empty columns, got {} times and {} levels",
                times.len(),
                levels.len()
            )));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConstraint(
                "capacity table times must start at 0 and increase".into(),
            ));
        }
        if levels.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::InvalidConstraint("capacity levels must be nonnegative".into()));
        }
        Ok(ExogenousCapacity::Table { times, levels })
    }

    /// Right-continuous value at `t`.
    pub fn at(&self, t: f64) -> f64 {
        match self {
            ExogenousCapacity::TrafficLight { level, green, period } => {
                let phase = t - (t / period).floor() * period;
                if phase < *green {
                    *level
                } else {
                    0.0
                }
            }
            ExogenousCapacity::Table { times, levels } => {
                let i = times.partition_point(|&s| s <= t);
                levels[i.saturating_sub(1)]
            }
        }
    }

    /// First switching time strictly after `t`.
    pub fn next_switch(&self, t: f64) -> Option<f64> {
        match self {
            ExogenousCapacity::TrafficLight { green, period, .. } => {
                let base = (t / period).floor() * period;
                [base + green, base + period, base + period + green]
                    .into_iter()
                    .find(|&s| s > t + FACE_TOL * period)
            }
            ExogenousCapacity::Table { times, .. } => {
                times.iter().copied().find(|&s| s > t + FACE_TOL)
            }
        }
    }
}

/// Where the cap at `x = 0` comes from.
#[derive(Debug, Clone)]
pub enum Capacity {
    NonLocal { p: PiecewiseConstraint, branch: Branch },
    Exogenous(ExogenousCapacity),
}

/// Density profile and constraint state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridState {
    pub t: f64,
    pub cells: Vec<f64>,
    /// Cap in force during the step that produced this state.
    pub q_current: f64,
    pub xi_current: f64,
}

/// Bookkeeping of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub xi: f64,
    pub q: f64,
    pub exit_flux: f64,
    pub left_boundary_flux: f64,
    pub right_boundary_flux: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    /// Initial state followed by one snapshot per output time.
    pub snapshots: Vec<GridState>,
    pub steps: Vec<StepRecord>,
    /// Cell values at the start of every step, kept when requested.
    pub history: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn initial(&self) -> &GridState {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &GridState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// Snapshot whose time is within `1e-9` of `t`.
    pub fn snapshot_at(&self, t: f64) -> Option<&GridState> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// `|m(T) - m(0) + sum dt (F_right - F_left)|` for the last snapshot.
    pub fn mass_defect(&self) -> f64 {
        let g = &self.grid;
        let outflow: f64 = self
            .steps
            .iter()
            .map(|s| s.dt * (s.right_boundary_flux - s.left_boundary_flux))
            .sum();
        (g.mass(&self.last().cells) - g.mass(&self.initial().cells) + outflow).abs()
    }

    /// Largest `exit_flux - q` over all steps; nonpositive when the cap held.
    pub fn max_cap_excess(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.exit_flux - s.q)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean exit flux over steps starting at or after `t0`.
    pub fn mean_exit_flux_after(&self, t0: f64) -> f64 {
        let (num, den) = self
            .steps
            .iter()
            .filter(|s| s.t >= t0)
            .fold((0.0, 0.0), |(n, d), s| (n + s.exit_flux * s.dt, d + s.dt));
        num / den
    }
}

/// Everything that defines one run except the initial data.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub flux: FluxModel,
    pub grid: Grid,
    /// Used for `xi` in both modes; it drives `q` only in the non-local one.
    pub weight: WeightKernel,
    pub capacity: Capacity,
}

impl Scheme {
    pub fn new(flux: FluxModel, grid: Grid, weight: WeightKernel, capacity: Capacity) -> Result<Self> {
        if grid.x_min > -weight.support() + FACE_TOL {
            return Err(Error::InvalidGrid(format!(
                "domain starts at {} but the weight reaches back to {}",
                grid.x_min,
                -weight.support()
            )));
        }
        Ok(Scheme {
            flux,
            grid,
            weight,
            capacity,
        })
    }

    pub fn weighted_average(&self, cells: &[f64]) -> f64 {
        self.weight
            .weighted_average_cells(self.grid.x_min, self.grid.dx, cells)
    }

    fn cap(&self, t: f64, xi: f64) -> f64 {
        match &self.capacity {
            Capacity::NonLocal { p, branch } => p.level(xi, *branch, XI_SNAP_TOL),
            Capacity::Exogenous(q) => q.at(t),
        }
    }

    /// One conservative update of length `dt <= grid.dt` from `cells` into `out`.
    fn advance(
        &self,
        t: f64,
        dt: f64,
        cells: &[f64],
        faces: &mut [f64],
        out: &mut [f64],
        step: usize,
    ) -> Result<StepRecord> {
        let flux = &self.flux;
        let g = &self.grid;
        let n = g.n_cells;
        let xi = self.weighted_average(cells);
        let q = self.cap(t, xi);
        faces[0] = flux.flow(cells[0]);
        faces[n] = flux.flow(cells[n - 1]);
        for j in 1..n {
            faces[j] = godunov_flux(flux, cells[j - 1], cells[j]);
        }
        let j0 = g.interface;
        faces[j0] = faces[j0].min(q);
        let ratio = dt / g.dx;
        let r = flux.max_density();
        for i in 0..n {
            let v = cells[i] - ratio * (faces[i + 1] - faces[i]);
            if !v.is_finite() || v < -RANGE_SLACK || v > r + RANGE_SLACK {
                return Err(Error::Numerical {
                    step,
                    message: format!("cell {i} left [0, {r}] with value {v} at t = {}", t + dt),
                });
            }
            out[i] = v.clamp(0.0, r);
        }
        Ok(StepRecord {
            t,
            dt,
            xi,
            q,
            exit_flux: faces[j0],
            left_boundary_flux: faces[0],
            right_boundary_flux: faces[n],
        })
    }

    /// Runs from `t = 0` through every time in `output_times` (sorted, positive).
    pub fn run(&self, initial: Vec<f64>, output_times: &[f64], keep_history: bool) -> Result<Trajectory> {
        let g = self.grid;
        if initial.len() != g.n_cells {
            return Err(Error::InvalidArgument(format!(
                "initial data has {} cells, grid has {}",
                initial.len(),
                g.n_cells
            )));
        }
        let r = self.flux.max_density();
        if let Some(i) = initial.iter().position(|v| !(0.0..=r).contains(v)) {
            return Err(Error::domain("initial density", initial[i], 0.0, r));
        }
        if output_times.iter().any(|&t| !(t > 0.0 && t.is_finite()))
            || output_times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidArgument(
                "output times must be positive and increasing".into(),
            ));
        }
        let xi0 = self.weighted_average(&initial);
        let mut snapshots = vec![GridState {
            t: 0.0,
            q_current: self.cap(0.0, xi0),
            xi_current: xi0,
            cells: initial.clone(),
        }];
        let mut steps = Vec::new();
        let mut history = keep_history.then(Vec::new);
        let mut cells = initial;
        let mut next = vec![0.0; g.n_cells];
        let mut faces = vec![0.0; g.n_cells + 1];
        let mut t = 0.0;
        for &target in output_times {
            while t < target {
                let mut stop = target;
                if let Capacity::Exogenous(q) = &self.capacity {
                    if let Some(s) = q.next_switch(t) {
                        stop = stop.min(s);
                    }
                }
                let remaining = stop - t;
                // land exactly on output and switching times
                let (dt, t_new) = if remaining <= g.dt * (1.0 + FACE_TOL) {
                    (remaining, stop)
                } else {
                    (g.dt, t + g.dt)
                };
                if let Some(h) = history.as_mut() {
                    h.push(cells.clone());
                }
                let rec = self.advance(t, dt, &cells, &mut faces, &mut next, steps.len())?;
                debug_assert!(rec.exit_flux <= rec.q);
                steps.push(rec);
                std::mem::swap(&mut cells, &mut next);
                t = t_new;
            }
            let xi = self.weighted_average(&cells);
            snapshots.push(GridState {
                t: target,
                cells: cells.clone(),
                q_current: steps.last().map_or(snapshots[0].q_current, |s| s.q),
                xi_current: xi,
            });
        }
        if let Some(h) = history.as_mut() {
            h.push(cells);
        }
        Ok(Trajectory {
            grid: g,
            snapshots,
            steps,
            history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn drop_scheme(dx: f64, branch: Branch) -> Scheme {
        let f = FluxModel::quadratic();
        let grid = Grid::new(-5.0, 5.0, dx, dx / 10.0, &f).unwrap();
        let p = PiecewiseConstraint::new(vec![0.8], vec![0.1875, 0.05], &f).unwrap();
        Scheme::new(f, grid, WeightKernel::affine(1.0).unwrap(), Capacity::NonLocal { p, branch }).unwrap()
    }

    #[test]
    fn godunov_examples() {
        let f = FluxModel::quadratic();
        assert_eq!(godunov_flux(&f, 0.8, 0.2), 0.25);
        assert_abs_diff_eq!(godunov_flux(&f, 0.2, 0.8), 0.16, epsilon = 1e-15);
        for c in [0.0, 0.3, 0.5, 0.9] {
            assert_eq!(godunov_flux(&f, c, c), f.flow(c));
        }
        assert_abs_diff_eq!(godunov_flux(&f, 0.9, 0.7), 0.21, epsilon = 1e-15);
        assert_eq!(constrained_flux(&f, 0.8, 0.2, 0.1875), 0.1875);
        assert_eq!(constrained_flux(&f, 0.8, 0.2, 0.25), 0.25);
        assert_abs_diff_eq!(constrained_flux(&f, 0.95, 0.95, 0.1875), 0.0475, epsilon = 1e-15);
    }

    #[test]
    fn grid_validation() {
        let f = FluxModel::quadratic();
        assert!(Grid::new(-5.0, 5.0, 0.025, 0.0125, &f).is_ok());
        assert!(Grid::new(-5.0, 5.0, 0.025, 0.013, &f).is_err());
        assert!(Grid::new(-5.01, 5.0, 0.02, 0.001, &f).is_err());
        assert!(Grid::new(1.0, 5.0, 0.02, 0.001, &f).is_err());
        let g = Grid::new(-5.0, 5.0, 0.025, 0.0025, &f).unwrap();
        assert_eq!((g.n_cells, g.interface), (400, 200));
        assert_eq!(g.face(g.interface), 0.0);
    }

    #[test]
    fn constant_state_is_steady() {
        let s = drop_scheme(0.05, Branch::Plus);
        // f(0.15) is below the cap
        let traj = s.run(s.grid.riemann_cells(0.15, 0.15), &[0.5], false).unwrap();
        for v in &traj.last().cells {
            assert_abs_diff_eq!(*v, 0.15, epsilon = 1e-15);
        }
        let zero = s.run(vec![0.0; s.grid.n_cells], &[0.5], false).unwrap();
        assert!(zero.last().cells.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn capacity_drop_runs_split() {
        let panic = drop_scheme(0.025, Branch::Plus);
        let a = panic.run(panic.grid.riemann_cells(0.8015, 0.5), &[1.0], false).unwrap();
        let b = panic.run(panic.grid.riemann_cells(0.7984, 0.5), &[1.0], false).unwrap();
        assert_abs_diff_eq!(a.mean_exit_flux_after(0.5), 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(b.mean_exit_flux_after(0.5), 0.1875, epsilon = 1e-12);
        // upstream of the stationary jump
        let i = panic.grid.interface - 1;
        assert_abs_diff_eq!(a.last().cells[i], 0.9472136, epsilon = 1e-6);
        assert_abs_diff_eq!(b.last().cells[i], 0.75, epsilon = 1e-3);
        assert!(a.mass_defect() < 1e-10 * a.steps.len() as f64);
        assert!(a.max_cap_excess() <= 0.0);
        assert_eq!(a.steps.len(), 400);
        assert_eq!(a.last().t, 1.0);
    }

    #[test]
    fn branch_selects_extreme_exit() {
        let quiet = drop_scheme(0.025, Branch::Minus);
        let panic = drop_scheme(0.025, Branch::Plus);
        let a = quiet.run(quiet.grid.riemann_cells(0.8, 0.5), &[1.0], false).unwrap();
        let b = panic.run(panic.grid.riemann_cells(0.8, 0.5), &[1.0], false).unwrap();
        assert_abs_diff_eq!(a.mean_exit_flux_after(0.0), 0.1875, epsilon = 1e-12);
        assert_abs_diff_eq!(b.mean_exit_flux_after(0.0), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn traffic_light_queue() {
        let f = FluxModel::quadratic();
        let grid = Grid::new(-5.0, 5.0, 0.02, 0.005, &f).unwrap();
        let light = ExogenousCapacity::traffic_light(0.25, 1.0, 2.0).unwrap();
        assert_eq!(light.at(0.5), 0.25);
        assert_eq!(light.at(1.0), 0.0);
        assert_eq!(light.at(2.0), 0.25);
        assert_eq!(light.next_switch(0.3), Some(1.0));
        assert_eq!(light.next_switch(1.0), Some(2.0));
        let s = Scheme::new(f, grid, WeightKernel::affine(1.0).unwrap(), Capacity::Exogenous(light)).unwrap();
        let traj = s.run(grid.riemann_cells(0.3, 0.3), &[1.0, 1.5], false).unwrap();
        assert!(traj.snapshot_at(1.0).unwrap().cells.iter().all(|&v| (v - 0.3).abs() < 1e-14));
        let red = &traj.snapshot_at(1.5).unwrap().cells;
        assert_abs_diff_eq!(red[grid.interface - 1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(red[grid.interface], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn capacity_table() {
        let q = ExogenousCapacity::table(vec![0.0, 0.5], vec![0.2, 0.1]).unwrap();
        assert_eq!(q.at(0.49), 0.2);
        assert_eq!(q.at(0.5), 0.1);
        assert_eq!(q.next_switch(0.0), Some(0.5));
        assert_eq!(q.next_switch(0.5), None);
        assert!(ExogenousCapacity::table(vec![0.1], vec![0.2]).is_err());
    }

    #[test]
    fn out_of_range_initial_data_rejected() {
        let s = drop_scheme(0.05, Branch::Plus);
        assert!(s.run(s.grid.riemann_cells(1.2, 0.5), &[0.1], false).is_err());
    }
}
