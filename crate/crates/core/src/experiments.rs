//! Capacity-drop experiments: paired runs on either side of the jump of `p`
//! and the sweep over the lower capacity level.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    calibrate_rate, exponential_bound, l1_distance_cells, linear_bound, loglog_slope, BoundParams,
    CellProfile, PowerFit, TwoSolverSetup,
};
use crate::constraint::{Branch, PiecewiseConstraint, WeightKernel};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::fvm::{Capacity, Grid, Scheme, Trajectory};

/// A two-level capacity, `p_hi` up to `jump` and `p_lo` above it, and two
/// left states straddling the jump.
#[derive(Debug, Clone)]
pub struct CapacityDrop {
    pub flux: FluxModel,
    pub weight: WeightKernel,
    pub p_hi: f64,
    pub p_lo: f64,
    pub jump: f64,
    pub rho_l_above: f64,
    pub rho_l_below: f64,
    pub rho_r: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub branch: Branch,
}

impl Default for CapacityDrop {
    fn default() -> Self {
        CapacityDrop {
            flux: FluxModel::quadratic(),
            weight: WeightKernel::affine(1.0).expect("positive support"),
            p_hi: 0.1875,
            p_lo: 0.05,
            jump: 0.8,
            rho_l_above: 0.8015,
            rho_l_below: 0.7984,
            rho_r: 0.5,
            x_min: -5.0,
            x_max: 5.0,
            dx: 0.025,
            dt: 0.0025,
            t_end: 1.0,
            branch: Branch::Plus,
        }
    }
}

/// Two runs from nearby data and their distance over time.
#[derive(Debug, Clone)]
pub struct PairedRuns {
    pub first: Trajectory,
    pub second: Trajectory,
    /// `(t, ||first(t) - second(t)||_1)` at every snapshot, `t = 0` included.
    pub distances: Vec<(f64, f64)>,
}

impl PairedRuns {
    pub fn final_distance(&self) -> f64 {
        self.distances.last().map_or(0.0, |d| d.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p2: f64,
    pub gap: f64,
    pub l1_distance: f64,
    pub bound_linear: f64,
    pub bound_exponential: f64,
    /// Smallest rate constant for which the exponential bound holds at every
    /// output time of this pair.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub fit: PowerFit,
}

impl CapacityDrop {
    pub fn scheme(&self) -> Result<Scheme> {
        let flux = self.flux.clone();
        let grid = Grid::new(self.x_min, self.x_max, self.dx, self.dt, &flux)?;
        let p = PiecewiseConstraint::new(vec![self.jump], vec![self.p_hi, self.p_lo], &flux)?;
        Scheme::new(
            flux,
            grid,
            self.weight.clone(),
            Capacity::NonLocal {
                p,
                branch: self.branch,
            },
        )
    }

    /// Evenly spaced output times `t_end / n, ..., t_end`.
    pub fn output_times(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|i| self.t_end * i as f64 / n as f64).collect()
    }

    /// Runs from `rho_l_above` (first) and `rho_l_below` (second).
    pub fn paired_runs(&self, n_outputs: usize, keep_history: bool) -> Result<PairedRuns> {
        let scheme = self.scheme()?;
        let g = scheme.grid;
        run_pair(
            &scheme,
            g.riemann_cells(self.rho_l_above, self.rho_r),
            g.riemann_cells(self.rho_l_below, self.rho_r),
            &self.output_times(n_outputs),
            keep_history,
        )
    }

    /// The two-solver configuration at the jump itself.
    pub fn two_solver_setup(&self) -> TwoSolverSetup {
        TwoSolverSetup {
            rho_l: self.jump,
            rho_r: self.rho_r,
            p_hi: self.p_hi,
            p_lo: self.p_lo,
        }
    }
}

/// Runs `scheme` from two initial profiles and records their distance at
/// every snapshot.
pub fn run_pair(
    scheme: &Scheme,
    first: Vec<f64>,
    second: Vec<f64>,
    output_times: &[f64],
    keep_history: bool,
) -> Result<PairedRuns> {
    let g = scheme.grid;
    let (first, second) = rayon::join(
        || scheme.run(first, output_times, keep_history),
        || scheme.run(second, output_times, keep_history),
    );
    let (first, second) = (first?, second?);
    let distances = first
        .snapshots
        .iter()
        .zip(&second.snapshots)
        .map(|(a, b)| {
            let d = l1_distance_cells(CellProfile::new(&g, &a.cells), CellProfile::new(&g, &b.cells));
            (a.t, d)
        })
        .collect();
    Ok(PairedRuns {
        first,
        second,
        distances,
    })
}

/// Runs the paired experiment for each lower level in `p_los` on a pool of
/// `jobs` threads (0 picks the default), then fits the distance at `t_end`
/// against `p_hi - p_lo`.
pub fn capacity_sweep(base: &CapacityDrop, p_los: &[f64], n_outputs: usize, jobs: usize) -> Result<SweepReport> {
    if p_los.len() < 2 {
        return Err(Error::InvalidArgument("sweep needs at least two lower levels".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<Result<(f64, PairedRuns)>> = pool.install(|| {
        p_los
            .par_iter()
            .map(|&p_lo| {
                let setup = CapacityDrop {
                    p_lo,
                    ..base.clone()
                };
                setup.paired_runs(n_outputs, false).map(|r| (p_lo, r))
            })
            .collect()
    });
    let runs: Vec<(f64, PairedRuns)> = runs.into_iter().collect::<Result<_>>()?;
    let points = runs
        .iter()
        .map(|(p_lo, r)| {
            let setup = CapacityDrop {
                p_lo: *p_lo,
                ..base.clone()
            };
            let gap = base.p_hi - p_lo;
            let rate = calibrate_rate(gap, &r.distances)?;
            Ok(SweepPoint {
                p2: *p_lo,
                gap,
                l1_distance: r.final_distance(),
                bound_linear: linear_bound(&base.flux, setup.two_solver_setup(), base.t_end)?.total,
                bound_exponential: exponential_bound(BoundParams::new(gap, rate, base.t_end)?),
                rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = loglog_slope(&points.iter().map(|p| (p.gap, p.l1_distance)).collect::<Vec<_>>())?;
    Ok(SweepReport { points, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_pair_separates() {
        let runs = CapacityDrop::default().paired_runs(4, false).unwrap();
        assert!((runs.distances[0].1 - 0.0155).abs() < 1e-12);
        assert!(runs.final_distance() > 0.1);
    }
}
