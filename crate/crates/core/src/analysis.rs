//! Distances between solutions and the two stability estimates.

use serde::Serialize;

use crate::classical::{SelfSimilarSolution, WaveKind};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::fvm::Grid;
use crate::quadrature::integrate32;

/// Sub-samples per cell when an exact profile is compared with cell averages.
pub const CELL_SUBDIVISION: usize = 16;

/// `∫_{x_lo}^{x_hi} |a(t, x) - b(t, x)| dx` for two self-similar profiles.
///
/// Both fans are split at their breakpoints and at the crossing points of
/// the two profiles; constant slabs are integrated exactly and slabs inside
/// rarefactions with a 32-point Gauss rule.
pub fn l1_distance_exact(
    flux: &FluxModel,
    a: &SelfSimilarSolution,
    b: &SelfSimilarSolution,
    t: f64,
    x_lo: f64,
    x_hi: f64,
) -> Result<f64> {
    if !(t > 0.0) || !(x_lo < x_hi) {
        return Err(Error::InvalidArgument(format!(
            "need t > 0 and x_lo < x_hi, got t = {t}, [{x_lo}, {x_hi}]"
        )));
    }
    let (lo, hi) = (x_lo / t, x_hi / t);
    let mut cuts: Vec<f64> = a
        .breakpoints()
        .into_iter()
        .chain(b.breakpoints())
        .filter(|&s| s > lo && s < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
    cuts.dedup();
    let smooth = |s: &SelfSimilarSolution, u: f64, v: f64| {
        s.waves()
            .iter()
            .any(|w| w.kind == WaveKind::Rarefaction && w.speed_lo < v && w.speed_hi > u)
    };
    let mut total = 0.0;
    for win in cuts.windows(2) {
        let (u, v) = (win[0], win[1]);
        let mid = 0.5 * (u + v);
        if !smooth(a, u, v) && !smooth(b, u, v) {
            total += (a.evaluate(flux, mid) - b.evaluate(flux, mid)).abs() * (v - u);
            continue;
        }
        // on a slab each profile is constant or a decreasing fan, so the
        // difference changes sign at most once
        let diff = |s: f64| a.evaluate(flux, s) - b.evaluate(flux, s);
        let (du, dv) = (diff(u + 1e-14 * (v - u)), diff(v - 1e-14 * (v - u)));
        let mut pieces = vec![(u, v)];
        if du * dv < 0.0 {
            let (mut l, mut r) = (u, v);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if diff(m) * du > 0.0 {
                    l = m;
                } else {
                    r = m;
                }
                if r - l <= 1e-15 * (1.0 + m.abs()) {
                    break;
                }
            }
            let c = 0.5 * (l + r);
            pieces = vec![(u, c), (c, v)];
        }
        for (p, q) in pieces {
            total += integrate32(diff, p, q).abs();
        }
    }
    Ok(total * t)
}

/// Midpoint-rule cross-check of [`l1_distance_exact`] with `n` samples.
pub fn l1_distance_sampled(
    a: impl Fn(f64) -> f64,
    b: impl Fn(f64) -> f64,
    x_lo: f64,
    x_hi: f64,
    n: usize,
) -> f64 {
    let h = (x_hi - x_lo) / n as f64;
    (0..n)
        .map(|i| {
            let x = x_lo + (i as f64 + 0.5) * h;
            (a(x) - b(x)).abs()
        })
        .sum::<f64>()
        * h
}

/// Cell averages on a uniform grid.
#[derive(Debug, Clone, Copy)]
pub struct CellProfile<'a> {
    pub x_min: f64,
    pub dx: f64,
    pub values: &'a [f64],
}

impl<'a> CellProfile<'a> {
    pub fn new(grid: &Grid, values: &'a [f64]) -> Self {
        CellProfile {
            x_min: grid.x_min,
            dx: grid.dx,
            values,
        }
    }

    fn x_max(&self) -> f64 {
        self.x_min + self.values.len() as f64 * self.dx
    }

    fn face(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }
}

/// L1 distance between two piecewise-constant profiles over the overlap
/// of their supports. Grids may differ; faces are merged exactly.
pub fn l1_distance_cells(a: CellProfile<'_>, b: CellProfile<'_>) -> f64 {
    if a.values.len() == b.values.len() && a.x_min == b.x_min && a.dx == b.dx {
        return a.dx
            * a.values
                .iter()
                .zip(b.values)
                .map(|(u, v)| (u - v).abs())
                .sum::<f64>();
    }
    let lo = a.x_min.max(b.x_min);
    let hi = a.x_max().min(b.x_max());
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.values.len() && a.face(i + 1) <= lo {
        i += 1;
    }
    while j < b.values.len() && b.face(j + 1) <= lo {
        j += 1;
    }
    let mut x = lo;
    let mut total = 0.0;
    while x < hi && i < a.values.len() && j < b.values.len() {
        let next = a.face(i + 1).min(b.face(j + 1)).min(hi);
        total += (a.values[i] - b.values[j]).abs() * (next - x);
        if a.face(i + 1) <= next {
            i += 1;
        }
        if b.face(j + 1) <= next {
            j += 1;
        }
        x = next;
    }
    total
}

/// `∫ |cells - exact(t, .)|` with the exact profile sampled at
/// [`CELL_SUBDIVISION`] points per cell.
pub fn l1_error_vs_exact(
    grid: &Grid,
    cells: &[f64],
    flux: &FluxModel,
    exact: &SelfSimilarSolution,
    t: f64,
) -> f64 {
    l1_error_where(grid, cells, flux, exact, t, |_| true)
}

/// As [`l1_error_vs_exact`], but only over cells lying farther than
/// `margin` from every kink or jump of the exact profile at time `t`.
pub fn l1_error_away_from_waves(
    grid: &Grid,
    cells: &[f64],
    flux: &FluxModel,
    exact: &SelfSimilarSolution,
    t: f64,
    margin: f64,
) -> f64 {
    let edges: Vec<f64> = exact.breakpoints().iter().map(|s| s * t).collect();
    l1_error_where(grid, cells, flux, exact, t, |(lo, hi)| {
        edges.iter().all(|&e| e < lo - margin || e > hi + margin)
    })
}

fn l1_error_where(
    grid: &Grid,
    cells: &[f64],
    flux: &FluxModel,
    exact: &SelfSimilarSolution,
    t: f64,
    keep: impl Fn((f64, f64)) -> bool,
) -> f64 {
    let h = grid.dx / CELL_SUBDIVISION as f64;
    cells
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x0 = grid.x_min + i as f64 * grid.dx;
            if !keep((x0, x0 + grid.dx)) {
                return 0.0;
            }
            (0..CELL_SUBDIVISION)
                .map(|k| (v - exact.at(flux, t, x0 + (k as f64 + 0.5) * h)).abs())
                .sum::<f64>()
                * h
        })
        .sum()
}

/// Parameters of the exponential stability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    /// Largest jump of the capacity function.
    pub h: f64,
    /// Rate constant.
    pub n: f64,
    pub t: f64,
}

impl BoundParams {
    pub fn new(h: f64, n: f64, t: f64) -> Result<Self> {
        if !(h >= 0.0 && n > 0.0 && t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bound needs h >= 0, N > 0, t >= 0; got h = {h}, N = {n}, t = {t}"
            )));
        }
        Ok(BoundParams { h, n, t })
    }
}

/// `h / (2N) * (exp(2Nt) - 1)`.
pub fn exponential_bound(params: BoundParams) -> f64 {
    let BoundParams { h, n, t } = params;
    h / (2.0 * n) * (2.0 * n * t).exp_m1()
}

/// Smallest rate `N` for which [`exponential_bound`] dominates every
/// measured `(t, distance)` pair with `t > 0`.
pub fn calibrate_rate(h: f64, samples: &[(f64, f64)]) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("calibration needs h > 0, got {h}")));
    }
    let pts: Vec<(f64, f64)> = samples.iter().copied().filter(|&(t, _)| t > 0.0).collect();
    if pts.is_empty() {
        return Err(Error::InvalidArgument("calibration needs a sample with t > 0".into()));
    }
    let holds = |n: f64| {
        pts.iter()
            .all(|&(t, d)| exponential_bound(BoundParams { h, n, t }) >= d)
    };
    let mut lo = 1e-9;
    if holds(lo) {
        return Ok(lo);
    }
    let mut hi = 1.0;
    while !holds(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical {
                step: 0,
                message: "no rate constant below 1e6 bounds the measured distances".into(),
            });
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Datum and capacity levels for comparing the two extreme solvers on a
/// capacity drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSolverSetup {
    pub rho_l: f64,
    pub rho_r: f64,
    /// Upper level `p(rho_l-)`.
    pub p_hi: f64,
    /// Lower level `p(rho_l+)`.
    pub p_lo: f64,
}

/// Wave-geometry estimate of the distance between the two extreme solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearBound {
    /// `2 t (p_hi - p_lo)`
    pub leading: f64,
    /// Remaining part of the four area terms, kept explicit.
    pub correction: f64,
    pub total: f64,
    /// The four area terms before taking absolute values.
    pub terms: [f64; 4],
}

/// Sums the areas of the four regions where the two solutions can differ:
/// the left shock against the fan, the two congested states, the two free
/// states, and the two right shocks. Each area is counted with its absolute
/// value, so `total` bounds the L1 distance from above.
pub fn linear_bound(flux: &FluxModel, setup: TwoSolverSetup, t: f64) -> Result<LinearBound> {
    let TwoSolverSetup { rho_l, rho_r, p_hi, p_lo } = setup;
    if p_hi < p_lo {
        return Err(Error::InvalidArgument(format!("need p_hi >= p_lo, got {p_hi} < {p_lo}")));
    }
    let hat_hi = flux.rho_hat(p_hi)?;
    let hat_lo = flux.rho_hat(p_lo)?;
    let check_hi = flux.rho_check(p_hi)?;
    let check_lo = flux.rho_check(p_lo)?;
    let slope_l = flux.char_speed(rho_l);
    let speed = |a: f64, b: f64| {
        if a == b {
            Ok(flux.char_speed(a))
        } else {
            flux.shock_speed(a, b)
        }
    };
    let lambda = speed(rho_l, hat_lo)?;
    let mu_q = speed(check_hi, rho_r)?;
    let mu_p = speed(check_lo, rho_r)?;
    let terms = [
        (lambda - slope_l) * (hat_lo - rho_l) * t,
        slope_l * (hat_lo - hat_hi) * t,
        (check_hi - check_lo) * mu_q * t,
        (rho_r - check_lo) * (mu_q - mu_p) * t,
    ];
    let total: f64 = terms.iter().map(|v| v.abs()).sum();
    let leading = 2.0 * t * (p_hi - p_lo);
    Ok(LinearBound {
        leading,
        correction: total - leading,
        total,
        terms,
    })
}

/// Least-squares fit of `log(distance)` against `log(gap)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

pub fn loglog_slope(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(&(g, d)) = points.iter().find(|&&(g, d)| !(g > 0.0 && d > 0.0)) {
        let bad = if g > 0.0 { d } else { g };
        return Err(Error::InvalidArgument(format!("log-log fit needs positive samples, got {bad}")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct gaps".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(PowerFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::solve_classical;
    use crate::constrained::ConstrainedProblem;
    use crate::constraint::{PiecewiseConstraint, WeightKernel};
    use approx::assert_abs_diff_eq;

    fn drop_problem() -> ConstrainedProblem {
        let f = FluxModel::quadratic();
        let p = PiecewiseConstraint::new(vec![0.8], vec![0.1875, 0.05], &f).unwrap();
        ConstrainedProblem::new(f, p, WeightKernel::affine(1.0).unwrap())
    }

    const SETUP: TwoSolverSetup = TwoSolverSetup {
        rho_l: 0.8,
        rho_r: 0.5,
        p_hi: 0.1875,
        p_lo: 0.05,
    };

    #[test]
    fn constants_and_shift() {
        let f = FluxModel::quadratic();
        let a = SelfSimilarSolution::constant(0.6);
        let b = SelfSimilarSolution::constant(0.5);
        assert_abs_diff_eq!(l1_distance_exact(&f, &a, &b, 1.0, 0.0, 1.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(l1_distance_exact(&f, &a, &a, 1.0, -1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn crossing_fans() {
        // rarefaction against a constant crossing it mid-fan
        let f = FluxModel::quadratic();
        let a = solve_classical(&f, 0.9, 0.1).unwrap();
        let b = SelfSimilarSolution::constant(0.5);
        // |s|/2 inside the fan, 0.4 outside it, scaled by t = 2
        let exact = l1_distance_exact(&f, &a, &b, 2.0, -2.0, 2.0).unwrap();
        let sampled = l1_distance_sampled(|x| a.at(&f, 2.0, x), |x| b.at(&f, 2.0, x), -2.0, 2.0, 100_000);
        assert_abs_diff_eq!(exact, 2.0 * (0.32 + 0.16), epsilon = 1e-13);
        assert_abs_diff_eq!(exact, sampled, epsilon = 1e-6);
    }

    #[test]
    fn extreme_solvers_distance_is_mass_gap() {
        let pb = drop_problem();
        let q = pb.solve_q(0.8, 0.5).unwrap().solution;
        let p = pb.solve_p(0.8, 0.5).unwrap().solution;
        for t in [0.1, 0.5, 1.0] {
            let d = l1_distance_exact(&pb.flux, &p, &q, t, -5.0, 5.0).unwrap();
            assert_abs_diff_eq!(d / t, 0.275, epsilon = 1e-12);
            let bound = linear_bound(&pb.flux, SETUP, t).unwrap();
            assert!(d <= bound.total);
        }
    }

    #[test]
    fn linear_bound_parts() {
        let f = FluxModel::quadratic();
        let b = linear_bound(&f, SETUP, 1.0).unwrap();
        assert_abs_diff_eq!(b.leading, 0.275, epsilon = 1e-15);
        assert_abs_diff_eq!(b.terms.iter().sum::<f64>(), -0.178893202250021, epsilon = 1e-12);
        assert_abs_diff_eq!(b.total, 0.2775, epsilon = 1e-12);
        let b2 = linear_bound(&f, SETUP, 2.0).unwrap();
        assert_abs_diff_eq!(b2.total, 2.0 * b.total, epsilon = 1e-15);
        let flat = linear_bound(&f, TwoSolverSetup { p_lo: 0.1875, ..SETUP }, 1.0).unwrap();
        assert_eq!(flat.leading, 0.0);
        assert!(flat.correction >= 0.0);
    }

    #[test]
    fn exponential_bound_values() {
        let b = |h, n, t| exponential_bound(BoundParams::new(h, n, t).unwrap());
        assert_eq!(b(0.1375, 1.0, 0.0), 0.0);
        assert_eq!(b(0.0, 3.0, 2.0), 0.0);
        assert_abs_diff_eq!(b(0.1375, 1.0, 1.0), 0.1375 / 2.0 * (2f64.exp() - 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(b(0.1375, 1.0, 1.0), 0.4393, epsilon = 1e-4);
        assert!(BoundParams::new(0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn calibration_is_tight() {
        let h = 0.1;
        let target = 1.7;
        let samples: Vec<(f64, f64)> = [0.0, 0.25, 0.5, 1.0]
            .iter()
            .map(|&t| (t, exponential_bound(BoundParams { h, n: target, t })))
            .collect();
        let n = calibrate_rate(h, &samples).unwrap();
        assert_abs_diff_eq!(n, target, epsilon = 1e-9);
        assert!(calibrate_rate(h, &[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn power_law_fit() {
        let pts: Vec<(f64, f64)> = [0.01f64, 0.05, 0.1, 0.4].iter().map(|&g| (g, 3.0 * g.powf(0.9))).collect();
        let fit = loglog_slope(&pts).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-12);
        assert!(fit.residual < 1e-12);
        let two = loglog_slope(&[(1.0, 1.0), (2.0, 8.0)]).unwrap();
        assert_abs_diff_eq!(two.slope, 3.0, epsilon = 1e-12);
        assert!(matches!(loglog_slope(&[(1.0, 0.0), (2.0, 1.0)]), Err(Error::InvalidArgument(_))));
        assert!(loglog_slope(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn cell_distances_on_mismatched_grids() {
        let a = CellProfile { x_min: 0.0, dx: 0.5, values: &[1.0, 0.0] };
        let b = CellProfile { x_min: 0.0, dx: 0.25, values: &[1.0, 1.0, 1.0, 0.0] };
        assert_abs_diff_eq!(l1_distance_cells(a, b), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(l1_distance_cells(b, a), 0.25, epsilon = 1e-15);
        assert_eq!(l1_distance_cells(a, a), 0.0);
        let c = CellProfile { x_min: 0.0, dx: 1.0, values: &[0.6] };
        let d = CellProfile { x_min: 0.0, dx: 1.0, values: &[0.5] };
        assert_abs_diff_eq!(l1_distance_cells(c, d), 0.1, epsilon = 1e-15);
    }
}
