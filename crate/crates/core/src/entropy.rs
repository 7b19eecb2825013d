//! Discrete Kruzhkov inequalities for constrained trajectories.
//!
//! For `k` in a sample set and a tensor tent `phi(t, x) = T(t) X(x)` with
//! time support inside `(0, T_end)`, the functional
//!
//! ```text
//!   ∫∫ |rho - k| phi_t + sgn(rho - k)(f(rho) - f(k)) phi_x
//!     + 2 ∫ (1 - q(t)/f_max) f(k) phi(t, 0) dt
//! ```
//!
//! is evaluated exactly on the piecewise-constant space-time reconstruction
//! of a trajectory. Entropy solutions give nonnegative values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::fvm::Trajectory;

/// Hat function of unit height on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tent {
    pub lo: f64,
    pub hi: f64,
}

impl Tent {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "tent needs lo < hi");
        Tent { lo, hi }
    }

    pub fn centered(mid: f64, half_width: f64) -> Self {
        Tent::new(mid - half_width, mid + half_width)
    }

    pub fn value(&self, s: f64) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        let half = 0.5 * (self.hi - self.lo);
        (1.0 - (s - mid).abs() / half).max(0.0)
    }

    fn antiderivative(&self, s: f64) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        let half = 0.5 * (self.hi - self.lo);
        let s = s.clamp(self.lo, self.hi);
        if s <= mid {
            let u = s - self.lo;
            0.5 * u * u / half
        } else {
            let u = self.hi - s;
            half - 0.5 * u * u / half
        }
    }

    /// `∫_a^b` of the tent.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }
}

/// Test functions and Kruzhkov constants to try.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyProbe {
    pub k_samples: Vec<f64>,
    pub time_tents: Vec<Tent>,
    pub space_tents: Vec<Tent>,
}

impl EntropyProbe {
    /// `n_k` constants spread over `(0, R)`, time tents covering `(0, t_end)`
    /// and space tents of half-width `half_width` centred on a uniform set
    /// of points in `[x_lo, x_hi]` that includes `x = 0`.
    pub fn regular(flux: &FluxModel, n_k: usize, t_end: f64, n_t: usize, x_lo: f64, x_hi: f64, half_width: f64) -> Self {
        let r = flux.max_density();
        let k_samples = (1..=n_k).map(|i| r * i as f64 / (n_k + 1) as f64).collect();
        let time_tents = (0..n_t)
            .map(|i| {
                let w = t_end / n_t as f64;
                let lo = i as f64 * w;
                Tent::new(lo + 0.05 * w, lo + w - 0.05 * w)
            })
            .chain(std::iter::once(Tent::new(0.05 * t_end, 0.95 * t_end)))
            .collect();
        let mut centres = vec![0.0];
        let step = half_width;
        let mut c = step;
        while c <= x_hi {
            centres.push(c);
            c += step;
        }
        let mut c = -step;
        while c >= x_lo {
            centres.push(c);
            c -= step;
        }
        let space_tents = centres.into_iter().map(|m| Tent::centered(m, half_width)).collect();
        EntropyProbe {
            k_samples,
            time_tents,
            space_tents,
        }
    }
}

/// Smallest value of the functional over the probe, and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    pub min_residual: f64,
    pub k: f64,
    pub time_tent: Tent,
    pub space_tent: Tent,
}

/// Evaluates the constrained Kruzhkov functional on a trajectory recorded
/// with history. `with_boundary_term = false` drops the term at `x = 0`.
pub fn check_entropy(
    traj: &Trajectory,
    flux: &FluxModel,
    probe: &EntropyProbe,
    with_boundary_term: bool,
) -> Result<EntropyReport> {
    let history = traj
        .history
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("entropy check needs a trajectory with history".into()))?;
    if probe.k_samples.is_empty() || probe.time_tents.is_empty() || probe.space_tents.is_empty() {
        return Err(Error::InvalidArgument("entropy probe is empty".into()));
    }
    let g = &traj.grid;
    let fmax = flux.max_flow();
    let faces: Vec<f64> = (0..=g.n_cells).map(|j| g.face(j)).collect();
    let mut best: Option<EntropyReport> = None;
    for xt in &probe.space_tents {
        // cells touching the tent's support
        let lo = ((xt.lo - g.x_min) / g.dx).floor().max(0.0) as usize;
        let hi = (((xt.hi - g.x_min) / g.dx).ceil() as usize).min(g.n_cells);
        let cell_mass: Vec<f64> = (lo..hi).map(|i| xt.integral(faces[i], faces[i + 1])).collect();
        let face_gap: Vec<f64> = (lo..hi)
            .map(|i| xt.value(faces[i + 1]) - xt.value(faces[i]))
            .collect();
        let x_at_exit = xt.value(0.0);
        for tt in &probe.time_tents {
            for &k in &probe.k_samples {
                let fk = flux.flow(k);
                let mut total = 0.0;
                for (n, rec) in traj.steps.iter().enumerate() {
                    let (t0, t1) = (rec.t, rec.t + rec.dt);
                    if t1 <= tt.lo || t0 >= tt.hi {
                        continue;
                    }
                    let dtent = tt.value(t1) - tt.value(t0);
                    let itent = tt.integral(t0, t1);
                    let cells = &history[n];
                    for (m, i) in (lo..hi).enumerate() {
                        let rho = cells[i];
                        let eta = (rho - k).abs();
                        let q = (rho - k).signum() * (flux.flow(rho) - fk);
                        total += eta * dtent * cell_mass[m] + q * itent * face_gap[m];
                    }
                    if with_boundary_term && x_at_exit > 0.0 {
                        total += 2.0 * (1.0 - rec.q / fmax) * fk * x_at_exit * itent;
                    }
                }
                if best.is_none_or(|b| total < b.min_residual) {
                    best = Some(EntropyReport {
                        min_residual: total,
                        k,
                        time_tent: *tt,
                        space_tent: *xt,
                    });
                }
            }
        }
    }
    Ok(best.expect("probe is non-empty"))
}
