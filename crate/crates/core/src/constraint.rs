//! Piecewise-constant exit capacity `p` and the upstream averaging weight `w`.

use log::warn;

use crate::error::{Error, Result};
use crate::flux::FluxModel;

/// Unit-mass defect accepted without renormalisation.
pub const WEIGHT_MASS_TOL: f64 = 1e-10;
/// Largest unit-mass defect that is renormalised instead of rejected.
const WEIGHT_RENORMALISE_MAX: f64 = 1e-6;
/// Minimal gap between consecutive constraint levels.
const MIN_LEVEL_GAP: f64 = 1e-9;

/// Non-increasing step function `p : [0, R] -> (0, f(rho_bar)]`.
///
/// `levels[0]` holds on `[0, jumps[0]]`, `levels[i]` on `(jumps[i-1], jumps[i]]`
/// and the last level up to `R`. At a jump both one-sided values are
/// admissible; intermediate values are never used.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstraint {
    jumps: Vec<f64>,
    levels: Vec<f64>,
}

/// Which one-sided value of `p` to use at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `p(xi+)`: the lower level at a jump.
    #[default]
    Plus,
    /// `p(xi-)`: the higher level at a jump.
    Minus,
}

impl PiecewiseConstraint {
    pub fn new(jumps: Vec<f64>, levels: Vec<f64>, flux: &FluxModel) -> Result<Self> {
        if levels.len() != jumps.len() + 1 {
            return Err(Error::InvalidConstraint(format!(
                "{} jumps need {} levels, got {}",
                jumps.len(),
                jumps.len() + 1,
                levels.len()
            )));
        }
        let r = flux.max_density();
        if jumps.iter().any(|&x| !(x > 0.0 && x < r)) {
            return Err(Error::InvalidConstraint(format!("jump locations must lie in (0, {r})")));
        }
        if jumps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConstraint("jump locations must increase strictly".into()));
        }
        if levels.windows(2).any(|w| !(w[0] - w[1] > MIN_LEVEL_GAP)) {
            return Err(Error::InvalidConstraint("levels must decrease strictly".into()));
        }
        let fmax = flux.max_flow();
        let last = *levels.last().unwrap();
        if !(last > 0.0) {
            return Err(Error::InvalidConstraint(format!("levels must be positive, got {last}")));
        }
        if levels[0] > fmax * (1.0 + 1e-12) {
            return Err(Error::InvalidConstraint(format!(
                "level {} exceeds the maximal flow {fmax}",
                levels[0]
            )));
        }
        let mut levels = levels;
        levels[0] = levels[0].min(fmax);
        Ok(PiecewiseConstraint { jumps, levels })
    }

    /// `p` constant equal to `level`.
    pub fn constant(level: f64, flux: &FluxModel) -> Result<Self> {
        Self::new(Vec::new(), vec![level], flux)
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Largest jump `h = max (p_{i-1} - p_i)`; zero without jumps.
    pub fn max_jump(&self) -> f64 {
        self.levels.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }

    /// `p(xi-)`, with `p(0-) = p_0`.
    pub fn p_minus(&self, xi: f64) -> f64 {
        self.one_sided(xi, 0.0).0
    }

    /// `p(xi+)`, with `p(R+) = p_n`.
    pub fn p_plus(&self, xi: f64) -> f64 {
        self.one_sided(xi, 0.0).1
    }

    /// `(p(xi-), p(xi+))`, treating `xi` within `tol` of a jump as on it.
    pub fn one_sided(&self, xi: f64, tol: f64) -> (f64, f64) {
        let below = self.jumps.iter().filter(|&&j| j < xi - tol).count();
        let upto = self.jumps.iter().filter(|&&j| j <= xi + tol).count();
        (self.levels[below], self.levels[upto])
    }

    pub fn level(&self, xi: f64, branch: Branch, tol: f64) -> f64 {
        let (minus, plus) = self.one_sided(xi, tol);
        match branch {
            Branch::Minus => minus,
            Branch::Plus => plus,
        }
    }

    /// Index of the jump within `tol` of `xi`.
    pub fn jump_near(&self, xi: f64, tol: f64) -> Option<usize> {
        self.jumps.iter().position(|&j| (j - xi).abs() <= tol)
    }

    /// Distance from `xi` to the closest jump farther than `tol`, if any.
    pub fn distance_to_nearest_jump(&self, xi: f64, tol: f64) -> Option<f64> {
        self.jumps
            .iter()
            .map(|&j| (j - xi).abs())
            .filter(|&d| d > tol)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum WeightShape {
    /// `w(x) = 2 (x + i_w) / i_w^2` on `(-i_w, 0]`.
    Affine,
    /// Piecewise-linear through `(positions, values)` on `[-i_w, 0]`.
    Table {
        positions: Vec<f64>,
        values: Vec<f64>,
        /// cumulative integral at each node
        cumulative: Vec<f64>,
    },
}

/// Non-decreasing averaging weight supported on `[-i_w, 0]` with unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightKernel {
    support: f64,
    shape: WeightShape,
}

impl WeightKernel {
    pub fn affine(support: f64) -> Result<Self> {
        if !(support.is_finite() && support > 0.0) {
            return Err(Error::InvalidWeight(format!("support radius must be positive, got {support}")));
        }
        Ok(WeightKernel {
            support,
            shape: WeightShape::Affine,
        })
    }

    /// Uniform weight `1 / i_w`.
    pub fn uniform(support: f64) -> Result<Self> {
        let h = 1.0 / support;
        Self::table(vec![-support, 0.0], vec![h, h])
    }

    /// Piecewise-linear weight through the given nodes. The first node fixes
    /// `-i_w`, the last must be `0`. Mass defects up to `1e-6` are
    /// renormalised with a warning.
    pub fn table(positions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if positions.len() != values.len() || positions.len() < 2 {
            return Err(Error::InvalidWeight(
                "weight table needs at least two nodes and matching lengths".into(),
            ));
        }
        if *positions.last().unwrap() != 0.0 || !(positions[0] < 0.0) {
            return Err(Error::InvalidWeight("weight table must span [-i_w, 0]".into()));
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidWeight("weight nodes must increase strictly".into()));
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidWeight("weight must be non-negative".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidWeight("weight must be non-decreasing".into()));
        }
        let mut cumulative = vec![0.0; positions.len()];
        for i in 1..positions.len() {
            cumulative[i] =
                cumulative[i - 1] + 0.5 * (values[i] + values[i - 1]) * (positions[i] - positions[i - 1]);
        }
        let mass = *cumulative.last().unwrap();
        let defect = (mass - 1.0).abs();
        let (values, cumulative) = if defect <= WEIGHT_MASS_TOL {
            (values, cumulative)
        } else if defect <= WEIGHT_RENORMALISE_MAX {
            warn!("weight mass {mass} differs from 1 by {defect:.3e}; renormalising");
            (
                values.iter().map(|v| v / mass).collect(),
                cumulative.iter().map(|c| c / mass).collect(),
            )
        } else {
            return Err(Error::InvalidWeight(format!("weight must have unit mass, got {mass}")));
        };
        Ok(WeightKernel {
            support: -positions[0],
            shape: WeightShape::Table {
                positions,
                values,
                cumulative,
            },
        })
    }

    /// `i_w`.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// `w(x)`.
    pub fn density(&self, x: f64) -> f64 {
        let iw = self.support;
        if x <= -iw || x > 0.0 {
            return 0.0;
        }
        match &self.shape {
            WeightShape::Affine => 2.0 * (x + iw) / (iw * iw),
            WeightShape::Table {
                positions, values, ..
            } => {
                let i = segment(positions, x);
                let s = (x - positions[i]) / (positions[i + 1] - positions[i]);
                values[i] + s * (values[i + 1] - values[i])
            }
        }
    }

    /// `w(0-)`.
    pub fn exit_value(&self) -> f64 {
        match &self.shape {
            WeightShape::Affine => 2.0 / self.support,
            WeightShape::Table { values, .. } => *values.last().unwrap(),
        }
    }

    /// `W(x) = int_{-i_w}^{x} w`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let iw = self.support;
        let x = x.clamp(-iw, 0.0);
        match &self.shape {
            WeightShape::Affine => {
                let s = (x + iw) / iw;
                s * s
            }
            WeightShape::Table {
                positions,
                values,
                cumulative,
            } => {
                let i = segment(positions, x);
                let dx = x - positions[i];
                let slope = (values[i + 1] - values[i]) / (positions[i + 1] - positions[i]);
                cumulative[i] + values[i] * dx + 0.5 * slope * dx * dx
            }
        }
    }

    /// `int_a^b w`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    /// Weight carried by each cell of a uniform mesh starting at `x_min`.
    pub fn cell_weights(&self, x_min: f64, dx: f64, n_cells: usize) -> Vec<(usize, f64)> {
        (0..n_cells)
            .filter_map(|j| {
                let a = x_min + j as f64 * dx;
                let b = a + dx;
                if b <= -self.support || a >= 0.0 {
                    None
                } else {
                    Some((j, self.integral(a, b)))
                }
            })
            .collect()
    }

    /// `xi = int w rho` for cell averages on a uniform mesh, integrating `w`
    /// exactly over every (partial) cell.
    pub fn weighted_average_cells(&self, x_min: f64, dx: f64, cells: &[f64]) -> f64 {
        self.cell_weights(x_min, dx, cells.len())
            .into_iter()
            .map(|(j, m)| m * cells[j])
            .sum()
    }

    /// `xi = int w rho` for a general profile, by a midpoint rule on
    /// `n` slabs weighted with the exact mass of `w` on each slab.
    pub fn weighted_average(&self, profile: impl Fn(f64) -> f64, n: usize) -> f64 {
        let iw = self.support;
        let h = iw / n as f64;
        (0..n)
            .map(|k| {
                let a = -iw + k as f64 * h;
                profile(a + 0.5 * h) * self.integral(a, a + h)
            })
            .sum()
    }
}

fn segment(nodes: &[f64], x: f64) -> usize {
    match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(nodes.len() - 2),
        Err(i) => i.saturating_sub(1).min(nodes.len() - 2),
    }
}

/// Bound on `|d xi / dt|` along any entropy solution: `2 w(0-) f(rho_bar)`.
pub fn xi_rate_bound(flux: &FluxModel, weight: &WeightKernel) -> f64 {
    2.0 * weight.exit_value() * flux.max_flow()
}
