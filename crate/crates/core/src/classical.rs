//! Self-similar wave fans and the unconstrained Riemann solver.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::FluxModel;

/// Slack on speed ordering when a fan is assembled from independently
/// computed pieces.
const SPEED_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveKind {
    Shock,
    Rarefaction,
    /// Stationary jump at `x = 0` between `rho_hat(p)` and `rho_check(p)`.
    NonclassicalShock,
}

impl WaveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WaveKind::Shock => "shock",
            WaveKind::Rarefaction => "rarefaction",
            WaveKind::NonclassicalShock => "nonclassical_shock",
        }
    }
}

/// One elementary wave. Shocks have `speed_lo == speed_hi`; a rarefaction
/// spans the characteristic speeds of its end states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Wave {
    pub kind: WaveKind,
    pub left: f64,
    pub right: f64,
    pub speed_lo: f64,
    pub speed_hi: f64,
}

impl Wave {
    pub fn shock(flux: &FluxModel, left: f64, right: f64) -> Result<Self> {
        let s = flux.shock_speed(left, right)?;
        Ok(Wave {
            kind: WaveKind::Shock,
            left,
            right,
            speed_lo: s,
            speed_hi: s,
        })
    }

    pub fn rarefaction(flux: &FluxModel, left: f64, right: f64) -> Self {
        Wave {
            kind: WaveKind::Rarefaction,
            left,
            right,
            speed_lo: flux.char_speed(left),
            speed_hi: flux.char_speed(right),
        }
    }

    pub fn nonclassical(left: f64, right: f64) -> Self {
        Wave {
            kind: WaveKind::NonclassicalShock,
            left,
            right,
            speed_lo: 0.0,
            speed_hi: 0.0,
        }
    }

    pub fn is_discontinuity(&self) -> bool {
        self.kind != WaveKind::Rarefaction
    }

    /// `|speed * [rho] - [f]|`; zero for an exact weak solution.
    pub fn rankine_hugoniot_residual(&self, flux: &FluxModel) -> f64 {
        match self.kind {
            WaveKind::Rarefaction => 0.0,
            _ => {
                let s = self.speed_lo;
                (s * (self.right - self.left) - (flux.flow(self.right) - flux.flow(self.left))).abs()
            }
        }
    }
}

/// Piecewise profile `rho(t, x) = u(x / t)` made of ordered waves separated
/// by constant states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfSimilarSolution {
    left_state: f64,
    waves: Vec<Wave>,
}

impl SelfSimilarSolution {
    pub fn constant(rho: f64) -> Self {
        SelfSimilarSolution {
            left_state: rho,
            waves: Vec::new(),
        }
    }

    /// Assemble a fan, checking that adjacent waves share states and that
    /// speeds are sorted.
    pub fn from_waves(left_state: f64, waves: Vec<Wave>) -> Result<Self> {
        let mut state = left_state;
        let mut last_speed = f64::NEG_INFINITY;
        for w in &waves {
            if (w.left - state).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "wave starts at {} but the preceding state is {state}",
                    w.left
                )));
            }
            if w.speed_lo > w.speed_hi + SPEED_SLACK || w.speed_lo < last_speed - SPEED_SLACK {
                return Err(Error::InvalidArgument(format!(
                    "wave speeds [{}, {}] out of order after {last_speed}",
                    w.speed_lo, w.speed_hi
                )));
            }
            state = w.right;
            last_speed = w.speed_hi;
        }
        Ok(SelfSimilarSolution { left_state, waves })
    }

    pub fn waves(&self) -> &[Wave] {
        &self.waves
    }

    pub fn left_state(&self) -> f64 {
        self.left_state
    }

    pub fn right_state(&self) -> f64 {
        self.waves.last().map_or(self.left_state, |w| w.right)
    }

    pub fn is_constant(&self) -> bool {
        self.waves.is_empty()
    }

    /// Value at similarity coordinate `xi = x / t`. Right-continuous at shocks.
    pub fn evaluate(&self, flux: &FluxModel, xi: f64) -> f64 {
        let mut state = self.left_state;
        for w in &self.waves {
            if xi < w.speed_lo {
                return state;
            }
            if w.kind == WaveKind::Rarefaction && xi < w.speed_hi {
                return fan_state(flux, w, xi);
            }
            state = w.right;
        }
        state
    }

    /// Left limit of the profile at `xi`.
    pub fn evaluate_left(&self, flux: &FluxModel, xi: f64) -> f64 {
        let mut state = self.left_state;
        for w in &self.waves {
            if xi <= w.speed_lo {
                return state;
            }
            if w.kind == WaveKind::Rarefaction && xi <= w.speed_hi {
                return fan_state(flux, w, xi);
            }
            state = w.right;
        }
        state
    }

    /// `rho(t, x)` for `t > 0`.
    pub fn at(&self, flux: &FluxModel, t: f64, x: f64) -> f64 {
        self.evaluate(flux, x / t)
    }

    /// One-sided traces `(rho(t, 0-), rho(t, 0+))`.
    pub fn traces_at_zero(&self, flux: &FluxModel) -> (f64, f64) {
        (self.evaluate_left(flux, 0.0), self.evaluate(flux, 0.0))
    }

    /// Total variation of the profile at any fixed `t > 0`.
    pub fn total_variation(&self) -> f64 {
        self.waves.iter().map(|w| (w.right - w.left).abs()).sum()
    }

    /// Largest Rankine–Hugoniot residual over all discontinuities.
    pub fn max_rankine_hugoniot_residual(&self, flux: &FluxModel) -> f64 {
        self.waves
            .iter()
            .map(|w| w.rankine_hugoniot_residual(flux))
            .fold(0.0, f64::max)
    }

    /// Speeds at which the profile has a kink or jump, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .waves
            .iter()
            .flat_map(|w| [w.speed_lo, w.speed_hi])
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }

    /// Constant states, left to right, including the two far states.
    pub fn states(&self) -> Vec<f64> {
        std::iter::once(self.left_state)
            .chain(self.waves.iter().map(|w| w.right))
            .collect()
    }

    /// Joins fans left to right, inserting `joints[i]` after `parts[i]`.
    pub(crate) fn concat(parts: &[&SelfSimilarSolution], joints: &[Option<Wave>]) -> Result<Self> {
        let mut waves = Vec::new();
        for (i, part) in parts.iter().enumerate() {
            waves.extend_from_slice(&part.waves);
            if let Some(Some(w)) = joints.get(i) {
                waves.push(*w);
            }
        }
        Self::from_waves(parts[0].left_state, waves)
    }
}

fn fan_state(flux: &FluxModel, w: &Wave, xi: f64) -> f64 {
    // endpoints are reproduced exactly; the interior is inverted
    if xi <= w.speed_lo {
        return w.left;
    }
    if xi >= w.speed_hi {
        return w.right;
    }
    flux.char_speed_inverse(xi)
        .unwrap_or(w.right)
        .clamp(w.right.min(w.left), w.right.max(w.left))
}

/// Entropy solution of the unconstrained Riemann problem.
pub fn solve_classical(flux: &FluxModel, rho_l: f64, rho_r: f64) -> Result<SelfSimilarSolution> {
    flux.eval(rho_l)?;
    flux.eval(rho_r)?;
    let waves = if rho_l == rho_r {
        Vec::new()
    } else if rho_l < rho_r {
        vec![Wave::shock(flux, rho_l, rho_r)?]
    } else {
        vec![Wave::rarefaction(flux, rho_l, rho_r)]
    };
    SelfSimilarSolution::from_waves(rho_l, waves)
}
