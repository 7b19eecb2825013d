//! Strictly concave flux functions on `[0, R]`.
//!
//! A [`FluxModel`] owns the flux `f`, its derivative (the characteristic
//! speed), the location of the unique maximum and the two inverse branches
//! `rho_hat` (congested, `>= rho_bar`) and `rho_check` (free, `<= rho_bar`).
//! Inverses fall back to bisection when no closed form is supplied.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Absolute tolerance (density units) for every bisection in this module.
pub const INVERSE_TOL: f64 = 1e-12;

const VALIDATION_POINTS: usize = 1024;
const ENDPOINT_TOL: f64 = 1e-10;
const GOLDEN_TOL: f64 = 1e-12;
/// Slack accepted on density and flow arguments before a domain error.
const ARG_SLACK: f64 = 1e-12;

/// Flux `f : [0, R] -> [0, f(rho_bar)]` satisfying `f(0) = f(R) = 0` and
/// strict concavity. Cheap to clone; all closures are shared.
#[derive(Clone)]
pub struct FluxModel {
    max_density: f64,
    f: ScalarFn,
    df: Option<ScalarFn>,
    inverse: Option<(ScalarFn, ScalarFn)>,
    critical_density: f64,
    max_flow: f64,
    fd_step: f64,
    label: String,
}

impl fmt::Debug for FluxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxModel")
            .field("label", &self.label)
            .field("max_density", &self.max_density)
            .field("critical_density", &self.critical_density)
            .field("max_flow", &self.max_flow)
            .field("analytic_derivative", &self.df.is_some())
            .field("analytic_inverse", &self.inverse.is_some())
            .finish()
    }
}

/// Builder for user supplied fluxes.
pub struct FluxBuilder {
    max_density: f64,
    f: ScalarFn,
    df: Option<ScalarFn>,
    inverse: Option<(ScalarFn, ScalarFn)>,
    critical_density: Option<f64>,
    label: String,
}

impl FluxBuilder {
    pub fn new(max_density: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FluxBuilder {
            max_density,
            f: Arc::new(f),
            df: None,
            inverse: None,
            critical_density: None,
            label: "custom".to_string(),
        }
    }

    /// Analytic characteristic speed `f'`.
    pub fn derivative(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.df = Some(Arc::new(df));
        self
    }

    /// Closed-form inverse branches: `congested(q) >= rho_bar >= free(q)`.
    pub fn inverse_branches(
        mut self,
        congested: impl Fn(f64) -> f64 + Send + Sync + 'static,
        free: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.inverse = Some((Arc::new(congested), Arc::new(free)));
        self
    }

    pub fn critical_density(mut self, rho_bar: f64) -> Self {
        self.critical_density = Some(rho_bar);
        self
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn build(self) -> Result<FluxModel> {
        let r = self.max_density;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidFlux(format!("maximal density must be positive, got {r}")));
        }
        let f = self.f;
        let critical_density = match self.critical_density {
            Some(rho) => rho,
            None => {
                // golden section stalls near sqrt(eps) on a flat top; finish on
                // the sign of the slope
                let rough = golden_section_max(|x| f(x), 0.0, r, GOLDEN_TOL * r);
                let h = 1e-6 * r;
                let slope = |x: f64| match &self.df {
                    Some(df) => df(x),
                    None => (f((x + h).min(r)) - f((x - h).max(0.0))) / (2.0 * h),
                };
                refine_slope_root(slope, (rough - 1e-6 * r).max(0.0), (rough + 1e-6 * r).min(r))
            }
        };
        if !(critical_density > 0.0 && critical_density < r) {
            return Err(Error::InvalidFlux(format!(
                "critical density {critical_density} not inside (0, {r})"
            )));
        }
        let max_flow = f(critical_density);
        if !(max_flow.is_finite() && max_flow > 0.0) {
            return Err(Error::InvalidFlux(format!("maximal flow must be positive, got {max_flow}")));
        }
        let model = FluxModel {
            max_density: r,
            f,
            df: self.df,
            inverse: self.inverse,
            critical_density,
            max_flow,
            fd_step: 1e-6 * r,
            label: self.label,
        };
        model.validate()?;
        Ok(model)
    }
}

impl FluxModel {
    /// `f(rho) = rho (1 - rho)` on `[0, 1]`.
    pub fn quadratic() -> Self {
        Self::greenshields(1.0, 1.0).expect("unit Greenshields flux is valid")
    }

    /// `f(rho) = v rho (1 - rho / R)`, with closed-form derivative and inverses.
    pub fn greenshields(v_max: f64, max_density: f64) -> Result<Self> {
        if !(v_max > 0.0 && max_density > 0.0) {
            return Err(Error::InvalidFlux(format!(
                "Greenshields flux needs positive parameters, got v = {v_max}, R = {max_density}"
            )));
        }
        let (v, r) = (v_max, max_density);
        let fmax = 0.25 * v * r;
        // roots of rho^2 - R rho + q R / v = 0
        let disc = move |q: f64| (r * r - 4.0 * q * r / v).max(0.0).sqrt();
        FluxBuilder::new(r, move |rho| v * rho * (1.0 - rho / r))
            .derivative(move |rho| v * (1.0 - 2.0 * rho / r))
            .inverse_branches(
                move |q| {
                    if q >= fmax {
                        0.5 * r
                    } else {
                        0.5 * (r + disc(q))
                    }
                },
                move |q| {
                    if q >= fmax {
                        0.5 * r
                    } else {
                        // cancellation-free form of (R - disc) / 2
                        2.0 * q * r / v / (r + disc(q))
                    }
                },
            )
            .critical_density(0.5 * r)
            .label(if v == 1.0 && r == 1.0 {
                "quadratic".to_string()
            } else {
                format!("greenshields(v={v}, R={r})")
            })
            .build()
    }

    /// Flux through tabulated points, interpolated by a monotone cubic
    /// (Fritsch–Carlson). The first density must be 0 and the last is `R`.
    pub fn tabulated(densities: &[f64], flows: &[f64]) -> Result<Self> {
        let spline = MonotoneCubic::new(densities, flows)?;
        if densities[0] != 0.0 {
            return Err(Error::InvalidFlux("tabulated flux must start at density 0".into()));
        }
        let r = *densities.last().unwrap();
        let spline = Arc::new(spline);
        let s1 = Arc::clone(&spline);
        let s2 = Arc::clone(&spline);
        FluxBuilder::new(r, move |rho| s1.eval(rho))
            .derivative(move |rho| s2.derivative(rho))
            .label(format!("table({} points)", densities.len()))
            .build()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `R`.
    pub fn max_density(&self) -> f64 {
        self.max_density
    }

    /// `rho_bar`, the unique maximiser of `f`.
    pub fn critical_density(&self) -> f64 {
        self.critical_density
    }

    /// `f(rho_bar)`.
    pub fn max_flow(&self) -> f64 {
        self.max_flow
    }

    /// Checked evaluation of `f`.
    pub fn eval(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(self.flow(rho))
    }

    /// Unchecked evaluation of `f`; callers guarantee `0 <= rho <= R`.
    #[inline]
    pub fn flow(&self, rho: f64) -> f64 {
        (self.f)(rho.clamp(0.0, self.max_density))
    }

    /// Characteristic speed `f'(rho)`.
    pub fn char_speed(&self, rho: f64) -> f64 {
        let rho = rho.clamp(0.0, self.max_density);
        match &self.df {
            Some(df) => df(rho),
            None => {
                let h = self.fd_step;
                let lo = (rho - h).max(0.0);
                let hi = (rho + h).min(self.max_density);
                ((self.f)(hi) - (self.f)(lo)) / (hi - lo)
            }
        }
    }

    /// Largest `|f'|` on `[0, R]`; attained at an endpoint for concave `f`.
    pub fn max_char_speed(&self) -> f64 {
        self.char_speed(0.0).abs().max(self.char_speed(self.max_density).abs())
    }

    /// Rankine–Hugoniot speed of the jump between `rho_a` and `rho_b`.
    pub fn shock_speed(&self, rho_a: f64, rho_b: f64) -> Result<f64> {
        self.check_density(rho_a)?;
        self.check_density(rho_b)?;
        if rho_a == rho_b {
            return Err(Error::DegenerateJump(rho_a));
        }
        let s = (self.flow(rho_a) - self.flow(rho_b)) / (rho_a - rho_b);
        // a jump between the two preimages of one flux value is stationary;
        // rounding in f must not push it off x = 0
        let scale = self.max_flow.max(1.0) / (rho_a - rho_b).abs();
        Ok(if s.abs() <= 8.0 * f64::EPSILON * scale { 0.0 } else { s })
    }

    /// Congested inverse: the density `>= rho_bar` with flux `q`.
    pub fn rho_hat(&self, q: f64) -> Result<f64> {
        let q = self.check_flow(q)?;
        if q >= self.max_flow {
            return Ok(self.critical_density);
        }
        if q <= 0.0 {
            return Ok(self.max_density);
        }
        if let Some((hat, _)) = &self.inverse {
            return Ok(hat(q));
        }
        // f decreasing on [rho_bar, R]
        let (mut lo, mut hi) = (self.critical_density, self.max_density);
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.flow(mid) > q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Free inverse: the density `<= rho_bar` with flux `q`.
    pub fn rho_check(&self, q: f64) -> Result<f64> {
        let q = self.check_flow(q)?;
        if q >= self.max_flow {
            return Ok(self.critical_density);
        }
        if q <= 0.0 {
            return Ok(0.0);
        }
        if let Some((_, check)) = &self.inverse {
            return Ok(check(q));
        }
        let (mut lo, mut hi) = (0.0, self.critical_density);
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.flow(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The density whose characteristic speed is `s`; samples rarefaction fans.
    pub fn char_speed_inverse(&self, s: f64) -> Result<f64> {
        let r = self.max_density;
        let (s_hi, s_lo) = (self.char_speed(0.0), self.char_speed(r));
        if !(s >= s_lo - ARG_SLACK && s <= s_hi + ARG_SLACK) {
            return Err(Error::domain("characteristic speed", s, s_lo, s_hi));
        }
        if s >= s_hi {
            return Ok(0.0);
        }
        if s <= s_lo {
            return Ok(r);
        }
        // f' strictly decreasing
        let (mut lo, mut hi) = (0.0, r);
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.char_speed(mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn check_density(&self, rho: f64) -> Result<()> {
        if rho.is_finite() && rho >= -ARG_SLACK && rho <= self.max_density + ARG_SLACK {
            Ok(())
        } else {
            Err(Error::domain("density", rho, 0.0, self.max_density))
        }
    }

    fn check_flow(&self, q: f64) -> Result<f64> {
        if q.is_finite() && q >= -ARG_SLACK && q <= self.max_flow + ARG_SLACK {
            Ok(q.clamp(0.0, self.max_flow))
        } else {
            Err(Error::domain("flow", q, 0.0, self.max_flow))
        }
    }

    fn validate(&self) -> Result<()> {
        let r = self.max_density;
        let scale = self.max_flow.max(1.0);
        let (f0, fr) = ((self.f)(0.0), (self.f)(r));
        if f0.abs() > ENDPOINT_TOL * scale || fr.abs() > ENDPOINT_TOL * scale {
            return Err(Error::InvalidFlux(format!(
                "flux must vanish at 0 and R, got f(0) = {f0}, f(R) = {fr}"
            )));
        }
        let n = VALIDATION_POINTS;
        let grid: Vec<f64> = (0..n).map(|i| r * i as f64 / (n - 1) as f64).collect();
        let near = 1e-6 * r;
        for &rho in &grid {
            if (rho - self.critical_density).abs() <= near {
                continue;
            }
            let v = self.char_speed(rho) * (self.critical_density - rho);
            if !(v > 0.0) {
                return Err(Error::InvalidFlux(format!(
                    "flux is not strictly unimodal around {}: f'({rho}) has the wrong sign",
                    self.critical_density
                )));
            }
        }
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = (self.f)(0.5 * (a + b));
            if !(mid > 0.5 * ((self.f)(a) + (self.f)(b))) {
                return Err(Error::InvalidFlux(format!(
                    "flux is not strictly concave on [{a}, {b}]"
                )));
            }
        }
        Ok(())
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn refine_slope_root(slope: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    if !(slope(a) > 0.0 && slope(b) < 0.0) {
        return 0.5 * (a + b);
    }
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if slope(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes.
#[derive(Debug, Clone)]
struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() || x.len() < 3 {
            return Err(Error::InvalidFlux(
                "tabulated flux needs at least 3 points and matching lengths".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidFlux("tabulated densities must increase strictly".into()));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Ok(MonotoneCubic {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }

    fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (d00 * self.y[i] + d01 * self.y[i + 1]) / h + d10 * self.m[i] + d11 * self.m[i + 1]
    }
}

// three-point one-sided slope, limited to keep the end monotone
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bisection_quadratic() -> FluxModel {
        FluxBuilder::new(1.0, |r| r * (1.0 - r)).build().unwrap()
    }

    #[test]
    fn quadratic_values() {
        let f = FluxModel::quadratic();
        assert_abs_diff_eq!(f.eval(0.5).unwrap(), 0.25);
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(f.eval(0.8).unwrap(), 0.16, epsilon = 1e-15);
        assert!(f.eval(1.2).is_err());
        assert!(f.eval(-0.1).is_err());
    }

    #[test]
    fn shock_speeds() {
        let f = FluxModel::quadratic();
        assert_abs_diff_eq!(f.shock_speed(0.25, 0.5).unwrap(), 0.25, epsilon = 1e-15);
        for a in [0.1, 0.3, 0.45] {
            assert_abs_diff_eq!(f.shock_speed(a, 1.0 - a).unwrap(), 0.0, epsilon = 1e-15);
        }
        let hat = f.rho_hat(0.05).unwrap();
        assert_abs_diff_eq!(f.shock_speed(0.8, hat).unwrap(), -0.7472136, epsilon = 1e-6);
        assert!(matches!(f.shock_speed(0.3, 0.3), Err(Error::DegenerateJump(_))));
    }

    #[test]
    fn inverse_branches_both_paths() {
        for f in [FluxModel::quadratic(), bisection_quadratic()] {
            assert_abs_diff_eq!(f.rho_check(0.1875).unwrap(), 0.25, epsilon = 1e-11);
            assert_abs_diff_eq!(f.rho_hat(0.1875).unwrap(), 0.75, epsilon = 1e-11);
            assert_abs_diff_eq!(f.rho_hat(0.25).unwrap(), 0.5, epsilon = 1e-11);
            assert_abs_diff_eq!(f.rho_check(0.25).unwrap(), 0.5, epsilon = 1e-11);
            assert_abs_diff_eq!(f.rho_hat(0.05).unwrap(), 0.9472136, epsilon = 1e-6);
            assert_abs_diff_eq!(f.rho_check(0.05).unwrap(), 0.0527864, epsilon = 1e-6);
            assert!(f.rho_hat(0.3).is_err());
            assert!(f.rho_check(-0.01).is_err());
        }
    }

    #[test]
    fn bisection_located_maximum() {
        let f = bisection_quadratic();
        assert_abs_diff_eq!(f.critical_density(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(f.max_flow(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn char_speed_inverse_values() {
        let f = FluxModel::quadratic();
        assert_abs_diff_eq!(f.char_speed_inverse(0.0).unwrap(), 0.5, epsilon = 1e-11);
        assert_abs_diff_eq!(f.char_speed_inverse(-0.5).unwrap(), 0.75, epsilon = 1e-11);
        assert_abs_diff_eq!(f.char_speed_inverse(1.0).unwrap(), 0.0, epsilon = 1e-11);
        assert!(f.char_speed_inverse(1.5).is_err());
    }

    #[test]
    fn finite_difference_derivative_matches_analytic() {
        let a = FluxModel::quadratic();
        let b = bisection_quadratic();
        for i in 1..100 {
            let rho = i as f64 / 100.0;
            assert_abs_diff_eq!(a.char_speed(rho), b.char_speed(rho), epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_bad_fluxes() {
        // does not vanish at R
        assert!(FluxBuilder::new(1.0, |r| r * (1.2 - r)).build().is_err());
        // convex
        assert!(FluxBuilder::new(1.0, |r: f64| -r * (1.0 - r)).build().is_err());
        // two bumps
        let two = |r: f64| (std::f64::consts::PI * 2.0 * r).sin().abs() * 0.1;
        assert!(FluxBuilder::new(1.0, two).build().is_err());
        // flat top
        let flat = |r: f64| (2.0 * r).min(0.5).min(2.0 * (1.0 - r));
        assert!(FluxBuilder::new(1.0, flat).build().is_err());
    }

    #[test]
    fn tabulated_flux_tracks_quadratic() {
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|r| r * (1.0 - r)).collect();
        let f = FluxModel::tabulated(&xs, &ys).unwrap();
        assert_abs_diff_eq!(f.critical_density(), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(f.max_flow(), 0.25, epsilon = 1e-6);
        for i in 0..=100 {
            let rho = i as f64 / 100.0;
            assert_abs_diff_eq!(f.flow(rho), rho * (1.0 - rho), epsilon = 1e-4);
        }
        let q = 0.1;
        assert_abs_diff_eq!(f.flow(f.rho_hat(q).unwrap()), q, epsilon = 1e-10);
        assert_abs_diff_eq!(f.flow(f.rho_check(q).unwrap()), q, epsilon = 1e-10);
    }
}
