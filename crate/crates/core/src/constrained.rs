//! Riemann problems with a non-local point constraint at `x = 0`.
//!
//! [`ConstrainedProblem::classify`] sorts a datum `(rho_l, rho_r)` into one of
//! seventeen cases: five classical (`C*`), seven with a unique nonclassical
//! solution (`N*`) and five where several entropy solutions coexist. The two
//! extreme solvers pick the largest (`solve_q`) or the smallest (`solve_p`)
//! admissible exit flux in the non-unique cases and agree everywhere else.
//!
//! Every nonclassical solution has the form
//!
//! ```text
//!   R[rho_l, rho_hat(p_bar)](x/t)    for x < 0
//!   R[rho_check(p_bar), rho_r](x/t)  for x >= 0
//! ```
//!
//! joined by a stationary jump with `f = p_bar` on both sides, and
//! `p(rho_l+) <= p_bar <= p(rho_l-)`.
//!
//! Borderline data follow these rules, on top of the literal inequalities:
//!
//! * flux comparisons against constraint levels use the tolerance
//!   [`CLASSIFY_TOL`], and equality goes to the classical side;
//! * `C5` and `N5a` (and `N4a`) accept `f(rho_l) = p(rho_l)` when `p` is
//!   continuous at `rho_l`; at a jump the strict inequality is kept;
//! * `C4` also covers `f(rho_bar) = p(rho_l-) > p(rho_l+) > f(rho_l)`, where
//!   the classical fan lowers the upstream average and keeps the top level.

use std::fmt;

use serde::Serialize;

use crate::classical::{solve_classical, SelfSimilarSolution, Wave, WaveKind};
use crate::constraint::{xi_rate_bound, PiecewiseConstraint, WeightKernel};
use crate::error::{Error, Result};
use crate::flux::FluxModel;

/// Tolerance on flux-valued comparisons, and on the distance from `rho_l`
/// to a jump of `p` below which `rho_l` is treated as sitting on it.
pub const CLASSIFY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RiemannCase {
    C1,
    C2,
    C3,
    C4,
    C5,
    N1,
    N2,
    N3,
    N4a,
    N4b,
    N5a,
    N5b,
    CN2,
    CN3,
    NNN4,
    CNN5,
    NNN5,
}

impl RiemannCase {
    pub const ALL: [RiemannCase; 17] = [
        RiemannCase::C1,
        RiemannCase::C2,
        RiemannCase::C3,
        RiemannCase::C4,
        RiemannCase::C5,
        RiemannCase::N1,
        RiemannCase::N2,
        RiemannCase::N3,
        RiemannCase::N4a,
        RiemannCase::N4b,
        RiemannCase::N5a,
        RiemannCase::N5b,
        RiemannCase::CN2,
        RiemannCase::CN3,
        RiemannCase::NNN4,
        RiemannCase::CNN5,
        RiemannCase::NNN5,
    ];

    pub fn as_str(self) -> &'static str {
        use RiemannCase::*;
        match self {
            C1 => "C1",
            C2 => "C2",
            C3 => "C3",
            C4 => "C4",
            C5 => "C5",
            N1 => "N1",
            N2 => "N2",
            N3 => "N3",
            N4a => "N4a",
            N4b => "N4b",
            N5a => "N5a",
            N5b => "N5b",
            CN2 => "CN2",
            CN3 => "CN3",
            NNN4 => "NNN4",
            CNN5 => "CNN5",
            NNN5 => "NNN5",
        }
    }

    /// Unique, classical solution.
    pub fn is_classical(self) -> bool {
        use RiemannCase::*;
        matches!(self, C1 | C2 | C3 | C4 | C5)
    }

    /// Unique, nonclassical solution.
    pub fn is_nonclassical(self) -> bool {
        use RiemannCase::*;
        matches!(self, N1 | N2 | N3 | N4a | N4b | N5a | N5b)
    }

    /// Several entropy solutions.
    pub fn is_pathological(self) -> bool {
        !(self.is_classical() || self.is_nonclassical())
    }
}

impl fmt::Display for RiemannCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything the case predicates look at.
#[derive(Debug, Clone, Copy)]
struct Datum {
    rl: f64,
    rr: f64,
    fl: f64,
    fr: f64,
    /// `p(rho_l-)`
    pm: f64,
    /// `p(rho_l+)`
    pp: f64,
    fmax: f64,
    rb: f64,
    jump: bool,
}

fn le(a: f64, b: f64) -> bool {
    a <= b + CLASSIFY_TOL
}
fn gt(a: f64, b: f64) -> bool {
    !le(a, b)
}
fn lt(a: f64, b: f64) -> bool {
    a < b - CLASSIFY_TOL
}
fn ge(a: f64, b: f64) -> bool {
    !lt(a, b)
}
fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= CLASSIFY_TOL
}

impl Datum {
    /// `f(rho_l) < p(rho_l+)`, relaxed to `<=` where `p` is continuous.
    fn below_plus(&self) -> bool {
        lt(self.fl, self.pp) || (!self.jump && eq(self.fl, self.pp))
    }

    fn matches(&self, case: RiemannCase) -> bool {
        use RiemannCase::*;
        let d = self;
        let region_a = d.rl < d.rr;
        let region_b = d.rr <= d.rl && d.rl <= d.rb;
        let region_c = d.rr <= d.rb && d.rb < d.rl;
        let region_d = d.rb < d.rr && d.rr <= d.rl;
        match case {
            C1 => region_a && d.fr < d.fl && le(d.fr, d.pp),
            N1 => region_a && d.fr < d.fl && gt(d.fr, d.pp),
            C2 => region_a && d.fl <= d.fr && le(d.fl, d.pp),
            N2 => region_a && d.fl <= d.fr && gt(d.fl, d.pm),
            CN2 => region_a && d.fl <= d.fr && gt(d.fl, d.pp) && le(d.fl, d.pm),
            C3 => region_b && le(d.fl, d.pp),
            N3 => region_b && gt(d.fl, d.pm),
            CN3 => region_b && gt(d.fl, d.pp) && le(d.fl, d.pm),
            C4 => region_c && (eq(d.fmax, d.pp) || (eq(d.fmax, d.pm) && lt(d.fl, d.pp))),
            N4a => region_c && !eq(d.fmax, d.pm) && d.below_plus(),
            N4b => region_c && !eq(d.fmax, d.pm) && gt(d.fl, d.pm),
            NNN4 => region_c && d.jump && ge(d.fl, d.pp) && le(d.fl, d.pm),
            C5 => region_d && le(d.fr, d.pm) && d.below_plus(),
            N5a => region_d && gt(d.fr, d.pm) && d.below_plus(),
            N5b => region_d && gt(d.fl, d.pm),
            CNN5 => region_d && le(d.fr, d.pm) && d.jump && ge(d.fl, d.pp) && le(d.fl, d.pm),
            NNN5 => {
                region_d && d.rr < d.rl && gt(d.fr, d.pm) && d.jump && ge(d.fl, d.pp) && le(d.fl, d.pm)
            }
        }
    }
}

/// A solution of the constrained Riemann problem, valid for `0 < t < horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstrainedSolution {
    pub case: RiemannCase,
    pub solution: SelfSimilarSolution,
    /// Constraint level carried by the stationary nonclassical jump; `None`
    /// for classical solutions.
    pub p_bar: Option<f64>,
    pub rho_l: f64,
    pub rho_r: f64,
    /// Time up to which the profile stays self-similar. May be infinite.
    pub horizon: f64,
}

impl ConstrainedSolution {
    pub fn is_classical(&self) -> bool {
        self.p_bar.is_none()
    }

    /// Flow through `x = 0`.
    pub fn exit_flux(&self, flux: &FluxModel) -> f64 {
        match self.p_bar {
            Some(p) => p,
            None => flux.flow(self.solution.traces_at_zero(flux).1),
        }
    }

    pub fn traces(&self, flux: &FluxModel) -> (f64, f64) {
        self.solution.traces_at_zero(flux)
    }
}

/// Outcome of one selection predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Check {
    Pass,
    Fail,
    /// Hypothesis not met.
    Vacuous,
}

impl Check {
    fn implication(hypothesis: bool, conclusion: bool) -> Self {
        match (hypothesis, conclusion) {
            (false, _) => Check::Vacuous,
            (true, true) => Check::Pass,
            (true, false) => Check::Fail,
        }
    }

    pub fn ok(self) -> bool {
        self != Check::Fail
    }
}

/// Selection properties every nonclassical solution must satisfy:
///
/// * `np1`: left part constant `=> p_bar = f(rho_l)` within `[p(rho_l+), p(rho_l-)]`;
/// * `np2`: `p_bar != f(rho_l)` and `rho_l < rho_hat(p_bar)` `=> p_bar = p(rho_l+)`;
/// * `np3`: `p_bar != f(rho_l)` and `rho_hat(p_bar) < rho_l` `=> p_bar = p(rho_l-)`;
/// * `np4`: `p` continuous at `rho_l` `=> p_bar = p(rho_l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NpReport {
    pub np1: Check,
    pub np2: Check,
    pub np3: Check,
    pub np4: Check,
}

impl NpReport {
    pub fn all_ok(&self) -> bool {
        [self.np1, self.np2, self.np3, self.np4].iter().all(|c| c.ok())
    }
}

/// Flux, exit capacity and averaging weight of one constrained problem.
#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    pub flux: FluxModel,
    pub constraint: PiecewiseConstraint,
    pub weight: WeightKernel,
}

impl ConstrainedProblem {
    pub fn new(flux: FluxModel, constraint: PiecewiseConstraint, weight: WeightKernel) -> Self {
        ConstrainedProblem {
            flux,
            constraint,
            weight,
        }
    }

    fn datum(&self, rho_l: f64, rho_r: f64) -> Result<Datum> {
        let fl = self.flux.eval(rho_l)?;
        let fr = self.flux.eval(rho_r)?;
        let (pm, pp) = self.constraint.one_sided(rho_l, CLASSIFY_TOL);
        Ok(Datum {
            rl: rho_l,
            rr: rho_r,
            fl,
            fr,
            pm,
            pp,
            fmax: self.flux.max_flow(),
            rb: self.flux.critical_density(),
            jump: pm != pp,
        })
    }

    /// Every case whose predicate holds; a well-formed partition yields one.
    pub fn matching_cases(&self, rho_l: f64, rho_r: f64) -> Result<Vec<RiemannCase>> {
        let d = self.datum(rho_l, rho_r)?;
        Ok(RiemannCase::ALL.into_iter().filter(|&c| d.matches(c)).collect())
    }

    pub fn classify(&self, rho_l: f64, rho_r: f64) -> Result<RiemannCase> {
        let matched = self.matching_cases(rho_l, rho_r)?;
        match matched.as_slice() {
            [case] => Ok(*case),
            _ => Err(Error::Classification {
                rho_l,
                rho_r,
                matched: matched.iter().map(|c| c.as_str()).collect(),
            }),
        }
    }

    /// The solver maximising the exit flux.
    pub fn solve_q(&self, rho_l: f64, rho_r: f64) -> Result<ConstrainedSolution> {
        use RiemannCase::*;
        let case = self.classify(rho_l, rho_r)?;
        let d = self.datum(rho_l, rho_r)?;
        match case {
            C1 | C2 | C3 | C4 | C5 | CN2 | CN3 | CNN5 => self.classical(case, rho_l, rho_r),
            N4a | N5a | NNN4 | NNN5 => self.nonclassical(case, rho_l, rho_r, d.pm),
            N1 | N2 | N3 | N4b | N5b => self.nonclassical(case, rho_l, rho_r, d.pp),
        }
    }

    /// The solver minimising the exit flux.
    pub fn solve_p(&self, rho_l: f64, rho_r: f64) -> Result<ConstrainedSolution> {
        use RiemannCase::*;
        let case = self.classify(rho_l, rho_r)?;
        let d = self.datum(rho_l, rho_r)?;
        match case {
            C1 | C2 | C3 | C4 | C5 => self.classical(case, rho_l, rho_r),
            N4a | N5a => self.nonclassical(case, rho_l, rho_r, d.pm),
            N1 | N2 | N3 | N4b | N5b => self.nonclassical(case, rho_l, rho_r, d.pp),
            CN2 | CN3 | CNN5 | NNN4 | NNN5 => self.nonclassical(case, rho_l, rho_r, d.pp),
        }
    }

    /// One representative per admissible exit level, by decreasing exit flux.
    pub fn enumerate_solutions(&self, rho_l: f64, rho_r: f64) -> Result<Vec<ConstrainedSolution>> {
        use RiemannCase::*;
        let case = self.classify(rho_l, rho_r)?;
        let d = self.datum(rho_l, rho_r)?;
        let mut out = Vec::new();
        match case {
            C1 | C2 | C3 | C4 | C5 => out.push(self.classical(case, rho_l, rho_r)?),
            N1 | N2 | N3 | N4a | N4b | N5a | N5b => out.push(self.solve_q(rho_l, rho_r)?),
            CN2 | CN3 => {
                out.push(self.classical(case, rho_l, rho_r)?);
                out.push(self.nonclassical(case, rho_l, rho_r, d.pp)?);
            }
            CNN5 => {
                out.push(self.classical(case, rho_l, rho_r)?);
                for p in [d.pp, d.fl] {
                    out.push(self.nonclassical(case, rho_l, rho_r, p)?);
                }
            }
            NNN4 | NNN5 => {
                for p in [d.pp, d.fl, d.pm] {
                    out.push(self.nonclassical(case, rho_l, rho_r, p)?);
                }
            }
        }
        let flux = &self.flux;
        // classical entries come first so they survive deduplication
        let mut kept: Vec<ConstrainedSolution> = Vec::with_capacity(out.len());
        for s in out {
            let e = s.exit_flux(flux);
            if !kept.iter().any(|k| (k.exit_flux(flux) - e).abs() <= CLASSIFY_TOL) {
                kept.push(s);
            }
        }
        kept.sort_by(|a, b| b.exit_flux(flux).partial_cmp(&a.exit_flux(flux)).unwrap());
        Ok(kept)
    }

    /// Bounds on the local exit flow: `(solve_q, solve_p)` exit fluxes.
    pub fn evacuation_flux_bounds(&self, rho_l: f64, rho_r: f64) -> Result<(f64, f64)> {
        let q = self.solve_q(rho_l, rho_r)?;
        let p = self.solve_p(rho_l, rho_r)?;
        Ok((q.exit_flux(&self.flux), p.exit_flux(&self.flux)))
    }

    fn classical(&self, case: RiemannCase, rho_l: f64, rho_r: f64) -> Result<ConstrainedSolution> {
        let solution = solve_classical(&self.flux, rho_l, rho_r)?;
        self.finish(case, rho_l, rho_r, solution, None)
    }

    fn nonclassical(
        &self,
        case: RiemannCase,
        rho_l: f64,
        rho_r: f64,
        p_bar: f64,
    ) -> Result<ConstrainedSolution> {
        let flux = &self.flux;
        let mut hat = flux.rho_hat(p_bar)?;
        let mut check = flux.rho_check(p_bar)?;
        // a bisection-accurate copy of an end state would leave a sliver wave
        if (hat - rho_l).abs() <= CLASSIFY_TOL {
            hat = rho_l;
        }
        if (check - rho_r).abs() <= CLASSIFY_TOL {
            check = rho_r;
        }
        let mut left = solve_classical(flux, rho_l, hat)?;
        let mut right = solve_classical(flux, check, rho_r)?;
        clamp_speeds(&mut left, f64::NEG_INFINITY, 0.0);
        clamp_speeds(&mut right, 0.0, f64::INFINITY);
        let joint = (hat != check).then(|| Wave::nonclassical(hat, check));
        let solution = SelfSimilarSolution::concat(&[&left, &right], &[joint])?;
        self.finish(case, rho_l, rho_r, solution, Some(p_bar))
    }

    fn finish(
        &self,
        case: RiemannCase,
        rho_l: f64,
        rho_r: f64,
        solution: SelfSimilarSolution,
        p_bar: Option<f64>,
    ) -> Result<ConstrainedSolution> {
        let mut sol = ConstrainedSolution {
            case,
            solution,
            p_bar,
            rho_l,
            rho_r,
            horizon: f64::INFINITY,
        };
        sol.horizon = self.validity_horizon(&sol);
        Ok(sol)
    }

    /// Time up to which `p(xi(t))` stays on the level the solution relies on.
    ///
    /// Away from jumps this is the distance from `rho_l` to the nearest jump
    /// divided by the bound on `|xi'|`. When `rho_l` sits on a jump, the
    /// direction in which the left part moves `xi` selects the constancy
    /// interval; a left part that keeps `xi = rho_l` while the exit flux
    /// exceeds `p(rho_l+)` can be abandoned at once and gets horizon `0`.
    /// Infinite when no jump can be reached.
    pub fn validity_horizon(&self, sol: &ConstrainedSolution) -> f64 {
        let rate = xi_rate_bound(&self.flux, &self.weight);
        let p = &self.constraint;
        let rho_l = sol.rho_l;
        let distance = match p.jump_near(rho_l, CLASSIFY_TOL) {
            None => p.distance_to_nearest_jump(rho_l, CLASSIFY_TOL),
            Some(i) => {
                let (upstream, _) = sol.traces(&self.flux);
                let jumps = p.jumps();
                if upstream > rho_l + CLASSIFY_TOL {
                    jumps.get(i + 1).map(|j| j - rho_l)
                } else if upstream < rho_l - CLASSIFY_TOL {
                    i.checked_sub(1).map(|k| rho_l - jumps[k])
                } else {
                    let (_, pp) = p.one_sided(rho_l, CLASSIFY_TOL);
                    if le(sol.exit_flux(&self.flux), pp) {
                        p.distance_to_nearest_jump(rho_l, CLASSIFY_TOL)
                    } else {
                        Some(0.0)
                    }
                }
            }
        };
        match distance {
            Some(d) if rate > 0.0 => d / rate,
            Some(_) => f64::INFINITY,
            None => f64::INFINITY,
        }
    }

    /// Checks the selection predicates `np1`–`np4`; classical input passes
    /// vacuously.
    pub fn check_np_properties(&self, sol: &ConstrainedSolution) -> Result<NpReport> {
        let Some(p_bar) = sol.p_bar else {
            return Ok(NpReport {
                np1: Check::Vacuous,
                np2: Check::Vacuous,
                np3: Check::Vacuous,
                np4: Check::Vacuous,
            });
        };
        let rho_l = sol.rho_l;
        let d = self.datum(rho_l, sol.rho_r)?;
        let hat = self.flux.rho_hat(p_bar)?;
        let left_constant = (hat - rho_l).abs() <= CLASSIFY_TOL;
        let bar_is_fl = eq(p_bar, d.fl);
        Ok(NpReport {
            np1: Check::implication(
                left_constant,
                bar_is_fl && ge(p_bar, d.pp) && le(p_bar, d.pm),
            ),
            np2: Check::implication(!bar_is_fl && rho_l < hat - CLASSIFY_TOL, eq(p_bar, d.pp)),
            np3: Check::implication(!bar_is_fl && hat < rho_l - CLASSIFY_TOL, eq(p_bar, d.pm)),
            np4: Check::implication(!d.jump, eq(p_bar, d.pp)),
        })
    }
}

fn clamp_speeds(sol: &mut SelfSimilarSolution, lo: f64, hi: f64) {
    // tolerance-level crossings of x = 0 are pinned to it
    let waves: Vec<Wave> = sol
        .waves()
        .iter()
        .map(|w| Wave {
            speed_lo: w.speed_lo.clamp(lo, hi),
            speed_hi: w.speed_hi.clamp(lo, hi),
            ..*w
        })
        .collect();
    debug_assert!(waves.iter().all(|w| w.kind != WaveKind::NonclassicalShock));
    *sol = SelfSimilarSolution::from_waves(sol.left_state(), waves).expect("clamping keeps order");
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn capacity_drop() -> ConstrainedProblem {
        let f = FluxModel::quadratic();
        let p = PiecewiseConstraint::new(vec![0.8], vec![0.1875, 0.05], &f).unwrap();
        ConstrainedProblem::new(f, p, WeightKernel::affine(1.0).unwrap())
    }

    fn slack(level: f64) -> ConstrainedProblem {
        let f = FluxModel::quadratic();
        let p = PiecewiseConstraint::constant(level, &f).unwrap();
        ConstrainedProblem::new(f, p, WeightKernel::affine(1.0).unwrap())
    }

    #[test]
    fn classify_capacity_drop_examples() {
        let pb = capacity_drop();
        assert_eq!(pb.classify(0.8015, 0.5).unwrap(), RiemannCase::N4b);
        assert_eq!(pb.classify(0.7984, 0.5).unwrap(), RiemannCase::N4a);
        assert_eq!(pb.classify(0.8, 0.5).unwrap(), RiemannCase::NNN4);
        assert_eq!(pb.classify(0.1, 0.2).unwrap(), RiemannCase::C2);
    }

    #[test]
    fn solve_q_on_jump() {
        let pb = capacity_drop();
        let f = &pb.flux;
        let s = pb.solve_q(0.8, 0.5).unwrap();
        assert_eq!(s.p_bar, Some(0.1875));
        let w = s.solution.waves();
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].kind, WaveKind::Rarefaction);
        assert_abs_diff_eq!(w[0].speed_lo, -0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(w[0].speed_hi, -0.5, epsilon = 1e-12);
        assert_eq!(w[1].kind, WaveKind::NonclassicalShock);
        assert_abs_diff_eq!(w[1].left, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1].right, 0.25, epsilon = 1e-12);
        assert_eq!(w[2].kind, WaveKind::Shock);
        assert_abs_diff_eq!(w[2].speed_lo, 0.25, epsilon = 1e-12);
        assert_eq!(s.exit_flux(f), 0.1875);
    }

    #[test]
    fn solve_p_on_jump() {
        let pb = capacity_drop();
        let f = &pb.flux;
        let s = pb.solve_p(0.8, 0.5).unwrap();
        assert_eq!(s.p_bar, Some(0.05));
        let w = s.solution.waves();
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].kind, WaveKind::Shock);
        assert_abs_diff_eq!(w[0].speed_lo, -0.7472136, epsilon = 1e-6);
        assert_abs_diff_eq!(w[1].left, 0.9472136, epsilon = 1e-6);
        assert_abs_diff_eq!(w[1].right, 0.0527864, epsilon = 1e-6);
        assert_abs_diff_eq!(w[2].speed_lo, 0.4472136, epsilon = 1e-6);
        assert!(s.exit_flux(f) < pb.solve_q(0.8, 0.5).unwrap().exit_flux(f));
    }

    #[test]
    fn slack_constraint_is_classical() {
        let pb = slack(0.25);
        let s = pb.solve_q(0.25, 0.5).unwrap();
        assert!(s.is_classical());
        assert_eq!(s.case, RiemannCase::C2);
        assert_eq!(s.solution.waves().len(), 1);
        let s = pb.solve_q(0.5, 0.5).unwrap();
        assert!(s.is_classical() && s.solution.is_constant());
    }

    #[test]
    fn enumerate_nnn4() {
        let pb = capacity_drop();
        let all = pb.enumerate_solutions(0.8, 0.5).unwrap();
        let levels: Vec<f64> = all.iter().map(|s| s.p_bar.unwrap()).collect();
        assert_eq!(levels.len(), 3);
        assert_abs_diff_eq!(levels[0], 0.1875);
        assert_abs_diff_eq!(levels[1], 0.16, epsilon = 1e-15);
        assert_abs_diff_eq!(levels[2], 0.05);
        assert_eq!(pb.enumerate_solutions(0.1, 0.2).unwrap().len(), 1);
    }

    #[test]
    fn enumerate_cn3() {
        let f = FluxModel::quadratic();
        let p = PiecewiseConstraint::new(vec![0.3], vec![0.25, 0.1], &f).unwrap();
        let pb = ConstrainedProblem::new(f, p, WeightKernel::affine(1.0).unwrap());
        assert_eq!(pb.classify(0.3, 0.2).unwrap(), RiemannCase::CN3);
        let all = pb.enumerate_solutions(0.3, 0.2).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all[0].is_classical());
        assert_eq!(all[1].p_bar, Some(0.1));
    }

    #[test]
    fn horizons() {
        let pb = capacity_drop();
        let s = pb.solve_q(0.7984, 0.5).unwrap();
        assert_abs_diff_eq!(s.horizon, 0.0016, epsilon = 1e-12);
        let s = slack(0.2).solve_q(0.6, 0.5).unwrap();
        assert!(s.horizon.is_infinite());
        // the solution that keeps the upstream average on the jump
        let middle = &pb.enumerate_solutions(0.8, 0.5).unwrap()[1];
        assert_eq!(middle.horizon, 0.0);
        // the extreme ones move the average away from the jump and never return
        assert!(pb.solve_q(0.8, 0.5).unwrap().horizon.is_infinite());
        assert!(pb.solve_p(0.8, 0.5).unwrap().horizon.is_infinite());
    }

    #[test]
    fn np_properties() {
        let pb = capacity_drop();
        let s = pb.solve_q(0.8015, 0.5).unwrap();
        let r = pb.check_np_properties(&s).unwrap();
        assert!(r.all_ok());
        assert_eq!(r.np2, Check::Pass);
        let s = pb.solve_p(0.8, 0.5).unwrap();
        let r = pb.check_np_properties(&s).unwrap();
        assert_eq!(r.np2, Check::Pass);
        assert!(r.all_ok());
        let s = pb.solve_q(0.1, 0.2).unwrap();
        let r = pb.check_np_properties(&s).unwrap();
        assert_eq!(r.np1, Check::Vacuous);
        assert!(r.all_ok());
    }

    #[test]
    fn evacuation_bounds() {
        let pb = capacity_drop();
        assert_eq!(pb.evacuation_flux_bounds(0.8, 0.5).unwrap(), (0.1875, 0.05));
        let (a, b) = pb.evacuation_flux_bounds(0.1, 0.2).unwrap();
        assert_eq!(a, b);
        let s = slack(0.25);
        let (a, b) = s.evacuation_flux_bounds(0.7, 0.3).unwrap();
        assert_abs_diff_eq!(a, 0.25);
        assert_abs_diff_eq!(b, 0.25);
    }
}
