//! LWR traffic flow with a point constraint whose capacity depends on a
//! weighted average of the upstream density.
//!
//! The crate covers exact Riemann solvers (classical and constrained), a
//! Godunov finite volume scheme for the constrained Cauchy problem, and the
//! analysis tools used to compare the two extreme constrained solvers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod classical;
pub mod commands;
pub mod config;
pub mod constrained;
pub mod constraint;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod flux;
pub mod fvm;
pub mod quadrature;
pub mod report;

pub use analysis::{
    calibrate_rate, exponential_bound, l1_distance_cells, l1_error_away_from_waves, l1_distance_exact, l1_error_vs_exact,
    linear_bound, loglog_slope, BoundParams, CellProfile, LinearBound, PowerFit, TwoSolverSetup,
};
pub use classical::{solve_classical, SelfSimilarSolution, Wave, WaveKind};
pub use config::{Override, RunConfig};
pub use constrained::{
    Check, ConstrainedProblem, ConstrainedSolution, NpReport, RiemannCase, CLASSIFY_TOL,
};
pub use constraint::{xi_rate_bound, Branch, PiecewiseConstraint, WeightKernel};
pub use entropy::{check_entropy, EntropyProbe, EntropyReport, Tent};
pub use error::{Error, Result};
pub use experiments::{capacity_sweep, run_pair, CapacityDrop, PairedRuns, SweepPoint, SweepReport};
pub use flux::{FluxBuilder, FluxModel};
pub use fvm::{
    constrained_flux, godunov_flux, Capacity, ExogenousCapacity, Grid, GridState, Scheme, StepRecord,
    Trajectory,
};
