//! Builds a non-symmetric flux from a closure and from a table, and solves
//! the same constrained datum with each.

use clwr::{ConstrainedProblem, FluxBuilder, FluxModel, PiecewiseConstraint, WeightKernel};

fn main() -> clwr::Result<()> {
    // f(rho) = rho (1 - rho^2) on [0, 1], maximal at 1/sqrt(3)
    let skewed = FluxBuilder::new(1.0, |r| r * (1.0 - r * r))
        .derivative(|r| 1.0 - 3.0 * r * r)
        .label("skewed")
        .build()?;
    let rho: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let flows: Vec<f64> = rho.iter().map(|r| 1.5 * r * (1.0 - r)).collect();
    let table = FluxModel::tabulated(&rho, &flows)?;

    for flux in [skewed, table] {
        let cap = 0.6 * flux.max_flow();
        let p = PiecewiseConstraint::new(vec![0.7], vec![cap, 0.5 * cap], &flux)?;
        let problem = ConstrainedProblem::new(flux.clone(), p, WeightKernel::affine(1.0)?);
        let sol = problem.solve_q(0.5, 0.2)?;
        println!(
            "{}: critical density {:.4}, max flow {:.4}, case {}, exit flux {:.4}, traces {:?}",
            flux.label(),
            flux.critical_density(),
            flux.max_flow(),
            sol.case,
            sol.exit_flux(&flux),
            sol.traces(&flux)
        );
    }
    Ok(())
}
