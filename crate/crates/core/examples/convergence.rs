//! Grid refinement against exact constrained Riemann solutions.

use clwr::{
    l1_error_vs_exact, loglog_slope, Branch, Capacity, ConstrainedProblem, FluxModel, Grid,
    PiecewiseConstraint, Scheme, WeightKernel,
};

fn main() -> clwr::Result<()> {
    let flux = FluxModel::quadratic();
    let weight = WeightKernel::affine(1.0)?;
    let p = PiecewiseConstraint::new(vec![0.8], vec![0.1875, 0.05], &flux)?;
    let problem = ConstrainedProblem::new(flux.clone(), p.clone(), weight.clone());
    let t = 0.4;

    for (rho_l, rho_r) in [(0.4, 0.3), (0.1, 0.8), (0.6, 0.2), (0.95, 0.4)] {
        let exact = problem.solve_q(rho_l, rho_r)?;
        let mut errors = Vec::new();
        for dx in [0.02, 0.01, 0.005, 0.0025] {
            let grid = Grid::new(-2.0, 2.0, dx, dx / 10.0, &flux)?;
            let cap = Capacity::NonLocal { p: p.clone(), branch: Branch::Plus };
            let scheme = Scheme::new(flux.clone(), grid, weight.clone(), cap)?;
            let traj = scheme.run(grid.riemann_cells(rho_l, rho_r), &[t], false)?;
            errors.push((dx, l1_error_vs_exact(&grid, &traj.last().cells, &flux, &exact.solution, t)));
        }
        let fit = loglog_slope(&errors)?;
        let shown: Vec<String> = errors.iter().map(|(_, e)| format!("{e:.2e}")).collect();
        println!("({rho_l}, {rho_r}) {:<4} errors {}  order {:.2}", exact.case, shown.join(" "), fit.slope);
    }
    Ok(())
}
