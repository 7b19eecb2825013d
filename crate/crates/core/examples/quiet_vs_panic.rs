//! At the jump itself the capacity is two-valued. The `minus` branch keeps
//! the upper level (drivers stay calm), `plus` takes the lower one. Both
//! runs are compared with the exact extreme Riemann solutions.

use clwr::{
    l1_distance_cells, l1_distance_exact, l1_error_vs_exact, Branch, CapacityDrop, CellProfile,
    ConstrainedProblem, PiecewiseConstraint,
};

fn main() -> clwr::Result<()> {
    let t = 1.0;
    let base = CapacityDrop::default();
    let p = PiecewiseConstraint::new(vec![base.jump], vec![base.p_hi, base.p_lo], &base.flux)?;
    let problem = ConstrainedProblem::new(base.flux.clone(), p, base.weight.clone());
    let exact_q = problem.solve_q(0.8, 0.5)?;
    let exact_p = problem.solve_p(0.8, 0.5)?;

    let mut finals = Vec::new();
    for (branch, exact) in [(Branch::Minus, &exact_q), (Branch::Plus, &exact_p)] {
        let scheme = CapacityDrop { branch, ..base.clone() }.scheme()?;
        let traj = scheme.run(scheme.grid.riemann_cells(0.8, 0.5), &[t], false)?;
        let cells = traj.last().cells.clone();
        println!(
            "{branch:?}: mean exit flux {:.4}, L1 error vs exact {:.4}",
            traj.mean_exit_flux_after(0.0),
            l1_error_vs_exact(&scheme.grid, &cells, &scheme.flux, &exact.solution, t)
        );
        finals.push((scheme.grid, cells));
    }
    let numeric = l1_distance_cells(
        CellProfile::new(&finals[0].0, &finals[0].1),
        CellProfile::new(&finals[1].0, &finals[1].1),
    );
    let exact = l1_distance_exact(&base.flux, &exact_q.solution, &exact_p.solution, t, -5.0, 5.0)?;
    println!("distance at t = {t}: scheme {numeric:.4}, exact {exact:.4}");
    Ok(())
}
