//! Classifies a handful of Riemann data against the two-level capacity and
//! prints the extreme constrained solutions.

use clwr::{ConstrainedProblem, FluxModel, PiecewiseConstraint, WeightKernel};

fn main() -> clwr::Result<()> {
    let flux = FluxModel::quadratic();
    let p = PiecewiseConstraint::new(vec![0.8], vec![0.1875, 0.05], &flux)?;
    let problem = ConstrainedProblem::new(flux.clone(), p, WeightKernel::affine(1.0)?);

    let data = [(0.2, 0.2), (0.3, 0.9), (0.6, 0.5), (0.7984, 0.5), (0.8015, 0.5), (0.9, 0.1), (0.8, 0.5)];
    for (rho_l, rho_r) in data {
        let case = problem.classify(rho_l, rho_r)?;
        let q = problem.solve_q(rho_l, rho_r)?;
        let p = problem.solve_p(rho_l, rho_r)?;
        println!(
            "({rho_l:<6}, {rho_r:<4}) {case:<5} exit flux q {:.4} p {:.4}  horizon {:.4}",
            q.exit_flux(&flux),
            p.exit_flux(&flux),
            problem.validity_horizon(&q)
        );
        for w in q.solution.waves() {
            println!(
                "    {:<13} {:.6} -> {:.6}  speeds [{:+.4}, {:+.4}]",
                w.kind.as_str(),
                w.left,
                w.right,
                w.speed_lo,
                w.speed_hi
            );
        }
    }

    println!("\nall admissible solutions at the jump:");
    for s in problem.enumerate_solutions(0.8, 0.5)? {
        let np = problem.check_np_properties(&s)?;
        println!(
            "  p_bar {:?}  exit flux {:.4}  traces {:?}  selection ok {}",
            s.p_bar,
            s.exit_flux(&flux),
            s.traces(&flux),
            np.all_ok()
        );
    }
    Ok(())
}
