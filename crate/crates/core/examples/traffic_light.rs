//! A light at x = 0 with capacity 0.25 while green and 0 while red. Prints
//! the queue length behind the light at a few times.

use clwr::{Capacity, ExogenousCapacity, FluxModel, Grid, Scheme, WeightKernel};

fn main() -> clwr::Result<()> {
    let flux = FluxModel::quadratic();
    let grid = Grid::new(-5.0, 5.0, 0.02, 0.005, &flux)?;
    let light = ExogenousCapacity::traffic_light(0.25, 1.0, 2.0)?;
    let scheme = Scheme::new(flux, grid, WeightKernel::affine(1.0)?, Capacity::Exogenous(light))?;

    let times: Vec<f64> = (1..=12).map(|i| 0.5 * i as f64).collect();
    let traj = scheme.run(grid.riemann_cells(0.3, 0.3), &times, false)?;
    println!("{:>5} {:>6} {:>8} {:>8}", "t", "q", "queue", "exit");
    for snap in &traj.snapshots[1..] {
        // queue: cells upstream of the light denser than the inflow
        let queue = snap.cells[..grid.interface].iter().filter(|&&v| v > 0.31).count() as f64 * grid.dx;
        let exit = snap.cells[grid.interface];
        println!("{:>5.2} {:>6.3} {:>8.3} {:>8.4}", snap.t, snap.q_current, queue, exit);
    }
    Ok(())
}
