//! Entropy functional on the run that settles on the stationary undercompressive
//! shock at x = 0. The shock only passes once the boundary term is included.

use clwr::{check_entropy, CapacityDrop, EntropyProbe};

fn main() -> clwr::Result<()> {
    let setup = CapacityDrop::default();
    let scheme = setup.scheme()?;
    let traj = scheme.run(scheme.grid.riemann_cells(setup.rho_l_above, setup.rho_r), &[setup.t_end], true)?;
    let probe = EntropyProbe::regular(&scheme.flux, 19, setup.t_end, 4, -2.0, 2.0, 0.25);
    for with_term in [true, false] {
        let r = check_entropy(&traj, &scheme.flux, &probe, with_term)?;
        println!(
            "boundary term {with_term:<5}: min residual {:+.5} at k = {:.3}, x in [{:.2}, {:.2}]",
            r.min_residual, r.k, r.space_tent.lo, r.space_tent.hi
        );
    }
    println!("tolerance 10 dx = {}", 10.0 * scheme.grid.dx);
    Ok(())
}
