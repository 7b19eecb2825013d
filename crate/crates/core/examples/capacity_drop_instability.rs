//! Two initial states 0.0031 apart on either side of the capacity jump end
//! up with very different queues.

use clwr::CapacityDrop;

fn main() -> clwr::Result<()> {
    let setup = CapacityDrop::default();
    let start = std::time::Instant::now();
    let runs = setup.paired_runs(10, false)?;
    let elapsed = start.elapsed();

    println!("{:>5} {:>10}", "t", "distance");
    for (t, d) in &runs.distances {
        println!("{t:>5.2} {d:>10.5}");
    }
    for (name, traj) in [("above", &runs.first), ("below", &runs.second)] {
        println!(
            "{name}: mean exit flux after t = 0.5 is {:.4}, final xi {:.4}",
            traj.mean_exit_flux_after(0.5),
            traj.last().xi_current
        );
    }
    println!("{} steps each, {elapsed:.2?}", runs.first.steps.len());
    Ok(())
}
