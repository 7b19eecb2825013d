use clwr::{capacity_sweep, CapacityDrop};

fn main() -> clwr::Result<()> {
    let base = CapacityDrop::default();
    let p_los = [0.05, 0.075, 0.1, 0.125, 0.15];
    let report = capacity_sweep(&base, &p_los, 10, 0)?;
    println!(
        "{:>8} {:>8} {:>12} {:>12} {:>12} {:>8}",
        "p2", "gap", "distance", "linear", "exponential", "N"
    );
    for p in &report.points {
        println!(
            "{:>8.4} {:>8.4} {:>12.6} {:>12.6} {:>12.6} {:>8.4}",
            p.p2, p.gap, p.l1_distance, p.bound_linear, p.bound_exponential, p.rate
        );
    }
    println!(
        "slope {:.4}  intercept {:.4}  rms residual {:.2e}",
        report.fit.slope, report.fit.intercept, report.fit.residual
    );
    Ok(())
}
