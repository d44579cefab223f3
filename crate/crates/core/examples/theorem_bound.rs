//! Lower bound on the two-level factor for rediscretized SDIRK coarse grids.
//!
//! cargo run --release --example theorem_bound

use advect_mgrit::lfa::verify_lower_bound;

fn main() -> advect_mgrit::error::Result<()> {
    let c_grid: Vec<f64> = (0..16).map(|i| 0.02 * (500.0f64).powf(i as f64 / 15.0)).collect();
    for p in [1, 3] {
        for m in [2, 16] {
            let report = verify_lower_bound(p, m, 1, &c_grid, 2048, 0.05)?;
            println!(
                "p={p} m={m:>2}: bound holds = {}, tightness = {:.3}",
                report.all_hold, report.tightness
            );
            for pt in report.points.iter().step_by(5) {
                println!("    c={:.3} rho={:.4} check={:.4}", pt.c, pt.rho, pt.rho_check);
            }
        }
    }
    Ok(())
}
