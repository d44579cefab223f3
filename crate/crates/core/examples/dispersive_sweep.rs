//! SDIRK2+U2 with the corrected coarse grid: factors above one and jumps as
//! the coarse semi-Lagrangian stencil re-centres.
//!
//! cargo run --release --example dispersive_sweep

use advect_mgrit::experiments::{sweep_rows, ExperimentConfig};

fn main() -> advect_mgrit::error::Result<()> {
    let mut config = ExperimentConfig::default();
    config.discretization.p = 2;
    config.mgrit.m = vec![4];
    config.sweep.stop = 4.0;
    config.sweep.points = 256;
    let rows = sweep_rows(&config, false)?;
    for pair in rows.windows(2) {
        let jump = pair[1].lfa.rho - pair[0].lfa.rho;
        if jump.abs() > 0.2 {
            println!(
                "jump {jump:+.3} between mc = {:.4} and {:.4}",
                4.0 * pair[0].c,
                4.0 * pair[1].c
            );
        }
    }
    if let Some(first) = rows.iter().find(|r| r.lfa.rho > 1.0) {
        println!("first factor above one: rho = {:.3} at c = {:.4}", first.lfa.rho, first.c);
    }
    Ok(())
}
