//! ERK3+U3 with the corrected semi-Lagrangian coarse grid: LFA over
//! `c / c_max` with a few measured two-level runs.
//!
//! cargo run --release --example modified_sweep

use advect_mgrit::experiments::config::DiscretizationSection;
use advect_mgrit::experiments::{measured_rho, sweep_rows, ExperimentConfig};
use advect_mgrit::stepping::Family;

fn main() -> advect_mgrit::error::Result<()> {
    let mut config = ExperimentConfig::default();
    config.discretization = DiscretizationSection {
        family: Family::Erk,
        p: 3,
        c: None,
        c_fraction: Some(0.5),
    };
    config.mgrit.m = vec![2, 16];
    config.sweep.stop = 1.0;
    config.sweep.points = 8;
    config.grid.n_x = 256;
    config.grid.n_t = 1024;
    for row in sweep_rows(&config, true)? {
        let measured = row.measured.as_ref().map(measured_rho).unwrap_or(f64::NAN);
        println!(
            "c/c_max={:.3} m={:>2} rho_lfa={:.4} measured={:.4}",
            row.c_fraction.unwrap_or(row.c),
            row.m,
            row.lfa.rho,
            measured
        );
    }
    Ok(())
}
