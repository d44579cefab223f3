//! F-relaxation against FCF-relaxation: LFA and measured factors.
//!
//! cargo run --release --example f_versus_fcf

use advect_mgrit::experiments::{lfa_point, measured_rho, run_solve, ExperimentConfig};

fn main() -> advect_mgrit::error::Result<()> {
    let mut config = ExperimentConfig::default();
    config.grid.n_x = 256;
    config.grid.n_t = 1024;
    for nu in [0, 1] {
        config.mgrit.nu = nu;
        for m in [4, 16] {
            let lfa = lfa_point(&config, 5.0, m)?;
            let report = run_solve(&config, 5.0, m, config.mgrit.cycle, 0)?;
            println!(
                "nu={nu} m={m:>2}: rho_lfa={:.4} measured={:.4} iterations={}",
                lfa.rho,
                measured_rho(&report),
                report.iterations
            );
        }
    }
    Ok(())
}
