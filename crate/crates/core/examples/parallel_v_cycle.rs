//! V-cycle ERK1+U1 at several thread counts: wall-clock time changes,
//! the residual history does not.
//!
//! cargo run --release --example parallel_v_cycle

use advect_mgrit::experiments::config::DiscretizationSection;
use advect_mgrit::experiments::{run_solve, ExperimentConfig};
use advect_mgrit::mgrit::Cycle;
use advect_mgrit::stepping::Family;

fn main() -> advect_mgrit::error::Result<()> {
    let mut config = ExperimentConfig::default();
    config.discretization = DiscretizationSection {
        family: Family::Erk,
        p: 1,
        c: None,
        c_fraction: Some(0.5),
    };
    config.grid.n_x = 1024;
    config.grid.n_t = 4096;
    let c = config.resolve_c()?;
    let mut reference = None;
    for threads in [1, 2, 4, 8] {
        let report = run_solve(&config, c, 4, Cycle::V, threads)?;
        let same = reference.get_or_insert_with(|| report.residual_norms.clone()) == &report.residual_norms;
        println!(
            "threads={threads}: {} iterations, {:.3} s, history identical = {same}",
            report.iterations, report.wall_seconds
        );
    }
    Ok(())
}
