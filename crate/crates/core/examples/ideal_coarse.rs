//! With the ideal coarse operator `Phi^m` MGRIT is exact after one iteration.
//!
//! cargo run --release --example ideal_coarse

use advect_mgrit::experiments::{run_solve, CoarseKind, ExperimentConfig};
use advect_mgrit::mgrit::Cycle;

fn main() -> advect_mgrit::error::Result<()> {
    let mut config = ExperimentConfig::default();
    config.coarse.kind = CoarseKind::Ideal;
    config.grid.n_x = 128;
    config.grid.n_t = 512;
    for m in [2, 4, 8, 16] {
        for cycle in [Cycle::TwoLevel, Cycle::V] {
            let report = run_solve(&config, 5.0, m, cycle, 0)?;
            println!("m={m:>2} {cycle:?}: {} iteration(s)", report.iterations);
        }
    }
    Ok(())
}
