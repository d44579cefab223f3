//! Two-level convergence factors for SDIRK1+U1 with a rediscretized coarse
//! grid, against the characteristic-component estimate.
//!
//! cargo run --release --example rediscretized_sweep [out.csv]

use advect_mgrit::experiments::{cmd_sweep, CoarseKind, ExperimentConfig};
use advect_mgrit::stepping::Family;

fn main() -> advect_mgrit::error::Result<()> {
    let mut config = ExperimentConfig::default();
    config.discretization.family = Family::Sdirk;
    config.discretization.p = 1;
    config.discretization.c = Some(1.0);
    config.coarse.kind = CoarseKind::Rediscretized;
    config.sweep.stop = 10.0;
    config.sweep.points = 64;
    let table = cmd_sweep(&config, false)?;
    match std::env::args().nth(1) {
        Some(path) => table.write_to(std::fs::File::create(path).expect("writable path"))?,
        None => {
            let (c, m, rho, check) = (
                table.values("c"),
                table.values("m"),
                table.values("rho_lfa"),
                table.values("rho_check"),
            );
            for i in (0..c.len()).step_by(16) {
                println!("c={} m={} rho={} check={}", c[i], m[i], rho[i], check[i]);
            }
        }
    }
    Ok(())
}
