//! Two-level and V-cycle iteration counts for ERK3+U3 and SDIRK3+U3.
//!
//! cargo run --release --example iteration_table [full]
//!
//! Without `full` only the smallest grid is run.

use advect_mgrit::experiments::config::DiscretizationSection;
use advect_mgrit::experiments::{cmd_iters, ExperimentConfig, DEFAULT_TABLE_GRIDS};
use advect_mgrit::stepping::Family;

fn main() -> advect_mgrit::error::Result<()> {
    let full = std::env::args().nth(1).as_deref() == Some("full");
    for (family, c, c_fraction) in [(Family::Erk, None, Some(0.85)), (Family::Sdirk, Some(5.0), None)] {
        let mut config = ExperimentConfig::default();
        config.discretization = DiscretizationSection { family, p: 3, c, c_fraction };
        config.grid.table = if full { DEFAULT_TABLE_GRIDS.to_vec() } else { vec![DEFAULT_TABLE_GRIDS[0]] };
        config.mgrit.max_iters = 40;
        let table = cmd_iters(&config)?;
        println!("{family:?}3+U3");
        println!("{}", table.header.join(" "));
        for row in &table.rows {
            println!("{}", row.join(" "));
        }
    }
    Ok(())
}
