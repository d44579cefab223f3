//! Leading error constants of the upwind stencils and Runge-Kutta methods,
//! and the stability limits of the explicit schemes.
//!
//! cargo run --release --example error_constants

use advect_mgrit::stencils::error_constant_fd;
use advect_mgrit::stepping::{cfl_limit, ButcherTableau};

fn main() -> advect_mgrit::error::Result<()> {
    println!("{:>3} {:>12} {:>12} {:>12} {:>10}", "p", "e_FD", "e_ERK", "e_SDIRK", "c_max");
    for p in 1..=5 {
        let erk = ButcherTableau::erk(p)?;
        let sdirk = ButcherTableau::sdirk(p)?;
        println!(
            "{p:>3} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.5}",
            error_constant_fd(p),
            erk.error_constant()?,
            sdirk.error_constant()?,
            cfl_limit(p, &erk)?
        );
    }
    Ok(())
}
