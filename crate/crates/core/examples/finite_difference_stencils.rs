//! Finite-difference weights on arbitrary offsets, the upwind stencils and
//! their observed orders on a smooth profile.
//!
//! cargo run --release --example finite_difference_stencils

use advect_mgrit::experiments::validation::fd_checks;
use advect_mgrit::stencils::{fd_weights, StencilWindow};

fn main() -> advect_mgrit::error::Result<()> {
    println!("d/dx on (-1, 0, 1) at 0: {:?}", fd_weights(1, &[-1, 0, 1], 0.0)?);
    for p in 1..=5 {
        let w = StencilWindow::upwind(p);
        let weights = fd_weights(1, &w.offsets(), 0.0)?;
        println!("U{p}: offsets {:?}", w.offsets());
        println!("    weights {weights:.5?}");
        for row in fd_checks(p)? {
            println!("    {:<12} {:.4} (expected {})", row.check, row.measured, row.expected);
        }
    }
    Ok(())
}
