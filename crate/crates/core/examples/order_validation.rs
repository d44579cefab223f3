//! Refinement studies for every shipped scheme and the corrected coarse grid.
//!
//! cargo run --release --example order_validation

use advect_mgrit::experiments::validation::validation_rows;

fn main() -> advect_mgrit::error::Result<()> {
    let rows = validation_rows()?;
    for r in &rows {
        println!(
            "{:<26} {:<26} {:>12.5} {:>8.3} {}",
            r.check,
            r.scheme,
            r.measured,
            r.expected,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    println!("{}/{} passed", rows.iter().filter(|r| r.pass).count(), rows.len());
    Ok(())
}
