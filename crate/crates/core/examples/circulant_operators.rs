//! Periodic stencils as circulant operators: application, symbols and the
//! two solvers used for implicit corrections.
//!
//! cargo run --release --example circulant_operators

use advect_mgrit::circulant::CirculantOperator;
use advect_mgrit::stencils::high_derivative_operator;
use advect_mgrit::stencils::Bias;

fn main() -> advect_mgrit::error::Result<()> {
    let n = 256;
    let shift = CirculantOperator::shift(n, -1)?;
    let v: Vec<f64> = (0..n).map(|i| i as f64).collect();
    println!("shift: v[0..4] -> {:?}", &shift.apply(&v)?[..4]);

    // I + phi D with a centred fourth-derivative stencil (symbol in [1, 1 + 16 phi]).
    let d = high_derivative_operator(4, 2, Bias::Symmetric, n)?;
    let a = CirculantOperator::identity(n).add(&d.scale(0.05))?;
    let (smallest, omega) = a.min_admissible_symbol();
    println!("min |symbol| = {smallest:.4} at omega = {omega:.4}");

    let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
    let direct = a.solve_direct(&b)?;
    let gmres = a.solve_gmres(&b, 1e-10, 50)?;
    let diff = direct
        .iter()
        .zip(&gmres.solution)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    println!(
        "GMRES: {} iterations, residual {:.2e}, max diff to FFT solve {diff:.2e}",
        gmres.iterations, gmres.relative_residual
    );
    Ok(())
}
