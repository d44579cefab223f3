//! One two-level MGRIT solve built by hand: fine SDIRK3+U3, corrected
//! semi-Lagrangian coarse grid, residual history.
//!
//! cargo run --release --example single_solve

use advect_mgrit::mgrit::{sequential_solve, solve, MgritConfig, MgritHierarchy, TimeGridProblem};
use advect_mgrit::stepping::{
    fine_stepper, modified_coarse_stepper, ButcherTableau, CorrectionSolver, DiscretizationSpec, Family, StepMode,
};

fn main() -> advect_mgrit::error::Result<()> {
    let (n_x, n_t, m) = (256, 1024, 8);
    let spec = DiscretizationSpec::new(Family::Sdirk, 3, 5.0, n_x, n_t);
    let tab = ButcherTableau::sdirk(3)?;
    let fine = fine_stepper(&spec, StepMode::Assembled)?;
    let coarse = modified_coarse_stepper(&spec, &tab, &[m], CorrectionSolver::Direct)?;
    let problem = TimeGridProblem::new(MgritHierarchy::new(vec![fine, coarse], vec![m], n_t)?);
    let (report, u) = solve(&problem, &MgritConfig::default())?;
    for (k, r) in report.residual_norms.iter().enumerate() {
        println!("{k:>3} {r:.3e}");
    }
    let exact = sequential_solve(&problem)?;
    println!(
        "converged = {} after {} iterations, rho = {:.3}, |u - u_seq| / |u_seq| = {:.2e}",
        report.converged,
        report.iterations,
        report.effective_rho,
        u.distance(&exact) / exact.norm()
    );
    Ok(())
}
