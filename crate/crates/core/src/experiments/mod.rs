//! Experiment drivers behind the command-line tool: constants and CFL
//! tables, CFL sweeps of predicted and measured convergence factors,
//! iteration-count tables, refinement validation and single solves.

pub mod config;
pub mod table;
pub mod validation;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lfa::{rho_check, sweep_steppers, LfaSweep};
use crate::mgrit::{coarsening_depth, solve, Cycle, MgritConfig, MgritHierarchy, SolveReport, TimeGridProblem};
use crate::stencils::error_constant_fd;
use crate::stepping::{
    cfl_limit, fine_stepper, modified_coarse_stepper, rediscretized_coarse_stepper, sl_stepper, ButcherTableau,
    CorrectionSolver, DiscretizationSpec, Family, StepMode, Stepper,
};

pub use config::{CoarseKind, ExperimentConfig, SolverPolicy};
pub use table::{fmt_num, CsvTable};

/// Grids of the iteration-count table when the config lists none.
pub const DEFAULT_TABLE_GRIDS: [[usize; 2]; 3] = [[64, 256], [256, 1024], [1024, 4096]];

fn tableau(config: &ExperimentConfig) -> Result<ButcherTableau> {
    let p = config.discretization.p;
    match config.discretization.family {
        Family::Erk => ButcherTableau::erk(p),
        Family::Sdirk => ButcherTableau::sdirk(p),
        Family::SemiLagrangian => Err(Error::config("semi-Lagrangian fine grids have no tableau")),
    }
}

fn correction_solver(config: &ExperimentConfig, levels: usize) -> CorrectionSolver {
    let gmres = CorrectionSolver::Gmres {
        tol: config.coarse.gmres_tol,
        max_iters: config.gmres_max_iters(),
    };
    match config.coarse.solver {
        SolverPolicy::Direct => CorrectionSolver::Direct,
        SolverPolicy::Gmres => gmres,
        SolverPolicy::Auto => {
            if config.discretization.family == Family::Erk && levels > 1 {
                gmres
            } else {
                CorrectionSolver::Direct
            }
        }
    }
}

/// Coarse stepper reached after `level` coarsenings by `m`; `prev` is the
/// stepper one level up.
fn coarse_stepper(
    config: &ExperimentConfig,
    spec: &DiscretizationSpec,
    tab: &ButcherTableau,
    m: usize,
    level: usize,
    prev: &Stepper,
    solver: CorrectionSolver,
    mode: StepMode,
) -> Result<Stepper> {
    let multiplier = m.pow(level as u32);
    let stepper = match config.coarse.kind {
        CoarseKind::Modified => modified_coarse_stepper(spec, tab, &vec![m; level], solver)?,
        CoarseKind::Rediscretized => rediscretized_coarse_stepper(spec, multiplier, mode)?,
        CoarseKind::PlainSl => sl_stepper(spec.p, multiplier as f64 * spec.c, spec.n_x)?.stepper,
        CoarseKind::Ideal => Stepper::repeated(prev.clone(), m),
    };
    Ok(stepper.with_level(level))
}

/// Fine stepper plus one coarse stepper per level: a single coarse level for
/// the two-level cycle, full coarsening by `m` for the V-cycle.
pub fn build_hierarchy(config: &ExperimentConfig, c: f64, n_x: usize, n_t: usize, m: usize, cycle: Cycle) -> Result<MgritHierarchy> {
    let depth = match cycle {
        Cycle::TwoLevel => 1,
        Cycle::V => coarsening_depth(n_t, m),
    };
    if depth == 0 || n_t % m != 0 {
        return Err(Error::config(format!("{n_t} time steps cannot be coarsened by {m}")));
    }
    let spec = DiscretizationSpec::new(config.discretization.family, config.discretization.p, c, n_x, n_t);
    let tab = tableau(config)?;
    let solver = correction_solver(config, depth);
    let mut steppers = vec![fine_stepper(&spec, StepMode::Assembled)?];
    for level in 1..=depth {
        let prev = steppers.last().expect("fine level present");
        let next = coarse_stepper(config, &spec, &tab, m, level, prev, solver, StepMode::Assembled)?;
        steppers.push(next);
    }
    MgritHierarchy::new(steppers, vec![m; depth], n_t)
}

/// Two-level LFA at fine CFL `c` with coarsening `m`.
pub fn lfa_point(config: &ExperimentConfig, c: f64, m: usize) -> Result<LfaSweep> {
    let n = config.lfa.samples;
    let spec = DiscretizationSpec::new(config.discretization.family, config.discretization.p, c, n, m);
    let tab = tableau(config)?;
    let fine = fine_stepper(&spec, StepMode::Staged)?;
    let coarse = coarse_stepper(config, &spec, &tab, m, 1, &fine, CorrectionSolver::Direct, StepMode::Staged)?;
    sweep_steppers(&fine, &coarse, m, config.mgrit.nu, n, config.exclusions())
}

/// The characteristic-component estimate, defined for odd `p` with a
/// rediscretized implicit coarse grid.
pub fn rho_check_point(config: &ExperimentConfig, c: f64, m: usize) -> Result<Option<f64>> {
    let p = config.discretization.p;
    if config.coarse.kind != CoarseKind::Rediscretized || p % 2 == 0 {
        return Ok(None);
    }
    let e_rk = tableau(config)?.error_constant()?;
    rho_check(p, c, m, e_rk, e_rk, error_constant_fd(p)).map(Some)
}

/// Solve on the configured grid from the seeded random iterate.
pub fn run_solve(config: &ExperimentConfig, c: f64, m: usize, cycle: Cycle, threads: usize) -> Result<SolveReport> {
    let hierarchy = build_hierarchy(config, c, config.grid.n_x, config.grid.n_t, m, cycle)?;
    let problem = TimeGridProblem::new(hierarchy);
    let mgrit = MgritConfig {
        threads,
        ..config.mgrit_config(cycle)
    };
    Ok(solve(&problem, &mgrit)?.0)
}

/// Measured convergence factor: the residual reduction of the final
/// iteration, where the error is dominated by the slowest mode.
pub fn measured_rho(report: &SolveReport) -> f64 {
    report.effective_rho
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start {threads} worker threads: {e}")))
}

fn with_config_metadata(mut table: CsvTable, config: &ExperimentConfig) -> CsvTable {
    let mut lines = vec![String::from("config:")];
    lines.extend(config.to_toml_string().lines().map(str::to_string));
    table.metadata.splice(0..0, lines);
    table
}

/// Error constants of the upwind stencils and Runge-Kutta methods, and the
/// explicit CFL limits.
pub fn cmd_constants() -> Result<CsvTable> {
    let mut table = CsvTable::new(&["quantity", "order", "scheme", "value"]);
    for p in 1..=5 {
        table.push(vec!["e_fd".into(), p.to_string(), format!("U{p}"), fmt_num(error_constant_fd(p))]);
    }
    for q in 1..=5 {
        let tab = ButcherTableau::erk(q)?;
        table.push(vec!["e_rk".into(), q.to_string(), tab.name(), fmt_num(tab.error_constant()?)]);
    }
    for q in 1..=5 {
        let tab = ButcherTableau::sdirk(q)?;
        table.push(vec!["e_rk".into(), q.to_string(), tab.name(), fmt_num(tab.error_constant()?)]);
    }
    for p in 1..=5 {
        let limit = cfl_limit(p, &ButcherTableau::erk(p)?)?;
        table.push(vec!["c_max".into(), p.to_string(), format!("ERK{p}+U{p}"), fmt_num(limit)]);
    }
    Ok(table)
}

/// One sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    /// `c / c_max` for explicit schemes.
    pub c_fraction: Option<f64>,
    pub m: usize,
    pub lfa: LfaSweep,
    pub rho_check: Option<f64>,
    pub measured: Option<SolveReport>,
}

/// LFA (and optionally measured) convergence factors over the configured
/// CFL range for every configured `m`, ordered by `c` then `m`.
pub fn sweep_rows(config: &ExperimentConfig, measure: bool) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let scale = config.cfl_scale()?;
    let explicit = config.discretization.family == Family::Erk;
    let points: Vec<(f64, usize)> = config
        .sweep_values()
        .into_iter()
        .flat_map(|v| config.mgrit.m.iter().map(move |&m| (v, m)))
        .collect();
    let pool = thread_pool(config.output.threads)?;
    pool.install(|| {
        points
            .par_iter()
            .map(|&(v, m)| {
                let c = if explicit { v * scale } else { v };
                let measured = if measure {
                    Some(run_solve(config, c, m, config.mgrit.cycle, 1)?)
                } else {
                    None
                };
                Ok(SweepRow {
                    c,
                    c_fraction: explicit.then_some(v),
                    m,
                    lfa: lfa_point(config, c, m)?,
                    rho_check: rho_check_point(config, c, m)?,
                    measured,
                })
            })
            .collect()
    })
}

pub fn cmd_sweep(config: &ExperimentConfig, measure: bool) -> Result<CsvTable> {
    let rows = sweep_rows(config, measure)?;
    let mut table = CsvTable::new(&[
        "c",
        "c_over_c_max",
        "m",
        "nu",
        "rho_lfa",
        "argmax_omega",
        "rho_check",
        "rho_measured",
        "iterations",
        "lfa_divergent",
        "measured_divergent",
    ]);
    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
    for row in rows {
        let measured_rho_value = row.measured.as_ref().map(measured_rho);
        let measured_divergent = row
            .measured
            .as_ref()
            .map(|r| (!r.converged && measured_rho(r) >= 1.0).to_string())
            .unwrap_or_default();
        table.push(vec![
            fmt_num(row.c),
            opt(row.c_fraction),
            row.m.to_string(),
            config.mgrit.nu.to_string(),
            fmt_num(row.lfa.rho),
            fmt_num(row.lfa.argmax_omega),
            opt(row.rho_check),
            opt(measured_rho_value),
            row.measured.as_ref().map(|r| r.iterations.to_string()).unwrap_or_default(),
            (row.lfa.divergent || row.lfa.rho > 1.0).to_string(),
            measured_divergent,
        ]);
    }
    Ok(with_config_metadata(table, config))
}

/// Iteration count as a table cell: `">N"` when the run did not converge.
pub fn iteration_cell(report: &SolveReport) -> String {
    if report.converged {
        report.iterations.to_string()
    } else {
        format!(">{}", report.iterations)
    }
}

/// Two-level and V-cycle iteration counts per grid (rows) and `m` (columns).
pub fn cmd_iters(config: &ExperimentConfig) -> Result<CsvTable> {
    config.validate()?;
    let c = config.resolve_c()?;
    let grids: Vec<[usize; 2]> = if config.grid.table.is_empty() {
        DEFAULT_TABLE_GRIDS.to_vec()
    } else {
        config.grid.table.clone()
    };
    let mut header = vec![String::from("n_x"), String::from("n_t")];
    for m in &config.mgrit.m {
        header.push(format!("m{m}_two_level"));
        header.push(format!("m{m}_v_cycle"));
    }
    let mut table = CsvTable {
        header,
        ..CsvTable::default()
    };
    for [n_x, n_t] in grids {
        let mut grid_config = config.clone();
        grid_config.grid.n_x = n_x;
        grid_config.grid.n_t = n_t;
        let mut row = vec![n_x.to_string(), n_t.to_string()];
        for &m in &config.mgrit.m {
            for cycle in [Cycle::TwoLevel, Cycle::V] {
                let report = run_solve(&grid_config, c, m, cycle, config.output.threads)?;
                row.push(iteration_cell(&report));
            }
        }
        table.push(row);
    }
    Ok(with_config_metadata(table, config))
}

/// Residual history of one run on the configured grid with the first
/// configured `m`.
pub fn cmd_solve(config: &ExperimentConfig) -> Result<(CsvTable, SolveReport)> {
    config.validate()?;
    let c = config.resolve_c()?;
    let m = config.mgrit.m[0];
    let report = run_solve(config, c, m, config.mgrit.cycle, config.output.threads)?;
    let mut table = CsvTable::new(&["iteration", "residual", "ratio"]);
    for (k, &r) in report.residual_norms.iter().enumerate() {
        let ratio = if k == 0 { String::new() } else { fmt_num(r / report.residual_norms[k - 1]) };
        table.push(vec![k.to_string(), fmt_num(r), ratio]);
    }
    let mut table = with_config_metadata(table, config);
    table.push_metadata(&format!(
        "run:\nc = {}\nm = {m}\nconverged = {}\niterations = {}\nmeasured_rho = {}\nwall_seconds = {}",
        fmt_num(c),
        report.converged,
        report.iterations,
        fmt_num(measured_rho(&report)),
        fmt_num(report.wall_seconds),
    ));
    Ok((table, report))
}

pub use validation::cmd_validate;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::DiscretizationSection;

    fn small(kind: CoarseKind) -> ExperimentConfig {
        let mut config = ExperimentConfig::default();
        config.coarse.kind = kind;
        config.grid.n_x = 32;
        config.grid.n_t = 64;
        config.lfa.samples = 256;
        config.output.threads = 2;
        config
    }

    #[test]
    fn ideal_coarse_grid_converges_in_one_iteration_on_every_cycle() {
        let config = small(CoarseKind::Ideal);
        for cycle in [Cycle::TwoLevel, Cycle::V] {
            let report = run_solve(&config, 3.0, 4, cycle, 1).unwrap();
            assert_eq!(report.iterations, 1);
            assert!(report.converged);
        }
        assert!(lfa_point(&config, 3.0, 4).unwrap().rho < 1e-12);
    }

    #[test]
    fn v_cycle_depth_follows_the_time_grid() {
        let config = small(CoarseKind::Modified);
        let h = build_hierarchy(&config, 5.0, 32, 64, 4, Cycle::V).unwrap();
        assert_eq!(h.levels(), 4);
        assert_eq!(h.stepper(3).multiplier(), 64);
        assert!(build_hierarchy(&config, 5.0, 32, 63, 4, Cycle::TwoLevel).is_err());
    }

    #[test]
    fn sweep_rows_are_ordered_and_single_c_gives_one_row_per_m() {
        let mut config = small(CoarseKind::Rediscretized);
        config.discretization.p = 1;
        config.mgrit.m = vec![2, 4];
        config.sweep.points = 1;
        config.sweep.stop = 2.0;
        let table = cmd_sweep(&config, false).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.values("m"), vec!["2", "4"]);
        assert!(table.values("rho_check").iter().all(|v| !v.is_empty()));
        config.sweep.points = 3;
        let rows = sweep_rows(&config, false).unwrap();
        let cs: Vec<f64> = rows.iter().map(|r| r.c).collect();
        assert!(cs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sweep_is_deterministic_across_thread_counts() {
        let mut config = small(CoarseKind::Modified);
        config.discretization = DiscretizationSection {
            family: Family::Erk,
            p: 1,
            c: None,
            c_fraction: Some(0.5),
        };
        config.sweep.points = 4;
        config.sweep.stop = 1.0;
        config.mgrit.max_iters = 5;
        config.output.threads = 1;
        let serial = cmd_sweep(&config, true).unwrap();
        config.output.threads = 3;
        let parallel = cmd_sweep(&config, true).unwrap();
        assert_eq!(serial.rows, parallel.rows);
    }

    #[test]
    fn iteration_cells_mark_non_convergence() {
        let report = SolveReport {
            residual_norms: vec![1.0, 0.5],
            iterations: 1,
            effective_rho: 0.5,
            converged: false,
            wall_seconds: 0.0,
        };
        assert_eq!(iteration_cell(&report), ">1");
        assert!((measured_rho(&report) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constants_table_has_every_row() {
        let table = cmd_constants().unwrap();
        assert_eq!(table.rows.len(), 20);
        assert!(table.header.contains(&"value".to_string()));
    }
}
