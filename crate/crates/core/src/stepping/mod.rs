//! One-step maps for the fine and coarse time grids.
//!
//! Fine grids use method-of-lines Runge-Kutta steppers with upwind spatial
//! differences. Coarse grids use the semi-Lagrangian step, optionally with an
//! implicit truncation-error correction, or a rediscretized Runge-Kutta step.

mod tableau;
pub mod truncation;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circulant::{admissible_frequency, CirculantOperator, GmresStatus, SINGULAR_TOL};
use crate::error::{Error, Result};
use crate::stencils::{
    error_constant_fd, f_poly, high_derivative_operator, lagrange_weights, upwind_derivative, Bias,
    StencilWindow,
};

pub use tableau::{ButcherTableau, TableauKind};

/// Stencil weights of assembled operators below this are dropped.
pub const ASSEMBLY_PRUNE_TOL: f64 = 1e-14;

/// Growth allowed by the CFL-limit search and the stability flag.
pub const CFL_GROWTH_TOL: f64 = 1e-6;

/// Frequencies sampled by the CFL-limit search.
pub const CFL_SAMPLES: usize = 4096;

/// Departure fractions within this distance of an integer snap to it.
const EPS_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Erk,
    Sdirk,
    #[serde(rename = "sl")]
    SemiLagrangian,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Erk => "ERK",
            Family::Sdirk => "SDIRK",
            Family::SemiLagrangian => "SL",
        }
    }
}

/// A fine-grid discretization on `[-1, 1)` with `c = alpha dt / h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationSpec {
    pub family: Family,
    pub p: usize,
    pub q: usize,
    pub c: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub alpha: f64,
}

impl DiscretizationSpec {
    /// Unit wave speed, `q = p`.
    pub fn new(family: Family, p: usize, c: f64, n_x: usize, n_t: usize) -> Self {
        Self {
            family,
            p,
            q: p,
            c,
            n_x,
            n_t,
            alpha: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::input(format!("CFL number must be positive, got {}", self.c)));
        }
        if self.p == 0 || self.q == 0 || self.n_x == 0 || self.n_t == 0 {
            return Err(Error::input("orders and grid sizes must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::input("wave speed must be positive"));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        2.0 / self.n_x as f64
    }

    pub fn dt(&self) -> f64 {
        self.c * self.h() / self.alpha
    }

    pub fn final_time(&self) -> f64 {
        self.dt() * self.n_t as f64
    }

    /// The Runge-Kutta method of a method-of-lines spec.
    pub fn tableau(&self) -> Result<Option<ButcherTableau>> {
        match self.family {
            Family::Erk => ButcherTableau::erk(self.q).map(Some),
            Family::Sdirk => ButcherTableau::sdirk(self.q).map(Some),
            Family::SemiLagrangian => Ok(None),
        }
    }

    /// `ERK3+U3`-style identifier.
    pub fn label(&self) -> String {
        match self.family {
            Family::SemiLagrangian => format!("SL{}", self.p),
            f => format!("{}{}+U{}", f.label(), self.q, self.p),
        }
    }
}

/// How a method-of-lines step is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// One circulant built from the stability function in symbol space.
    Assembled,
    /// Runge-Kutta stage sweep with stage solves for implicit methods.
    Staged,
}

/// Solver for the implicit correction of the modified coarse operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum CorrectionSolver {
    Direct,
    Gmres { tol: f64, max_iters: usize },
}

#[derive(Debug, Clone)]
enum Action {
    Stencil(CirculantOperator),
    Staged {
        generator: CirculantOperator,
        tableau: ButcherTableau,
        stage_matrices: Vec<CirculantOperator>,
    },
    Corrected {
        transport: CirculantOperator,
        correction: CirculantOperator,
        solver: CorrectionSolver,
    },
    Repeat {
        base: Box<Stepper>,
        count: usize,
    },
}

/// A one-step map `u -> Phi u` on the periodic mesh.
#[derive(Debug, Clone)]
pub struct Stepper {
    action: Action,
    level: usize,
    multiplier: usize,
    step_cfl: f64,
    stable: bool,
}

impl Stepper {
    pub fn from_operator(op: CirculantOperator) -> Self {
        Self {
            action: Action::Stencil(op),
            level: 0,
            multiplier: 1,
            step_cfl: 0.0,
            stable: true,
        }
    }

    /// The `count`-fold composition of `base`, applied step by step.
    pub fn repeated(base: Stepper, count: usize) -> Self {
        let step_cfl = base.step_cfl * count as f64;
        let multiplier = base.multiplier * count;
        let stable = base.stable;
        Self {
            action: Action::Repeat {
                base: Box::new(base),
                count,
            },
            level: 1,
            multiplier,
            step_cfl,
            stable,
        }
    }

    pub fn with_level(mut self, level: usize) -> Self {
        self.level = level;
        self
    }

    pub fn n_x(&self) -> usize {
        match &self.action {
            Action::Stencil(op) => op.n_x(),
            Action::Staged { generator, .. } => generator.n_x(),
            Action::Corrected { transport, .. } => transport.n_x(),
            Action::Repeat { base, .. } => base.n_x(),
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Step size in units of the fine time step.
    pub fn multiplier(&self) -> usize {
        self.multiplier
    }

    /// `alpha * step / h` for this stepper's step.
    pub fn step_cfl(&self) -> f64 {
        self.step_cfl
    }

    /// False when an explicit method was built beyond its stability limit.
    pub fn is_stable(&self) -> bool {
        self.stable
    }

    /// The underlying stencil when the step is a single explicit circulant.
    pub fn operator(&self) -> Option<&CirculantOperator> {
        match &self.action {
            Action::Stencil(op) => Some(op),
            _ => None,
        }
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n_x() {
            return Err(Error::Dimension {
                expected: self.n_x(),
                actual: u.len(),
            });
        }
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out)?;
        Ok(out)
    }

    /// `out = Phi u`.
    ///
    /// # Panics
    /// If `u` or `out` does not have length `n_x`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.action {
            Action::Stencil(op) => op.apply_into(u, out),
            Action::Staged {
                generator,
                tableau,
                stage_matrices,
            } => {
                let s = tableau.stages();
                let n = u.len();
                let mut k: Vec<Vec<f64>> = Vec::with_capacity(s);
                let mut y = vec![0.0; n];
                for i in 0..s {
                    y.copy_from_slice(u);
                    for (j, kj) in k.iter().enumerate() {
                        let a = tableau.a()[i][j];
                        if a != 0.0 {
                            y.iter_mut().zip(kj).for_each(|(yi, kji)| *yi += a * kji);
                        }
                    }
                    if tableau.kind() == TableauKind::Sdirk {
                        y = stage_matrices[i].solve_direct(&y)?;
                    }
                    let mut ki = vec![0.0; n];
                    generator.apply_into(&y, &mut ki);
                    k.push(ki);
                }
                out.copy_from_slice(u);
                for (bi, ki) in tableau.b().iter().zip(&k) {
                    out.iter_mut().zip(ki).for_each(|(o, x)| *o += bi * x);
                }
            }
            Action::Corrected {
                transport,
                correction,
                solver,
            } => {
                let mut mid = vec![0.0; u.len()];
                transport.apply_into(u, &mut mid);
                let x = match *solver {
                    CorrectionSolver::Direct => correction.solve_direct(&mid)?,
                    CorrectionSolver::Gmres { tol, max_iters } => {
                        let outcome = correction.solve_gmres(&mid, tol, max_iters)?;
                        debug_assert!(outcome.status != GmresStatus::Breakdown || outcome.relative_residual < 1e-8);
                        outcome.solution
                    }
                };
                out.copy_from_slice(&x);
            }
            Action::Repeat { base, count } => {
                out.copy_from_slice(u);
                let mut tmp = vec![0.0; u.len()];
                for _ in 0..*count {
                    base.apply_into(out, &mut tmp)?;
                    out.copy_from_slice(&tmp);
                }
            }
        }
        Ok(())
    }

    /// Fourier symbol of the one-step map (the exact-solve symbol for
    /// corrected steppers, whatever solver they use).
    pub fn symbol(&self, omega: f64) -> Complex64 {
        match &self.action {
            Action::Stencil(op) => op.symbol(omega),
            Action::Staged { generator, tableau, .. } => tableau
                .stability_function(generator.symbol(omega))
                .unwrap_or(Complex64::new(f64::INFINITY, 0.0)),
            Action::Corrected {
                transport,
                correction,
                ..
            } => transport.symbol(omega) / correction.symbol(omega),
            Action::Repeat { base, count } => base.symbol(omega).powu(*count as u32),
        }
    }

    /// The step as a single circulant, via the symbol at admissible frequencies.
    pub fn assemble(&self) -> Result<CirculantOperator> {
        if let Action::Stencil(op) = &self.action {
            return Ok(op.clone());
        }
        let n = self.n_x();
        let values: Vec<Complex64> = (0..n).map(|k| self.symbol(admissible_frequency(k, n))).collect();
        CirculantOperator::from_symbol_values(&values, ASSEMBLY_PRUNE_TOL)
    }

    /// Same map, executed as one assembled circulant.
    pub fn into_assembled(self) -> Result<Self> {
        let op = self.assemble()?;
        Ok(Self {
            action: Action::Stencil(op),
            ..self
        })
    }

    /// Largest `|symbol|` over `samples` uniform frequencies in `[-pi, pi)`.
    pub fn max_symbol_modulus(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| self.symbol(-PI + 2.0 * PI * k as f64 / samples as f64).norm())
            .fold(0.0, f64::max)
    }
}

fn check_nonsingular(op: &CirculantOperator, context: impl FnOnce() -> String) -> Result<()> {
    let (magnitude, omega) = op.min_admissible_symbol();
    if magnitude < SINGULAR_TOL {
        return Err(Error::Singular {
            omega,
            magnitude,
            context: context(),
        });
    }
    Ok(())
}

/// Largest `|R(-c L(omega))|` over the CFL sample frequencies.
pub fn amplification(tab: &ButcherTableau, l: &CirculantOperator, c: f64) -> f64 {
    (0..CFL_SAMPLES)
        .map(|k| {
            let omega = -PI + 2.0 * PI * k as f64 / CFL_SAMPLES as f64;
            tab.stability_function(-c * l.symbol(omega))
                .map(|r| r.norm())
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

/// `M = R_q(-c L_p)`: the method-of-lines step.
pub fn mol_stepper(spec: &DiscretizationSpec, tab: &ButcherTableau, mode: StepMode) -> Result<Stepper> {
    spec.validate()?;
    let expected = match spec.family {
        Family::Erk => TableauKind::Explicit,
        Family::Sdirk => TableauKind::Sdirk,
        Family::SemiLagrangian => {
            return Err(Error::input("semi-Lagrangian specs have no Runge-Kutta stepper"))
        }
    };
    if tab.kind() != expected {
        return Err(Error::input(format!(
            "{} tableau does not match a {} spec",
            tab.name(),
            spec.family.label()
        )));
    }
    let l = upwind_derivative(spec.p, spec.n_x)?;
    let generator = l.scale(-spec.c);
    let stage_matrices = if tab.kind() == TableauKind::Sdirk {
        (0..tab.stages())
            .map(|i| {
                let m = CirculantOperator::identity(spec.n_x).add(&generator.scale(-tab.a()[i][i]))?;
                check_nonsingular(&m, || format!(" in stage {i} of {}", spec.label()))?;
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let stable = tab.kind() == TableauKind::Sdirk || amplification(tab, &l, spec.c) <= 1.0 + CFL_GROWTH_TOL;
    let staged = Stepper {
        action: Action::Staged {
            generator,
            tableau: tab.clone(),
            stage_matrices,
        },
        level: 0,
        multiplier: 1,
        step_cfl: spec.c,
        stable,
    };
    match mode {
        StepMode::Staged => Ok(staged),
        StepMode::Assembled => staged.into_assembled(),
    }
}

/// Semi-Lagrangian step with its departure-point geometry.
#[derive(Debug, Clone)]
pub struct SlStep {
    pub stepper: Stepper,
    /// Fractional part of the step CFL: departure at `x_{i - k} - eps h`.
    pub eps: f64,
    /// Offset `-k` of the east neighbour of the departure point.
    pub shift: i64,
    pub window: StencilWindow,
}

/// Split `mc` into `k = floor(mc)` and `eps = mc - k`, snapping near-integers.
pub fn departure_split(mc: f64) -> (i64, f64) {
    let k = mc.floor();
    let eps = mc - k;
    if eps < EPS_SNAP {
        (k as i64, 0.0)
    } else if eps > 1.0 - EPS_SNAP {
        (k as i64 + 1, 0.0)
    } else {
        (k as i64, eps)
    }
}

/// Order-`p` semi-Lagrangian step for a step CFL number `mc`.
pub fn sl_stepper(p: usize, mc: f64, n_x: usize) -> Result<SlStep> {
    if !(mc > 0.0 && mc.is_finite()) {
        return Err(Error::input(format!("step CFL must be positive, got {mc}")));
    }
    if p == 0 || n_x <= p + 1 {
        return Err(Error::input(format!("n_x = {n_x} too small for order {p}")));
    }
    let (k, eps) = departure_split(mc);
    let window = StencilWindow::semi_lagrangian(p, eps);
    let n = n_x as i64;
    let op = if eps == 0.0 {
        CirculantOperator::shift(n_x, wrap(-k, n))?
    } else {
        let weights = lagrange_weights(window, eps);
        let terms = window
            .offsets()
            .into_iter()
            .zip(weights)
            .map(|(j, w)| (wrap(j - k, n), w));
        CirculantOperator::new(n_x, terms)?
    };
    Ok(SlStep {
        stepper: Stepper {
            action: Action::Stencil(op),
            level: 0,
            multiplier: 1,
            step_cfl: mc,
            stable: true,
        },
        eps,
        shift: -k,
        window,
    })
}

/// Keep offsets that fit in `(-n, n)` as they are, so the symbol stays exact
/// off the admissible frequencies; reduce the rest modulo `n`.
fn wrap(offset: i64, n: i64) -> i64 {
    if offset.abs() < n {
        offset
    } else if offset < 0 {
        let r = offset.rem_euclid(n);
        if r == 0 {
            0
        } else {
            r - n
        }
    } else {
        offset.rem_euclid(n)
    }
}

/// `f_{p+1}` at the departure fraction of a step with CFL number `mc`.
pub fn sl_error_factor(p: usize, mc: f64) -> f64 {
    let (_, eps) = departure_split(mc);
    f_poly(p, StencilWindow::semi_lagrangian(p, eps), eps).expect("semi-Lagrangian windows hold p + 1 points")
}

/// Stability limit of `ERKq+Up`: the largest `c` with
/// `max |R(-c L_p(omega))| <= 1 + CFL_GROWTH_TOL`.
///
/// Scans `c` in steps of `1e-2` up to the first unstable value, then bisects.
pub fn cfl_limit(p: usize, tab: &ButcherTableau) -> Result<f64> {
    if tab.kind() != TableauKind::Explicit {
        return Err(Error::input("CFL limits are defined for explicit methods only"));
    }
    let l = upwind_derivative(p, 2 * p + 8)?;
    let stable = |c: f64| amplification(tab, &l, c) <= 1.0 + CFL_GROWTH_TOL;
    let step = 1e-2;
    let mut lo = 0.0;
    let mut hi = step;
    while stable(hi) {
        lo = hi;
        hi += step;
        if hi > 100.0 {
            return Err(Error::input(format!("{} with U{p} looks unconditionally stable", tab.name())));
        }
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Correction coefficients `phi_1, ..., phi_L` for cumulative coarsening
/// `factors[0]`, `factors[0] * factors[1]`, ...
pub fn phi_coefficients(p: usize, c: f64, factors: &[usize], e_fd: f64, e_rk: f64) -> Vec<f64> {
    let sign = if (p + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let mut out = Vec::with_capacity(factors.len());
    let mut cumulative = 1.0;
    let mut prev_f = 0.0;
    let mut prev_phi = 0.0;
    for (level, &m) in factors.iter().enumerate() {
        let m = m as f64;
        cumulative *= m;
        let f = sl_error_factor(p, cumulative * c);
        let phi = if level == 0 {
            m * (c * e_fd + (-c).powi(p as i32 + 1) * e_rk) + sign * f
        } else {
            sign * (-m * prev_f + f) + m * prev_phi
        };
        out.push(phi);
        prev_f = f;
        prev_phi = phi;
    }
    out
}

/// `phi` on level `level` with the same factor `m` on every level.
pub fn phi_coefficient(p: usize, c: f64, m: usize, level: usize, e_fd: f64, e_rk: f64) -> f64 {
    assert!(level >= 1, "correction coefficients start at level 1");
    *phi_coefficients(p, c, &vec![m; level], e_fd, e_rk)
        .last()
        .expect("level >= 1")
}

/// The high-derivative stencil used in the correction: centred second order
/// for odd `p`, left-biased first order for even `p`.
pub fn correction_derivative(p: usize, n_x: usize) -> Result<CirculantOperator> {
    if p % 2 == 1 {
        high_derivative_operator(p + 1, 2, Bias::Symmetric, n_x)
    } else {
        high_derivative_operator(p + 1, 1, Bias::LeftBiased, n_x)
    }
}

/// `(I - phi D)^{-1} S` on the level reached by the coarsening `factors`.
pub fn modified_coarse_stepper(
    fine: &DiscretizationSpec,
    tab: &ButcherTableau,
    factors: &[usize],
    solver: CorrectionSolver,
) -> Result<Stepper> {
    fine.validate()?;
    if factors.is_empty() || factors.contains(&0) {
        return Err(Error::input("coarsening factors must be positive"));
    }
    let e_fd = error_constant_fd(fine.p);
    let e_rk = tab.error_constant()?;
    let phi = *phi_coefficients(fine.p, fine.c, factors, e_fd, e_rk)
        .last()
        .expect("nonempty factors");
    let multiplier: usize = factors.iter().product();
    let mc = multiplier as f64 * fine.c;
    let sl = sl_stepper(fine.p, mc, fine.n_x)?;
    let d = correction_derivative(fine.p, fine.n_x)?;
    let correction = CirculantOperator::identity(fine.n_x).add(&d.scale(-phi))?;
    check_nonsingular(&correction, || format!(" in the correction with phi = {phi:.6e}"))?;
    let transport = sl.stepper.operator().expect("SL steps are stencils").clone();
    Ok(Stepper {
        action: Action::Corrected {
            transport,
            correction,
            solver,
        },
        level: factors.len(),
        multiplier,
        step_cfl: mc,
        stable: true,
    })
}

/// Method-of-lines step rebuilt with step `m dt` (implicit methods only).
pub fn rediscretized_coarse_stepper(fine: &DiscretizationSpec, m: usize, mode: StepMode) -> Result<Stepper> {
    if fine.family != Family::Sdirk {
        return Err(Error::input(
            "rediscretized coarse operators are only stable for implicit methods",
        ));
    }
    let tab = ButcherTableau::sdirk(fine.q)?;
    let coarse = DiscretizationSpec {
        c: fine.c * m as f64,
        ..*fine
    };
    let mut stepper = mol_stepper(&coarse, &tab, mode)?;
    stepper.level = 1;
    stepper.multiplier = m;
    Ok(stepper)
}

/// Fine-grid stepper for any family (SL fine grids step at CFL `c`).
pub fn fine_stepper(spec: &DiscretizationSpec, mode: StepMode) -> Result<Stepper> {
    match spec.tableau()? {
        Some(tab) => mol_stepper(spec, &tab, mode),
        None => {
            spec.validate()?;
            Ok(sl_stepper(spec.p, spec.c, spec.n_x)?.stepper)
        }
    }
}
