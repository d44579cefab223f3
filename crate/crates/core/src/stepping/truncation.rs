//! Refinement studies: local truncation residuals against their predicted
//! leading terms, and global orders of accuracy.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stepping::Stepper;

/// Smooth periodic test profile on `[-1, 1)` and its derivatives.
fn profile_derivative(order: usize, x: f64) -> f64 {
    PI.powi(order as i32) * (PI * x + order as f64 * PI / 2.0).sin()
}

pub fn mesh(n_x: usize) -> Vec<f64> {
    let h = 2.0 / n_x as f64;
    (0..n_x).map(|i| -1.0 + i as f64 * h).collect()
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn observed_order(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |a, x| a.max(x.abs()))
}

#[derive(Debug, Clone)]
pub struct TruncationReport {
    pub n_x: Vec<usize>,
    /// `max |u(t + dt) - Phi u(t)|` per grid.
    pub residual: Vec<f64>,
    /// `max |residual - predicted term|` per grid.
    pub remainder: Vec<f64>,
    /// Predicted leading coefficient `kappa` in `kappa h^{p+1} u^{(p+1)}`.
    pub predicted: f64,
    /// Least-squares `kappa` on the finest grid.
    pub fitted: f64,
    pub residual_order: f64,
    pub remainder_order: f64,
}

impl TruncationReport {
    pub fn ratio(&self) -> f64 {
        self.fitted / self.predicted
    }
}

/// Measure `u(t + dt) - Phi u(t)` for the smooth profile `sin(pi x)`
/// advected `step_cfl` mesh widths per step, and fit it against
/// `predicted h^{p+1} u^{(p+1)}`.
///
/// `make` builds the stepper for a given `n_x` at fixed step CFL.
pub fn truncation_residual(
    make: impl Fn(usize) -> Result<Stepper>,
    p: usize,
    step_cfl: f64,
    predicted: f64,
    n_x_list: &[usize],
) -> Result<TruncationReport> {
    if n_x_list.len() < 2 {
        return Err(Error::input("a refinement study needs at least two grids"));
    }
    let mut residual = Vec::new();
    let mut remainder = Vec::new();
    let mut hs = Vec::new();
    let mut fitted = 0.0;
    for &n_x in n_x_list {
        let h = 2.0 / n_x as f64;
        let xs = mesh(n_x);
        let u: Vec<f64> = xs.iter().map(|&x| profile_derivative(0, x)).collect();
        let exact: Vec<f64> = xs.iter().map(|&x| profile_derivative(0, x - step_cfl * h)).collect();
        let stepped = make(n_x)?.apply(&u)?;
        let tau: Vec<f64> = exact.iter().zip(&stepped).map(|(e, s)| e - s).collect();
        let lead: Vec<f64> = xs
            .iter()
            .map(|&x| h.powi(p as i32 + 1) * profile_derivative(p + 1, x))
            .collect();
        let num: f64 = tau.iter().zip(&lead).map(|(t, g)| t * g).sum();
        let den: f64 = lead.iter().map(|g| g * g).sum();
        fitted = num / den;
        residual.push(max_abs(tau.iter().copied()));
        remainder.push(max_abs(tau.iter().zip(&lead).map(|(t, g)| t - predicted * g)));
        hs.push(h);
    }
    Ok(TruncationReport {
        n_x: n_x_list.to_vec(),
        residual_order: observed_order(&hs, &residual),
        remainder_order: observed_order(&hs, &remainder),
        residual,
        remainder,
        predicted,
        fitted,
    })
}

/// Max-norm error after `n_steps` steps of `stepper` against the exactly
/// advected profile.
pub fn global_error(stepper: &Stepper, n_steps: usize) -> Result<f64> {
    let n_x = stepper.n_x();
    let h = 2.0 / n_x as f64;
    let xs = mesh(n_x);
    let mut u: Vec<f64> = xs.iter().map(|&x| profile_derivative(0, x)).collect();
    let mut next = vec![0.0; n_x];
    for _ in 0..n_steps {
        stepper.apply_into(&u, &mut next)?;
        std::mem::swap(&mut u, &mut next);
    }
    let shift = stepper.step_cfl() * h * n_steps as f64;
    Ok(max_abs(
        xs.iter().zip(&u).map(|(&x, v)| profile_derivative(0, x - shift) - v),
    ))
}

#[derive(Debug, Clone)]
pub struct OrderStudy {
    pub n_x: Vec<usize>,
    pub errors: Vec<f64>,
    pub order: f64,
}

/// Global order under space-time refinement: `n_t = n_x * steps_per_cell`
/// steps of a stepper built by `make` at fixed step CFL (final time
/// proportional to the step CFL, independent of `n_x`).
pub fn global_order(
    make: impl Fn(usize) -> Result<Stepper>,
    steps_per_point: f64,
    n_x_list: &[usize],
) -> Result<OrderStudy> {
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    for &n_x in n_x_list {
        let stepper = make(n_x)?;
        let n_steps = (steps_per_point * n_x as f64).round() as usize;
        errors.push(global_error(&stepper, n_steps.max(1))?);
        hs.push(2.0 / n_x as f64);
    }
    Ok(OrderStudy {
        n_x: n_x_list.to_vec(),
        order: observed_order(&hs, &errors),
        errors,
    })
}
