//! Local Fourier analysis of two-level MGRIT.
//!
//! With fine symbol `lambda(omega)` and coarse symbol `mu(omega)`, the mode
//! `(omega, theta)` is reduced by
//! `|lambda|^{m nu} |lambda^m - mu| / |1 - exp(-i m theta) mu|` per iteration.
//! The worst case over `theta` is `|lambda|^{m nu} |lambda^m - mu| / (1 - |mu|)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencils::error_constant_fd;
use crate::stepping::{
    fine_stepper, rediscretized_coarse_stepper, ButcherTableau, DiscretizationSpec, Family, StepMode, Stepper,
};

/// Default number of frequency samples in `[-pi, pi)`.
pub const LFA_SAMPLES: usize = 2048;

/// Coarse symbols this close to the unit circle make the factor infinite.
pub const UNIT_CIRCLE_TOL: f64 = 1e-13;

/// Denominators of the per-mode factor below this are not evaluated.
const DENOMINATOR_TOL: f64 = 1e-14;

/// Frequencies next to `omega = 0` dropped besides `omega = 0` itself.
pub fn default_exclusions(p: usize) -> usize {
    if p <= 2 {
        2
    } else {
        10
    }
}

/// Per-mode factor; `None` when the denominator vanishes.
pub fn rho_mode(lambda: Complex64, mu: Complex64, m: usize, nu: usize, theta: f64) -> Option<f64> {
    let denom = (1.0 - Complex64::from_polar(1.0, -(m as f64) * theta) * mu).norm();
    if denom <= DENOMINATOR_TOL {
        return None;
    }
    Some(lambda.norm().powi((m * nu) as i32) * (lambda.powu(m as u32) - mu).norm() / denom)
}

/// Per-mode factor maximised over `theta`; infinite when `|mu| >= 1 - 1e-13`.
pub fn rho_theta_max(lambda: Complex64, mu: Complex64, m: usize, nu: usize) -> f64 {
    let gap = 1.0 - mu.norm();
    if gap <= UNIT_CIRCLE_TOL {
        return f64::INFINITY;
    }
    lambda.norm().powi((m * nu) as i32) * (lambda.powu(m as u32) - mu).norm() / gap
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfaSample {
    pub omega: f64,
    pub lambda: Complex64,
    pub mu: Complex64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LfaSweep {
    /// Retained samples in increasing `omega`.
    pub samples: Vec<LfaSample>,
    /// Worst case over retained samples.
    pub rho: f64,
    pub argmax_omega: f64,
    pub m: usize,
    pub nu: usize,
    /// Samples dropped around `omega = 0`, including `omega = 0`.
    pub excluded: usize,
    /// Some retained sample has `|mu|` on or outside the unit circle.
    pub divergent: bool,
}

/// Two-level factor over `n_samples` uniform frequencies in `[-pi, pi)`,
/// skipping `omega = 0` and its `n_excluded` nearest neighbours.
pub fn rho_two_level(
    lambda: impl Fn(f64) -> Complex64,
    mu: impl Fn(f64) -> Complex64,
    m: usize,
    nu: usize,
    n_samples: usize,
    n_excluded: usize,
) -> Result<LfaSweep> {
    if n_samples < 2 || n_samples % 2 != 0 {
        return Err(Error::input("the frequency sample count must be even and at least 2"));
    }
    if m == 0 {
        return Err(Error::input("coarsening factor must be positive"));
    }
    let zero = n_samples / 2;
    let below = n_excluded / 2;
    let above = n_excluded - below;
    let skipped = |k: usize| k + below >= zero && k <= zero + above;
    let mut samples = Vec::with_capacity(n_samples);
    for k in (0..n_samples).filter(|&k| !skipped(k)) {
        let omega = -PI + 2.0 * PI * k as f64 / n_samples as f64;
        let (l, u) = (lambda(omega), mu(omega));
        samples.push(LfaSample {
            omega,
            lambda: l,
            mu: u,
            rho: rho_theta_max(l, u, m, nu),
        });
    }
    if samples.is_empty() {
        return Err(Error::input("every frequency sample was excluded"));
    }
    let (mut rho, mut argmax_omega) = (samples[0].rho, samples[0].omega);
    for s in &samples[1..] {
        if s.rho > rho {
            rho = s.rho;
            argmax_omega = s.omega;
        }
    }
    let divergent = samples.iter().any(|s| s.rho.is_infinite());
    Ok(LfaSweep {
        excluded: n_samples - samples.len(),
        samples,
        rho,
        argmax_omega,
        m,
        nu,
        divergent,
    })
}

/// Two-level sweep for a pair of steppers.
pub fn sweep_steppers(
    fine: &Stepper,
    coarse: &Stepper,
    m: usize,
    nu: usize,
    n_samples: usize,
    n_excluded: usize,
) -> Result<LfaSweep> {
    rho_two_level(|w| fine.symbol(w), |w| coarse.symbol(w), m, nu, n_samples, n_excluded)
}

/// Characteristic-component estimate
/// `c^p |(e_f - m^p e_c) / (e_FD + (mc)^p e_c)|` (odd `p`).
pub fn rho_check(p: usize, c: f64, m: usize, e_rk_fine: f64, e_rk_coarse: f64, e_fd: f64) -> Result<f64> {
    if p % 2 == 0 {
        return Err(Error::input("the characteristic-component estimate needs odd p"));
    }
    let mp = (m as f64).powi(p as i32);
    let denom = e_fd + (m as f64 * c).powi(p as i32) * e_rk_coarse;
    if denom.abs() < 1e-300 {
        return Err(Error::Singular {
            omega: 0.0,
            magnitude: denom.abs(),
            context: format!(" in the estimate denominator at c = {c}"),
        });
    }
    Ok(c.powi(p as i32) * ((e_rk_fine - mp * e_rk_coarse) / denom).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorCharacter {
    Dissipative,
    Dispersive,
}

/// Parity of the dominant truncation-error derivative order `min(p, q)`.
pub fn classify(p: usize, q: usize) -> ErrorCharacter {
    if p.min(q) % 2 == 1 {
        ErrorCharacter::Dissipative
    } else {
        ErrorCharacter::Dispersive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPoint {
    pub c: f64,
    pub rho: f64,
    pub rho_check: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub m: usize,
    pub points: Vec<BoundPoint>,
    /// Smallest `rho_check / rho` over points with `mc < 1` (1 if none).
    pub tightness: f64,
    /// Largest relative spread of the characteristic-mode factor over `nu = 0, 1, 2`.
    pub nu_spread: f64,
    pub all_hold: bool,
}

/// Sample frequencies with `n_excluded` removed around zero, as in `rho_two_level`.
fn smallest_retained_omega(n_samples: usize, n_excluded: usize) -> f64 {
    let above = n_excluded - n_excluded / 2;
    2.0 * PI * (above + 1) as f64 / n_samples as f64
}

/// Check `rho(E) >= (1 - tol) rho_check(c)` for the rediscretized implicit
/// coarse operator over `c_grid`.
pub fn verify_lower_bound(
    p: usize,
    m: usize,
    nu: usize,
    c_grid: &[f64],
    n_samples: usize,
    tol: f64,
) -> Result<BoundReport> {
    if p % 2 == 0 {
        return Err(Error::input("the lower bound is stated for odd p only"));
    }
    let tab = ButcherTableau::sdirk(p)?;
    let e_rk = tab.error_constant()?;
    let e_fd = error_constant_fd(p);
    let n_excluded = default_exclusions(p);
    let omega0 = smallest_retained_omega(n_samples, n_excluded);
    let mut points = Vec::with_capacity(c_grid.len());
    let mut tightness: f64 = 1.0;
    let mut nu_spread: f64 = 0.0;
    for &c in c_grid {
        let spec = DiscretizationSpec::new(Family::Sdirk, p, c, n_samples, m);
        let fine = fine_stepper(&spec, StepMode::Staged)?;
        let coarse = rediscretized_coarse_stepper(&spec, m, StepMode::Staged)?;
        let sweep = sweep_steppers(&fine, &coarse, m, nu, n_samples, n_excluded)?;
        let check = rho_check(p, c, m, e_rk, e_rk, e_fd)?;
        let holds = sweep.rho >= (1.0 - tol) * check;
        if m as f64 * c < 1.0 && sweep.rho > 0.0 {
            tightness = tightness.min(check / sweep.rho);
        }
        let (l, u) = (fine.symbol(omega0), coarse.symbol(omega0));
        let per_nu: Vec<f64> = (0..=2)
            .filter_map(|v| rho_mode(l, u, m, v, -omega0 * c))
            .collect();
        if let (Some(lo), Some(hi)) = (
            per_nu.iter().copied().reduce(f64::min),
            per_nu.iter().copied().reduce(f64::max),
        ) {
            if hi > 0.0 {
                nu_spread = nu_spread.max((hi - lo) / hi);
            }
        }
        points.push(BoundPoint {
            c,
            rho: sweep.rho,
            rho_check: check,
            holds,
        });
    }
    Ok(BoundReport {
        m,
        all_hold: points.iter().all(|pt| pt.holds),
        points,
        tightness,
        nu_spread,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimateRow {
    pub n_x: usize,
    /// Largest relative deviation over the sampled frequencies for
    /// `lambda`, `lambda^m` and `mu`.
    pub deviation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimateReport {
    pub rows: Vec<EigenEstimateRow>,
    /// Observed orders (in `h`) of the three deviations.
    pub orders: [f64; 3],
    pub pass: bool,
}

/// `exp(-i omega s) [1 + (-1)^{(p+1)/2} s (e_FD + k^p e_RK) omega^{p+1}]`.
fn smooth_mode_estimate(omega: f64, s: f64, k: f64, p: usize, e_fd: f64, e_rk: f64) -> (Complex64, f64) {
    let sign = if ((p + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let correction = sign * s * (e_fd + k.powi(p as i32) * e_rk) * omega.powi(p as i32 + 1);
    (Complex64::from_polar(1.0, -omega * s) * (1.0 + correction), correction.abs())
}

/// Compare the exact fine, ideal and rediscretized coarse symbols with their
/// smooth-mode expansions at the eight smallest retained frequencies of each
/// grid. The deviation is measured relative to the size of the
/// leading correction and must vanish at order at least 1.
pub fn validate_eigenvalue_estimates(spec: &DiscretizationSpec, m: usize, n_x_list: &[usize]) -> Result<EigenEstimateReport> {
    if spec.p % 2 == 0 {
        return Err(Error::input("the smooth-mode estimates are stated for odd p"));
    }
    if spec.family == Family::SemiLagrangian {
        return Err(Error::input("the smooth-mode estimates are for Runge-Kutta steppers"));
    }
    let tab = spec.tableau()?.expect("Runge-Kutta family");
    let e_rk = tab.error_constant()?;
    let e_fd = error_constant_fd(spec.p);
    let c = spec.c;
    let mc = m as f64 * c;
    let mut rows = Vec::new();
    for &n_x in n_x_list {
        let grid = DiscretizationSpec { n_x, ..*spec };
        let fine = fine_stepper(&grid, StepMode::Staged)?;
        let coarse_grid = DiscretizationSpec { c: mc, ..grid };
        let coarse = fine_stepper(&coarse_grid, StepMode::Staged)?;
        let first = default_exclusions(spec.p) / 2 + 1;
        let mut deviation = [0.0f64; 3];
        for j in first..first + 8 {
            let omega = 2.0 * PI * j as f64 / n_x as f64;
            let lambda = fine.symbol(omega);
            let estimates = [
                (lambda, smooth_mode_estimate(omega, c, c, spec.p, e_fd, e_rk)),
                (lambda.powu(m as u32), smooth_mode_estimate(omega, mc, c, spec.p, e_fd, e_rk)),
                (coarse.symbol(omega), smooth_mode_estimate(omega, mc, mc, spec.p, e_fd, e_rk)),
            ];
            for (d, (exact, (estimate, scale))) in deviation.iter_mut().zip(estimates) {
                *d = d.max((exact - estimate).norm() / scale);
            }
        }
        rows.push(EigenEstimateRow { n_x, deviation });
    }
    let hs: Vec<f64> = rows.iter().map(|r| 2.0 / r.n_x as f64).collect();
    let mut orders = [0.0; 3];
    for (i, o) in orders.iter_mut().enumerate() {
        let devs: Vec<f64> = rows.iter().map(|r| r.deviation[i]).collect();
        *o = crate::stepping::truncation::observed_order(&hs, &devs);
    }
    let pass = orders.iter().all(|&o| o >= 0.95);
    Ok(EigenEstimateReport { rows, orders, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn per_mode_hand_values() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let lam = c(0.9);
        assert_abs_diff_eq!(rho_mode(lam, lam * lam, 2, 1, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(rho_mode(c(1.0), c(0.0), 3, 0, 1.1).unwrap(), 1.0);
        assert_abs_diff_eq!(rho_mode(lam, c(0.5), 2, 1, 0.0).unwrap(), 0.81 * 0.31 / 0.5, epsilon = 1e-14);
        assert!(rho_mode(c(0.5), c(1.0), 2, 0, 0.0).is_none());
        assert!(rho_theta_max(c(0.5), c(1.0), 2, 0).is_infinite());
    }

    #[test]
    fn ideal_coarse_symbol_gives_zero() {
        let lambda = |w: f64| Complex64::new(0.9, 0.0) * Complex64::from_polar(1.0, -0.7 * w);
        let sweep = rho_two_level(lambda, |w| lambda(w).powu(4), 4, 1, 256, 2).unwrap();
        assert_abs_diff_eq!(sweep.rho, 0.0, epsilon = 1e-15);
        assert_eq!(sweep.excluded, 3);
        assert!(!sweep.divergent);
        assert!(sweep.samples.iter().all(|s| s.omega.abs() > 2.0 * PI / 256.0 * 1.5));
    }

    #[test]
    fn everything_excluded_is_an_error() {
        let one = |_: f64| Complex64::new(1.0, 0.0);
        assert!(rho_two_level(one, one, 2, 0, 4, 10).is_err());
    }

    #[test]
    fn rho_check_hand_values() {
        assert_abs_diff_eq!(rho_check(1, 4.0, 2, 0.5, 0.5, 0.5).unwrap(), 4.0 * 0.5 / 4.5, epsilon = 1e-15);
        for (p, m) in [(1, 2usize), (3, 16)] {
            let e = ButcherTableau::sdirk(p).unwrap().error_constant().unwrap();
            let c = 1e3 / m as f64;
            let limit = (1.0 - (m as f64).powi(-(p as i32))).abs();
            let r = rho_check(p, c, m, e, e, error_constant_fd(p)).unwrap();
            assert!((r - limit).abs() <= 0.02 * limit);
        }
        assert!(rho_check(2, 1.0, 2, 0.1, 0.1, 0.3).is_err());
    }

    #[test]
    fn rho_check_vanishes_like_mc_to_the_p() {
        let e = ButcherTableau::sdirk(3).unwrap().error_constant().unwrap();
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&c| rho_check(3, c, 4, e, e, error_constant_fd(3)).unwrap() / (4.0 * c).powi(3))
            .collect();
        assert!((ratios[0] / ratios[2] - 1.0).abs() < 0.01);
    }

    #[test]
    fn classification() {
        assert_eq!(classify(3, 3), ErrorCharacter::Dissipative);
        assert_eq!(classify(2, 2), ErrorCharacter::Dispersive);
        assert_eq!(classify(1, 1), ErrorCharacter::Dissipative);
    }

    #[test]
    fn sweep_is_symmetric_in_omega() {
        let spec = DiscretizationSpec::new(Family::Sdirk, 3, 2.0, 256, 4);
        let fine = fine_stepper(&spec, StepMode::Staged).unwrap();
        let coarse = rediscretized_coarse_stepper(&spec, 4, StepMode::Staged).unwrap();
        let sweep = sweep_steppers(&fine, &coarse, 4, 1, 256, 10).unwrap();
        for s in &sweep.samples {
            if s.omega > -PI {
                let mirror = rho_theta_max(fine.symbol(-s.omega), coarse.symbol(-s.omega), 4, 1);
                assert_abs_diff_eq!(s.rho, mirror, epsilon = 1e-12 * s.rho.max(1.0));
            }
        }
    }

    #[test]
    fn eigenvalue_estimates_for_explicit_euler() {
        let spec = DiscretizationSpec::new(Family::Erk, 1, 0.5, 64, 1);
        let report = validate_eigenvalue_estimates(&spec, 1, &[128, 256, 512, 1024]).unwrap();
        assert!(report.pass, "{report:?}");
        // with m = 1 the ideal estimate is the fine estimate
        for row in &report.rows {
            assert_abs_diff_eq!(row.deviation[0], row.deviation[1], epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn analytic_theta_maximum(
            lr in 0.2f64..1.0, la in -PI..PI, mr in 0.0f64..0.9, ma in -PI..PI, m in 2usize..16, nu in 0usize..3
        ) {
            let lambda = Complex64::from_polar(lr, la);
            let mu = Complex64::from_polar(mr, ma);
            let sampled = (0..256)
                .filter_map(|k| {
                    let theta = -PI / m as f64 + 2.0 * PI / m as f64 * k as f64 / 256.0;
                    rho_mode(lambda, mu, m, nu, theta)
                })
                .fold(0.0, f64::max);
            let analytic = rho_theta_max(lambda, mu, m, nu);
            prop_assert!(sampled <= analytic * (1.0 + 1e-12));
            prop_assert!(sampled >= 0.99 * analytic);
        }
    }
}
