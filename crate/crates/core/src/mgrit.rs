//! Linear MGRIT for `u_0 = g_0`, `u_n = Phi u_{n-1} + g_n`.
//!
//! Time point `n` on a level with coarsening factor `m` is a C-point when
//! `n % m == 0`. Relaxation and correction are parallel over CF-intervals;
//! every reduction runs in a fixed order, so results do not depend on the
//! thread count.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stepping::Stepper;

/// Values at `n_points` time points, each a vector of length `n_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTime {
    n_x: usize,
    data: Vec<f64>,
}

impl SpaceTime {
    pub fn zeros(n_x: usize, n_points: usize) -> Self {
        Self {
            n_x,
            data: vec![0.0; n_x * n_points],
        }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_points(&self) -> usize {
        self.data.len() / self.n_x
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.data[n * self.n_x..(n + 1) * self.n_x]
    }

    pub fn point_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.n_x..(n + 1) * self.n_x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Global l2 norm over all points.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Global l2 norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `sin^4(pi x)` on the mesh `x_i = -1 + 2i / n_x`.
pub fn initial_condition(n_x: usize) -> Vec<f64> {
    let h = 2.0 / n_x as f64;
    (0..n_x)
        .map(|i| (PI * (-1.0 + i as f64 * h)).sin().powi(4))
        .collect()
}

/// Steppers per level with the coarsening factor between consecutive levels.
#[derive(Debug, Clone)]
pub struct MgritHierarchy {
    steppers: Vec<Stepper>,
    factors: Vec<usize>,
    n_t: usize,
}

impl MgritHierarchy {
    /// `steppers[l]` advances level `l`; level `l + 1` keeps every
    /// `factors[l]`-th point of level `l`.
    pub fn new(steppers: Vec<Stepper>, factors: Vec<usize>, n_t: usize) -> Result<Self> {
        if steppers.len() < 2 || factors.len() + 1 != steppers.len() {
            return Err(Error::config(
                "a hierarchy needs at least two levels and one factor per coarse level",
            ));
        }
        let n_x = steppers[0].n_x();
        if steppers.iter().any(|s| s.n_x() != n_x) {
            return Err(Error::config("all levels must share the spatial mesh"));
        }
        let mut n = n_t;
        for &m in &factors {
            if m < 2 || n % m != 0 || n / m == 0 {
                return Err(Error::config(format!(
                    "{n} time steps cannot be coarsened by a factor of {m}"
                )));
            }
            n /= m;
        }
        Ok(Self {
            steppers,
            factors,
            n_t,
        })
    }

    pub fn levels(&self) -> usize {
        self.steppers.len()
    }

    pub fn stepper(&self, level: usize) -> &Stepper {
        &self.steppers[level]
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn n_x(&self) -> usize {
        self.steppers[0].n_x()
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// Number of time steps on `level`.
    pub fn steps_on(&self, level: usize) -> usize {
        self.n_t / self.factors[..level].iter().product::<usize>()
    }
}

/// Number of coarse levels reached by coarsening `n_t` steps by `m` until
/// fewer than two time points would remain.
pub fn coarsening_depth(n_t: usize, m: usize) -> usize {
    let mut n = n_t;
    let mut depth = 0;
    while m >= 2 && n % m == 0 && n / m >= 1 {
        n /= m;
        depth += 1;
    }
    depth
}

#[derive(Debug, Clone)]
pub struct TimeGridProblem {
    pub hierarchy: MgritHierarchy,
    pub u0: Vec<f64>,
}

impl TimeGridProblem {
    /// Problem with the `sin^4` initial condition.
    pub fn new(hierarchy: MgritHierarchy) -> Self {
        let u0 = initial_condition(hierarchy.n_x());
        Self { hierarchy, u0 }
    }

    pub fn n_x(&self) -> usize {
        self.hierarchy.n_x()
    }

    pub fn n_t(&self) -> usize {
        self.hierarchy.n_t()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cycle {
    #[serde(rename = "two-level")]
    TwoLevel,
    #[serde(rename = "v")]
    V,
}

impl std::str::FromStr for Cycle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-level" => Ok(Cycle::TwoLevel),
            "v" => Ok(Cycle::V),
            other => Err(Error::config(format!("unknown cycle '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgritConfig {
    /// CF-sweeps in the pre-relaxation `F(CF)^nu`.
    pub nu: usize,
    pub cycle: Cycle,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
}

impl Default for MgritConfig {
    fn default() -> Self {
        Self {
            nu: 1,
            cycle: Cycle::TwoLevel,
            rel_tol: 1e-10,
            max_iters: 30,
            seed: 0,
            threads: 0,
        }
    }
}

impl MgritConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::config("rel_tol must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `||r_0||, ||r_1||, ...`: C-point residual norms after each final F-relaxation.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    /// `||r_k|| / ||r_{k-1}||` at the final iteration.
    pub effective_rho: f64,
    pub converged: bool,
    pub wall_seconds: f64,
}

fn rhs_point(g: Option<&SpaceTime>, n: usize) -> Option<&[f64]> {
    g.map(|g| g.point(n))
}

fn add_into(out: &mut [f64], rhs: Option<&[f64]>) {
    if let Some(r) = rhs {
        out.iter_mut().zip(r).for_each(|(o, x)| *o += x);
    }
}

/// Exact forward substitution on `level`, with `u_0` taken from the state.
pub fn forward_substitute(phi: &Stepper, u: &mut SpaceTime, g: Option<&SpaceTime>) -> Result<()> {
    let n_x = u.n_x;
    for n in 1..u.n_points() {
        let (head, tail) = u.data.split_at_mut(n * n_x);
        let out = &mut tail[..n_x];
        phi.apply_into(&head[(n - 1) * n_x..], out)?;
        add_into(out, rhs_point(g, n));
    }
    Ok(())
}

/// The fine-grid solution `u_{n+1} = Phi u_n` from `u_0`.
pub fn sequential_solve(problem: &TimeGridProblem) -> Result<SpaceTime> {
    let mut u = SpaceTime::zeros(problem.n_x(), problem.n_t() + 1);
    u.point_mut(0).copy_from_slice(&problem.u0);
    forward_substitute(problem.hierarchy.stepper(0), &mut u, None)?;
    Ok(u)
}

/// Within each CF-interval, `u_n = Phi u_{n-1} + g_n` at the F-points.
pub fn f_relax(phi: &Stepper, m: usize, u: &mut SpaceTime, g: Option<&SpaceTime>) -> Result<()> {
    let n_x = u.n_x;
    u.data
        .par_chunks_mut(m * n_x)
        .enumerate()
        .try_for_each(|(k, chunk)| {
            let points = chunk.len() / n_x;
            for j in 1..points {
                let (head, tail) = chunk.split_at_mut(j * n_x);
                let out = &mut tail[..n_x];
                phi.apply_into(&head[(j - 1) * n_x..], out)?;
                add_into(out, rhs_point(g, k * m + j));
            }
            Ok(())
        })
}

/// `u_n = Phi u_{n-1} + g_n` at every C-point `n > 0`.
pub fn c_relax(phi: &Stepper, m: usize, u: &mut SpaceTime, g: Option<&SpaceTime>) -> Result<()> {
    let n_x = u.n_x;
    u.data[n_x..]
        .par_chunks_exact_mut(m * n_x)
        .enumerate()
        .try_for_each(|(k, chunk)| {
            let (head, tail) = chunk.split_at_mut((m - 1) * n_x);
            phi.apply_into(&head[(m - 2) * n_x..], tail)?;
            add_into(tail, rhs_point(g, (k + 1) * m));
            Ok(())
        })
}

/// Coarse right-hand side: `r_0 = 0`, `r_k = g_{km} + Phi u_{km-1} - u_{km}`.
pub fn restrict_residual(phi: &Stepper, m: usize, u: &SpaceTime, g: Option<&SpaceTime>) -> Result<SpaceTime> {
    let n_x = u.n_x;
    let n_coarse = (u.n_points() - 1) / m;
    let mut r = SpaceTime::zeros(n_x, n_coarse + 1);
    r.data[n_x..]
        .par_chunks_exact_mut(n_x)
        .enumerate()
        .try_for_each(|(i, out)| {
            let n = (i + 1) * m;
            phi.apply_into(u.point(n - 1), out)?;
            add_into(out, rhs_point(g, n));
            out.iter_mut().zip(u.point(n)).for_each(|(o, x)| *o -= x);
            Ok::<(), Error>(())
        })?;
    Ok(r)
}

/// `u_{km} += e_k` for `k >= 1`.
fn correct(m: usize, u: &mut SpaceTime, e: &SpaceTime) {
    let n_x = u.n_x;
    u.data[n_x..]
        .par_chunks_exact_mut(m * n_x)
        .enumerate()
        .for_each(|(k, chunk)| {
            let c = &mut chunk[(m - 1) * n_x..];
            c.iter_mut().zip(e.point(k + 1)).for_each(|(x, d)| *x += d);
        });
}

/// l2 norm of the C-point residuals, summed in time order.
pub fn c_residual_norm(phi: &Stepper, m: usize, u: &SpaceTime, g: Option<&SpaceTime>) -> Result<f64> {
    let r = restrict_residual(phi, m, u, g)?;
    let per_point: Vec<f64> = r
        .data
        .par_chunks(r.n_x)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>())
        .collect();
    Ok(per_point.iter().sum::<f64>().sqrt())
}

/// One MGRIT cycle on `level`, recursing down to `coarsest`.
fn cycle(
    hierarchy: &MgritHierarchy,
    level: usize,
    coarsest: usize,
    nu: usize,
    u: &mut SpaceTime,
    g: Option<&SpaceTime>,
) -> Result<()> {
    let phi = hierarchy.stepper(level);
    let m = hierarchy.factors()[level];
    f_relax(phi, m, u, g)?;
    for _ in 0..nu {
        c_relax(phi, m, u, g)?;
        f_relax(phi, m, u, g)?;
    }
    let r = restrict_residual(phi, m, u, g)?;
    let mut e = SpaceTime::zeros(u.n_x, r.n_points());
    if level + 1 == coarsest {
        forward_substitute(hierarchy.stepper(coarsest), &mut e, Some(&r))?;
    } else {
        cycle(hierarchy, level + 1, coarsest, nu, &mut e, Some(&r))?;
    }
    correct(m, u, &e);
    f_relax(phi, m, u, g)
}

/// One iteration on the fine level.
pub fn iterate(problem: &TimeGridProblem, config: &MgritConfig, u: &mut SpaceTime) -> Result<()> {
    let coarsest = match config.cycle {
        Cycle::TwoLevel => 1,
        Cycle::V => problem.hierarchy.levels() - 1,
    };
    cycle(&problem.hierarchy, 0, coarsest, config.nu, u, None)
}

/// The seeded initial iterate: `u_0` exact, uniform `[0, 1)` elsewhere.
pub fn initial_iterate(problem: &TimeGridProblem, seed: u64) -> SpaceTime {
    let mut u = SpaceTime::zeros(problem.n_x(), problem.n_t() + 1);
    u.point_mut(0).copy_from_slice(&problem.u0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    u.data[problem.n_x()..].iter_mut().for_each(|x| *x = rng.gen::<f64>());
    u
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start {threads} worker threads: {e}")))
}

/// Iterate until the C-point residual drops by `rel_tol` or `max_iters`
/// cycles have run. Divergence is reported, not raised.
pub fn solve(problem: &TimeGridProblem, config: &MgritConfig) -> Result<(SolveReport, SpaceTime)> {
    config.validate()?;
    let pool = thread_pool(config.threads)?;
    pool.install(|| {
        let start = Instant::now();
        let phi = problem.hierarchy.stepper(0);
        let m = problem.hierarchy.factors()[0];
        let mut u = initial_iterate(problem, config.seed);
        f_relax(phi, m, &mut u, None)?;
        let r0 = {
            let mut relaxed = u.clone();
            for _ in 0..config.nu {
                c_relax(phi, m, &mut relaxed, None)?;
                f_relax(phi, m, &mut relaxed, None)?;
            }
            c_residual_norm(phi, m, &relaxed, None)?
        };
        let mut norms = vec![r0];
        let mut converged = r0 == 0.0;
        while !converged && norms.len() <= config.max_iters {
            iterate(problem, config, &mut u)?;
            let r = c_residual_norm(phi, m, &u, None)?;
            norms.push(r);
            if r <= config.rel_tol * r0 {
                converged = true;
            } else if !r.is_finite() {
                break;
            }
        }
        let iterations = norms.len() - 1;
        let effective_rho = if iterations == 0 {
            0.0
        } else {
            norms[iterations] / norms[iterations - 1]
        };
        Ok((
            SolveReport {
                residual_norms: norms,
                iterations,
                effective_rho,
                converged,
                wall_seconds: start.elapsed().as_secs_f64(),
            },
            u,
        ))
    })
}
