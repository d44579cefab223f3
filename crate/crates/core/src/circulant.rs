//! Periodic constant-coefficient operators on the spatial mesh.
//!
//! Every one-step map in this crate (fine steppers, semi-Lagrangian steps,
//! derivative stencils, correction matrices) is a circulant matrix. We keep
//! them in sparse stencil form: row `i` of the matrix has `weight` at column
//! `(i + offset) mod n_x`. The Fourier symbol `sum_j w_j exp(i j omega)` is the
//! eigenvalue belonging to the mode `exp(i omega x / h)`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Weights smaller than this are dropped after algebraic operations.
pub const PRUNE_TOL: f64 = 1e-15;

/// Symbols below this magnitude are treated as exact zeros by the direct solver.
pub const SINGULAR_TOL: f64 = 1e-14;

/// Stencils wider than this are applied through the FFT instead of directly.
const DIRECT_APPLY_MAX_WIDTH: usize = 32;

type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn fft_plans(n: usize) -> FftPair {
    static PLANS: OnceLock<Mutex<HashMap<usize, FftPair>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

fn forward(v: &[f64]) -> Vec<Complex64> {
    let (fwd, _) = fft_plans(v.len());
    let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fwd.process(&mut buf);
    buf
}

/// Inverse transform including the `1/n` normalisation; returns real parts.
fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    let (_, inv) = fft_plans(n);
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|z| z.re * scale).collect()
}

/// Admissible frequency `2 pi k / n` mapped into `[-pi, pi)`.
pub fn admissible_frequency(k: usize, n: usize) -> f64 {
    let w = 2.0 * PI * k as f64 / n as f64;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// A circulant matrix stored as a periodic stencil.
#[derive(Debug, Clone)]
pub struct CirculantOperator {
    n_x: usize,
    /// Sorted by offset, offsets distinct.
    stencil: Vec<(i64, f64)>,
    /// Symbol at the admissible frequencies `2 pi k / n_x`, `k = 0..n_x`.
    spectrum: OnceLock<Arc<[Complex64]>>,
}

impl PartialEq for CirculantOperator {
    fn eq(&self, other: &Self) -> bool {
        self.n_x == other.n_x && self.stencil == other.stencil
    }
}

impl CirculantOperator {
    pub fn new(n_x: usize, stencil: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        if n_x == 0 {
            return Err(Error::input("n_x must be positive"));
        }
        let mut map = BTreeMap::new();
        for (offset, weight) in stencil {
            if offset.unsigned_abs() as usize >= n_x {
                return Err(Error::input(format!(
                    "stencil offset {offset} does not fit on a periodic mesh of {n_x} points"
                )));
            }
            if map.insert(offset, weight).is_some() {
                return Err(Error::input(format!("repeated stencil offset {offset}")));
            }
        }
        Ok(Self::from_sorted(n_x, map.into_iter().collect()))
    }

    fn from_sorted(n_x: usize, stencil: Vec<(i64, f64)>) -> Self {
        Self {
            n_x,
            stencil,
            spectrum: OnceLock::new(),
        }
    }

    /// Merge possibly repeated offsets (summing weights) and prune tiny weights.
    fn from_terms(n_x: usize, terms: impl IntoIterator<Item = (i64, f64)>) -> Self {
        let mut map: BTreeMap<i64, f64> = BTreeMap::new();
        for (offset, weight) in terms {
            *map.entry(offset).or_insert(0.0) += weight;
        }
        let stencil = map
            .into_iter()
            .filter(|(_, w)| w.abs() >= PRUNE_TOL)
            .collect();
        Self::from_sorted(n_x, stencil)
    }

    pub fn identity(n_x: usize) -> Self {
        Self::from_sorted(n_x, vec![(0, 1.0)])
    }

    /// The cyclic shift `(Sv)_i = v_{i + offset}`.
    pub fn shift(n_x: usize, offset: i64) -> Result<Self> {
        Self::new(n_x, [(offset, 1.0)])
    }

    /// Build the circulant whose symbol at `2 pi k / n_x` is `values[k]`.
    ///
    /// Offsets are placed in `[-n_x/2, (n_x-1)/2]`; weights (real parts of
    /// the inverse transform) below `prune` are dropped.
    pub fn from_symbol_values(values: &[Complex64], prune: f64) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::input("empty symbol"));
        }
        let (fwd, _) = fft_plans(n);
        let mut buf = values.to_vec();
        fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        let half = (n as i64 - 1) / 2;
        let terms = buf.iter().enumerate().filter_map(|(j, z)| {
            let w = z.re * scale;
            if w.abs() < prune {
                return None;
            }
            let j = j as i64;
            let offset = if j > half { j - n as i64 } else { j };
            Some((offset, w))
        });
        let mut op = Self::from_terms(n, terms);
        if op.stencil.is_empty() {
            op.stencil.push((0, 0.0));
        }
        Ok(op)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn stencil(&self) -> &[(i64, f64)] {
        &self.stencil
    }

    pub fn weight(&self, offset: i64) -> f64 {
        self.stencil
            .binary_search_by_key(&offset, |&(o, _)| o)
            .map(|i| self.stencil[i].1)
            .unwrap_or(0.0)
    }

    pub fn symbol(&self, omega: f64) -> Complex64 {
        self.stencil
            .iter()
            .map(|&(j, w)| Complex64::from_polar(w, j as f64 * omega))
            .sum()
    }

    /// Symbol sampled at the admissible frequencies `2 pi k / n_x` (cached).
    pub fn spectrum(&self) -> Arc<[Complex64]> {
        self.spectrum
            .get_or_init(|| {
                let n = self.n_x;
                let mut dense = vec![Complex64::new(0.0, 0.0); n];
                for &(j, w) in &self.stencil {
                    dense[j.rem_euclid(n as i64) as usize].re += w;
                }
                // sum_j w_j exp(+2 pi i j k / n) is an unnormalised inverse DFT.
                let (_, inv) = fft_plans(n);
                inv.process(&mut dense);
                dense.into()
            })
            .clone()
    }

    /// Largest symbol modulus over `samples` uniform frequencies in `[-pi, pi)`.
    pub fn max_symbol_modulus(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| self.symbol(-PI + 2.0 * PI * k as f64 / samples as f64).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        let mut out = vec![0.0; self.n_x];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// `out = op * v`.
    ///
    /// # Panics
    /// If `v` or `out` does not have length `n_x`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n_x;
        assert_eq!(v.len(), n, "input length does not match n_x");
        assert_eq!(out.len(), n, "output length does not match n_x");
        if self.stencil.len() > DIRECT_APPLY_MAX_WIDTH {
            let spectrum = self.spectrum();
            let mut hat = forward(v);
            for (z, s) in hat.iter_mut().zip(spectrum.iter()) {
                *z *= s;
            }
            out.copy_from_slice(&inverse_real(hat));
            return;
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(offset, w) in &self.stencil {
            let s = offset.rem_euclid(n as i64) as usize;
            let (head, tail) = out.split_at_mut(n - s);
            for (o, x) in head.iter_mut().zip(&v[s..]) {
                *o += w * x;
            }
            for (o, x) in tail.iter_mut().zip(&v[..s]) {
                *o += w * x;
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_x {
            return Err(Error::Dimension {
                expected: self.n_x,
                actual: len,
            });
        }
        Ok(())
    }

    fn check_same_size(&self, other: &Self) -> Result<()> {
        if self.n_x != other.n_x {
            return Err(Error::Dimension {
                expected: self.n_x,
                actual: other.n_x,
            });
        }
        Ok(())
    }

    /// Smallest symbol modulus over admissible frequencies, with its frequency.
    pub fn min_admissible_symbol(&self) -> (f64, f64) {
        let spectrum = self.spectrum();
        spectrum
            .iter()
            .enumerate()
            .map(|(k, s)| (s.norm(), admissible_frequency(k, self.n_x)))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }

    /// Exact solve by Fourier diagonalisation.
    pub fn solve_direct(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let (magnitude, omega) = self.min_admissible_symbol();
        if magnitude < SINGULAR_TOL {
            return Err(Error::Singular {
                omega,
                magnitude,
                context: String::new(),
            });
        }
        let spectrum = self.spectrum();
        let mut hat = forward(b);
        for (z, s) in hat.iter_mut().zip(spectrum.iter()) {
            *z /= s;
        }
        Ok(inverse_real(hat))
    }

    /// Unrestarted, unpreconditioned GMRES from a zero initial guess.
    pub fn solve_gmres(&self, b: &[f64], rel_tol: f64, max_iters: usize) -> Result<GmresOutcome> {
        self.check_len(b.len())?;
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::input(format!("GMRES tolerance {rel_tol} not in (0, 1)")));
        }
        Ok(gmres(self, b, rel_tol, max_iters))
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_size(other)?;
        let n = self.n_x as i64;
        let work = self.stencil.len() * other.stencil.len();
        if work > 8 * self.n_x {
            let values: Vec<Complex64> = self
                .spectrum()
                .iter()
                .zip(other.spectrum().iter())
                .map(|(a, b)| a * b)
                .collect();
            return Self::from_symbol_values(&values, PRUNE_TOL);
        }
        let terms = self.stencil.iter().flat_map(|&(j, a)| {
            other.stencil.iter().map(move |&(k, b)| {
                let mut o = j + k;
                if o >= n {
                    o -= n;
                } else if o <= -n {
                    o += n;
                }
                (o, a * b)
            })
        });
        Ok(Self::from_terms(self.n_x, terms))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_size(other)?;
        let terms = self.stencil.iter().chain(other.stencil.iter()).copied();
        Ok(Self::from_terms(self.n_x, terms))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(self.n_x, self.stencil.iter().map(|&(j, w)| (j, s * w)))
    }

    pub fn power(&self, m: u32) -> Self {
        let mut result = Self::identity(self.n_x);
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = result.compose(&base).expect("same n_x");
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base).expect("same n_x");
            }
        }
        result
    }

    /// Dense row-major matrix (for small `n_x`; used by tests and diagnostics).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_x;
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            for &(j, w) in &self.stencil {
                row[(i as i64 + j).rem_euclid(n as i64) as usize] += w;
            }
        }
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmresStatus {
    Converged,
    MaxIterations,
    /// The Krylov space became invariant; the iterate is the exact
    /// minimiser over it.
    Breakdown,
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub status: GmresStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn gmres(op: &CirculantOperator, b: &[f64], rel_tol: f64, max_iters: usize) -> GmresOutcome {
    let n = b.len();
    let beta = norm(b);
    if beta == 0.0 {
        return GmresOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            status: GmresStatus::Converged,
        };
    }
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / beta).collect()];
    // Hessenberg columns after Givens rotation (upper triangular part).
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut rotations: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut status = GmresStatus::MaxIterations;
    let mut w = vec![0.0; n];

    for k in 0..max_iters {
        op.apply_into(&basis[k], &mut w);
        let mut h = Vec::with_capacity(k + 2);
        for v in &basis {
            let hij = dot(&w, v);
            w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hij * vi);
            h.push(hij);
        }
        let h_next = norm(&w);
        h.push(h_next);
        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = c * a + s * b;
            h[i + 1] = -s * a + c * b;
        }
        let (a, bb) = (h[k], h[k + 1]);
        let rho = a.hypot(bb);
        let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (a / rho, bb / rho) };
        h[k] = rho;
        h[k + 1] = 0.0;
        rotations.push((c, s));
        g.push(-s * g[k]);
        g[k] *= c;
        h.truncate(k + 1);
        r.push(h);

        let residual = g[k + 1].abs() / beta;
        let breakdown = h_next <= 1e-14 * beta;
        if residual <= rel_tol || breakdown {
            status = if residual <= rel_tol {
                GmresStatus::Converged
            } else {
                GmresStatus::Breakdown
            };
            break;
        }
        basis.push(w.iter().map(|x| x / h_next).collect());
    }

    let m = r.len();
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for j in i + 1..m {
            acc -= r[j][i] * y[j];
        }
        y[i] = if r[i][i] != 0.0 { acc / r[i][i] } else { 0.0 };
    }
    let mut x = vec![0.0; n];
    for (yj, v) in y.iter().zip(&basis) {
        x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += yj * vi);
    }
    let mut ax = vec![0.0; n];
    op.apply_into(&x, &mut ax);
    let res: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    GmresOutcome {
        solution: x,
        iterations: m,
        relative_residual: norm(&res) / beta,
        status,
    }
}
