//! Finite-difference and interpolation stencils.
//!
//! Weights come from Fornberg's recursion for differentiating the
//! interpolating polynomial through a set of grid offsets. On top of that sit
//! the upwind first-derivative operators `L_p`, the high-derivative operators
//! used in truncation-error corrections, and the Lagrange weights of the
//! semi-Lagrangian step.

use crate::circulant::CirculantOperator;
use crate::error::{Error, Result};

/// Contiguous stencil `{-left, ..., right}` around a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StencilWindow {
    pub left: usize,
    pub right: usize,
}

impl StencilWindow {
    pub fn new(left: usize, right: usize) -> Self {
        Self { left, right }
    }

    /// Window of the order-`p` upwind first-derivative stencil.
    ///
    /// Odd `p` has a one-point bias to the left, even `p` a two-point bias.
    pub fn upwind(p: usize) -> Self {
        assert!(p >= 1, "upwind order must be positive");
        if p % 2 == 1 {
            let left = (p + 1) / 2;
            Self::new(left, left - 1)
        } else {
            let left = p / 2 + 1;
            Self::new(left, left - 2)
        }
    }

    /// The `p + 1` points closest to a departure point lying `eps` mesh
    /// widths west of the reference (east-neighbour) point.
    ///
    /// For an odd point count the window is centred on the nearer end of the
    /// departure interval; `eps = 1/2` goes to the east end.
    pub fn semi_lagrangian(p: usize, eps: f64) -> Self {
        if p % 2 == 1 {
            Self::new((p + 1) / 2, (p - 1) / 2)
        } else if eps > 0.5 {
            Self::new(p / 2 + 1, p / 2 - 1)
        } else {
            Self::new(p / 2, p / 2)
        }
    }

    pub fn len(&self) -> usize {
        self.left + self.right + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn offsets(&self) -> Vec<i64> {
        (-(self.left as i64)..=self.right as i64).collect()
    }
}

/// Bias of a high-derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bias {
    Symmetric,
    LeftBiased,
}

/// Weights `w_j` with `sum_j w_j v(x + j h) = h^d v^(d)(x + eval_point h)` exactly
/// for polynomials of degree below `offsets.len()`.
pub fn fd_weights(derivative: usize, offsets: &[i64], eval_point: f64) -> Result<Vec<f64>> {
    let n = offsets.len();
    if n < derivative + 1 {
        return Err(Error::input(format!(
            "{n} points cannot resolve a derivative of order {derivative}"
        )));
    }
    for (i, a) in offsets.iter().enumerate() {
        if offsets[..i].contains(a) {
            return Err(Error::input(format!("repeated offset {a}")));
        }
    }
    let x: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let z = eval_point;
    let m = derivative;
    // c[j][k]: weight of node j for the k-th derivative
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    Ok(c.into_iter().map(|row| row[m]).collect())
}

fn circulant_from(window: &[i64], weights: &[f64], n_x: usize) -> Result<CirculantOperator> {
    CirculantOperator::new(n_x, window.iter().copied().zip(weights.iter().copied()))
}

/// The upwind operator `L_p`; `L_p / h` approximates `d/dx` to order `p`.
pub fn upwind_derivative(p: usize, n_x: usize) -> Result<CirculantOperator> {
    if p == 0 {
        return Err(Error::input("upwind order must be at least 1"));
    }
    let window = StencilWindow::upwind(p);
    if n_x <= 2 * window.left {
        return Err(Error::input(format!(
            "n_x = {n_x} too small for the order-{p} upwind stencil"
        )));
    }
    let offsets = window.offsets();
    let weights = fd_weights(1, &offsets, 0.0)?;
    circulant_from(&offsets, &weights, n_x)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Leading error constant of `L_p`: `(-1)^r l! r! / (p+1)!`.
pub fn error_constant_fd(p: usize) -> f64 {
    let w = StencilWindow::upwind(p);
    let sign = if w.right % 2 == 0 { 1.0 } else { -1.0 };
    sign * factorial(w.left) * factorial(w.right) / factorial(p + 1)
}

/// Window of the minimal high-derivative stencil of order `accuracy`.
pub fn high_derivative_window(derivative: usize, accuracy: usize, bias: Bias) -> Result<StencilWindow> {
    if derivative == 0 || accuracy == 0 {
        return Err(Error::input("derivative and accuracy orders must be positive"));
    }
    match bias {
        Bias::Symmetric => {
            if derivative % 2 == 1 || accuracy % 2 == 1 {
                return Err(Error::input(format!(
                    "no centred stencil for derivative {derivative} at order {accuracy}"
                )));
            }
            let half = (derivative + accuracy - 2) / 2;
            Ok(StencilWindow::new(half, half))
        }
        Bias::LeftBiased => {
            let points = derivative + accuracy;
            if points % 2 == 0 {
                Ok(StencilWindow::new(points / 2, points / 2 - 1))
            } else {
                Ok(StencilWindow::new((points + 1) / 2, (points - 3) / 2))
            }
        }
    }
}

/// `D^(d)_s`: unscaled stencil such that `D / h^d` approximates the `d`-th
/// derivative to order `s`.
pub fn high_derivative_operator(
    derivative: usize,
    accuracy: usize,
    bias: Bias,
    n_x: usize,
) -> Result<CirculantOperator> {
    let window = high_derivative_window(derivative, accuracy, bias)?;
    let offsets = window.offsets();
    let weights = fd_weights(derivative, &offsets, 0.0)?;
    circulant_from(&offsets, &weights, n_x)
}

/// `f_{p+1}(z) = prod_{j=-l}^{r} (j + z) / (p+1)!`.
pub fn f_poly(p: usize, window: StencilWindow, z: f64) -> Result<f64> {
    if window.left + window.right != p {
        return Err(Error::input(format!(
            "window {window:?} does not hold {} points",
            p + 1
        )));
    }
    let prod: f64 = window.offsets().iter().map(|&j| j as f64 + z).product();
    Ok(prod / factorial(p + 1))
}

/// Interpolation weights at the point `-eps` on the window's offsets.
pub fn lagrange_weights(window: StencilWindow, eps: f64) -> Vec<f64> {
    fd_weights(0, &window.offsets(), -eps).expect("window offsets are distinct")
}
