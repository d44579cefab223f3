//! Butcher tableaux for the explicit and singly diagonally implicit
//! Runge-Kutta methods used on the fine grid.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this, `1 - z a_kk` is treated as a pole of the stability function.
const POLE_TOL: f64 = 1e-14;

/// Tolerance on the linear order conditions `beta_j = 1/j!`.
const ORDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableauKind {
    Explicit,
    Sdirk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    kind: TableauKind,
    order: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl ButcherTableau {
    /// Validates shape, triangularity and consistency.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, kind: TableauKind, order: usize) -> Result<Self> {
        let s = b.len();
        if s == 0 || a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::Tableau("A must be square with one row per weight".into()));
        }
        for (i, row) in a.iter().enumerate() {
            if row[i + 1..].iter().any(|&x| x != 0.0) {
                return Err(Error::Tableau("A must be lower triangular".into()));
            }
        }
        match kind {
            TableauKind::Explicit => {
                if (0..s).any(|i| a[i][i] != 0.0) {
                    return Err(Error::Tableau("explicit method with nonzero diagonal".into()));
                }
            }
            TableauKind::Sdirk => {
                let gamma = a[0][0];
                if gamma <= 0.0 || (0..s).any(|i| a[i][i] != gamma) {
                    return Err(Error::Tableau("SDIRK diagonal must be constant and positive".into()));
                }
            }
        }
        let sum: f64 = b.iter().sum();
        if (sum - 1.0).abs() > ORDER_TOL {
            return Err(Error::Tableau(format!("weights sum to {sum}, not 1")));
        }
        if order == 0 {
            return Err(Error::Tableau("order must be positive".into()));
        }
        Ok(Self { a, b, kind, order })
    }

    /// Shipped explicit method of order `q` in `1..=5`.
    pub fn erk(q: usize) -> Result<Self> {
        let (a, b) = match q {
            // forward Euler
            1 => (vec![vec![0.0]], vec![1.0]),
            // Heun
            2 => (vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.5, 0.5]),
            // Kutta's third-order method
            3 => (
                vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], vec![-1.0, 2.0, 0.0]],
                vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            ),
            // classical RK4
            4 => (
                vec![
                    vec![0.0, 0.0, 0.0, 0.0],
                    vec![0.5, 0.0, 0.0, 0.0],
                    vec![0.0, 0.5, 0.0, 0.0],
                    vec![0.0, 0.0, 1.0, 0.0],
                ],
                vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            ),
            // Butcher's six-stage fifth-order method
            5 => (
                vec![
                    vec![0.0; 6],
                    vec![0.25, 0.0, 0.0, 0.0, 0.0, 0.0],
                    vec![0.125, 0.125, 0.0, 0.0, 0.0, 0.0],
                    vec![0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
                    vec![3.0 / 16.0, -3.0 / 8.0, 3.0 / 8.0, 9.0 / 16.0, 0.0, 0.0],
                    vec![-3.0 / 7.0, 8.0 / 7.0, 6.0 / 7.0, -12.0 / 7.0, 8.0 / 7.0, 0.0],
                ],
                [7.0, 0.0, 32.0, 12.0, 32.0, 7.0].iter().map(|x| x / 90.0).collect(),
            ),
            _ => return Err(Error::Tableau(format!("no explicit method of order {q}"))),
        };
        Self::new(a, b, TableauKind::Explicit, q)
    }

    /// Shipped A-stable SDIRK method of order `q` in `1..=5`.
    pub fn sdirk(q: usize) -> Result<Self> {
        let (a, b) = match q {
            // backward Euler
            1 => (vec![vec![1.0]], vec![1.0]),
            // two-stage, L-stable, gamma = 1 - 1/sqrt(2)
            2 => {
                let g = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
                (vec![vec![g, 0.0], vec![1.0 - g, g]], vec![1.0 - g, g])
            }
            // Alexander's three-stage, L-stable
            3 => {
                let g = 0.435_866_521_508_459;
                let b1 = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
                let b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
                (
                    vec![
                        vec![g, 0.0, 0.0],
                        vec![(1.0 - g) / 2.0, g, 0.0],
                        vec![b1, b2, g],
                    ],
                    vec![b1, b2, g],
                )
            }
            // Hairer-Wanner five-stage, L-stable, stiffly accurate
            4 => {
                let a = vec![
                    vec![0.25, 0.0, 0.0, 0.0, 0.0],
                    vec![0.5, 0.25, 0.0, 0.0, 0.0],
                    vec![17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0],
                    vec![371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0],
                    vec![25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
                ];
                let b = a[4].clone();
                (a, b)
            }
            5 => return Self::sdirk5(),
            _ => return Err(Error::Tableau(format!("no SDIRK method of order {q}"))),
        };
        Self::new(a, b, TableauKind::Sdirk, q)
    }

    /// Five-stage SDIRK built around the diagonal of the Kennedy-Carpenter
    /// fifth-order L-stable family.
    ///
    /// For linear autonomous problems the stability function of a five-stage
    /// SDIRK method of linear order five depends on the diagonal alone, so
    /// the strictly lower part is a free choice (uniform rows with fixed
    /// abscissae) and `b` solves the linear order conditions. Nonlinear
    /// order conditions are not enforced.
    fn sdirk5() -> Result<Self> {
        let g = 4_024_571_134_387.0 / 14_474_071_345_096.0;
        let nodes = [g, 1.85, 0.65, -0.5, -0.3];
        let s = nodes.len();
        let mut a = vec![vec![0.0; s]; s];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = g;
            for x in row.iter_mut().take(i) {
                *x = (nodes[i] - g) / i as f64;
            }
        }
        // Row j of the system: (A^j 1)^T b = 1/(j+1)!
        let mut rows = Vec::with_capacity(s);
        let mut v = vec![1.0; s];
        for j in 0..s {
            let mut row = v.clone();
            row.push(1.0 / factorial(j + 1));
            rows.push(row);
            v = mat_vec(&a, &v);
        }
        let b = solve_dense(rows)?;
        Self::new(a, b, TableauKind::Sdirk, 5)
    }

    pub fn kind(&self) -> TableauKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn name(&self) -> String {
        match self.kind {
            TableauKind::Explicit => format!("ERK{}", self.order),
            TableauKind::Sdirk => format!("SDIRK{}", self.order),
        }
    }

    /// Taylor coefficient `beta_j = b^T A^(j-1) 1` of the stability function.
    pub fn beta(&self, j: usize) -> f64 {
        assert!(j >= 1, "Taylor coefficients start at j = 1");
        let mut v = vec![1.0; self.stages()];
        for _ in 1..j {
            v = mat_vec(&self.a, &v);
        }
        dot(&self.b, &v)
    }

    /// `beta_{q+1} - 1/(q+1)!` after checking the linear order conditions.
    pub fn error_constant(&self) -> Result<f64> {
        for j in 1..=self.order {
            let beta = self.beta(j);
            let exact = 1.0 / factorial(j);
            if (beta - exact).abs() > ORDER_TOL {
                return Err(Error::Tableau(format!(
                    "{}: beta_{j} = {beta:e} differs from 1/{j}!",
                    self.name()
                )));
            }
        }
        Ok(self.beta(self.order + 1) - 1.0 / factorial(self.order + 1))
    }

    /// `R(z) = 1 + z b^T (I - zA)^{-1} 1`, solved stage by stage.
    pub fn stability_function(&self, z: Complex64) -> Result<Complex64> {
        let s = self.stages();
        let mut k = vec![Complex64::new(0.0, 0.0); s];
        for i in 0..s {
            let denom = 1.0 - z * self.a[i][i];
            if denom.norm() < POLE_TOL {
                return Err(Error::input(format!("z = {z} is a pole of {}", self.name())));
            }
            let rhs: Complex64 = (0..i).map(|j| k[j] * self.a[i][j]).sum::<Complex64>() * z + 1.0;
            k[i] = rhs / denom;
        }
        let sum: Complex64 = k.iter().zip(&self.b).map(|(ki, bi)| ki * bi).sum();
        Ok(1.0 + z * sum)
    }
}

fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut rows: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = rows.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()))
            .expect("nonempty range");
        if rows[pivot][col].abs() < 1e-14 {
            return Err(Error::Tableau("singular order-condition system".into()));
        }
        rows.swap(col, pivot);
        for r in col + 1..n {
            let f = rows[r][col] / rows[col][col];
            for k in col..=n {
                rows[r][k] -= f * rows[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| rows[r][k] * x[k]).sum();
        x[r] = (rows[r][n] - tail) / rows[r][r];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Leading digits of the error constants of the shipped methods.
    const ERK_CONSTANTS: [f64; 5] = [-5e-1, -1.6667e-1, -4.1667e-2, -8.3333e-3, -6.0764e-4];
    const SDIRK_CONSTANTS: [f64; 5] = [5e-1, 4.0440e-2, -2.5897e-2, -8.4635e-4, 5.3005e-4];

    fn four_digits(a: f64, b: f64) -> bool {
        (a - b).abs() <= 5e-5 * b.abs()
    }

    #[test]
    fn error_constants() {
        for q in 1..=5 {
            let e = ButcherTableau::erk(q).unwrap().error_constant().unwrap();
            assert!(four_digits(e, ERK_CONSTANTS[q - 1]), "ERK{q}: {e}");
            let e = ButcherTableau::sdirk(q).unwrap().error_constant().unwrap();
            assert!(four_digits(e, SDIRK_CONSTANTS[q - 1]), "SDIRK{q}: {e}");
        }
    }

    #[test]
    fn simple_stability_functions() {
        let z = Complex64::new(-1.0, 0.0);
        let erk1 = ButcherTableau::erk(1).unwrap();
        assert_abs_diff_eq!(erk1.stability_function(z).unwrap().norm(), 0.0);
        let sdirk1 = ButcherTableau::sdirk(1).unwrap();
        assert_abs_diff_eq!(sdirk1.stability_function(z).unwrap().re, 0.5, epsilon = 1e-15);
        assert!(sdirk1.stability_function(Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn sdirk_methods_are_a_stable() {
        for q in 1..=5 {
            let tab = ButcherTableau::sdirk(q).unwrap();
            for k in 0..=4000 {
                let y = -200.0 + 0.1 * k as f64;
                for x in [0.0, -0.5, -10.0] {
                    let r = tab.stability_function(Complex64::new(x, y)).unwrap();
                    assert!(r.norm() <= 1.0 + 1e-12, "SDIRK{q} at {x}+{y}i: {}", r.norm());
                }
            }
        }
    }

    #[test]
    fn taylor_coefficients_by_richardson_fit() {
        // The remainder R(z) - sum_{j<=q} z^j/j! - beta_{q+1} z^{q+1} must be
        // O(z^{q+2}): halving z divides it by about 2^{q+2}.
        for tab in (1..=5).flat_map(|q| [ButcherTableau::erk(q).unwrap(), ButcherTableau::sdirk(q).unwrap()]) {
            let q = tab.order();
            let beta = tab.beta(q + 1);
            let remainder = |z: f64| {
                let r = tab.stability_function(Complex64::new(z, 0.0)).unwrap().re;
                let poly: f64 = (0..=q).map(|j| z.powi(j as i32) / factorial(j)).sum();
                r - poly - beta * z.powi(q as i32 + 1)
            };
            let (z1, z2) = (0.2, 0.1);
            let (r1, r2) = (remainder(z1), remainder(z2));
            if r1.abs() < 1e-14 {
                continue;
            }
            let slope = (r1.abs() / r2.abs()).log2();
            assert!((slope - (q + 2) as f64).abs() < 0.35, "{}: slope {slope}", tab.name());
        }
    }

    #[test]
    fn rejects_malformed_tableaux() {
        assert!(ButcherTableau::new(vec![vec![0.0, 1.0], vec![0.0, 0.0]], vec![0.5, 0.5], TableauKind::Explicit, 1).is_err());
        assert!(ButcherTableau::new(vec![vec![0.0]], vec![0.9], TableauKind::Explicit, 1).is_err());
        assert!(ButcherTableau::new(vec![vec![0.5, 0.0], vec![0.0, 0.4]], vec![0.5, 0.5], TableauKind::Sdirk, 1).is_err());
        let forward_euler_as_second_order =
            ButcherTableau::new(vec![vec![0.0]], vec![1.0], TableauKind::Explicit, 2).unwrap();
        assert!(matches!(forward_euler_as_second_order.error_constant(), Err(Error::Tableau(_))));
    }
}
