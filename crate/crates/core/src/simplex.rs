//! Dense revised simplex with Bland's rule.
//!
//! Problems handled here are tiny (a handful of rows), so the basis matrix is
//! refactorized at every iteration instead of maintaining an eta file.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-9;

/// Why an LP has no optimal solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpFailure {
    Infeasible,
    Unbounded,
    IterationLimit,
    /// Basis matrix became numerically singular.
    Numerical,
}

/// Optimal solution of `min cᵀx  s.t. Ax = b, x ≥ 0`.
#[derive(Debug, Clone)]
pub struct StandardSolution {
    pub x: Vec<f64>,
    /// Basic column for each row kept in the problem.
    pub basis: Vec<usize>,
    /// Simplex multipliers per original row. Rows found redundant get zero.
    pub multipliers: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Work {
    /// `[A | I]` with rows sign-flipped so the right-hand side is nonnegative.
    a: DMatrix<f64>,
    b: Vec<f64>,
    flipped: Vec<bool>,
    rows: Vec<usize>,
    basis: Vec<usize>,
    n: usize,
    iterations: usize,
}

impl Work {
    fn basis_matrix(&self) -> DMatrix<f64> {
        let k = self.rows.len();
        DMatrix::from_fn(k, k, |r, c| self.a[(self.rows[r], self.basis[c])])
    }

    fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&r| self.b[r]))
    }

    fn column(&self, j: usize) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&r| self.a[(r, j)]))
    }

    /// Runs simplex iterations for `cost` over columns accepted by `allowed`.
    fn iterate(&mut self, cost: &[f64], allowed: impl Fn(usize) -> bool) -> Result<(), LpFailure> {
        let total = self.a.ncols();
        let limit = 200 * (total + self.rows.len()) + 1000;
        let scale = 1.0 + cost.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        loop {
            if self.iterations > limit {
                return Err(LpFailure::IterationLimit);
            }
            self.iterations += 1;
            if self.rows.is_empty() {
                return Ok(());
            }
            let bmat = self.basis_matrix();
            let lu = bmat.clone().lu();
            let xb = lu.solve(&self.rhs()).ok_or(LpFailure::Numerical)?;
            let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| cost[j]));
            let pi = bmat.transpose().lu().solve(&cb).ok_or(LpFailure::Numerical)?;

            let mut entering = None;
            for (j, &cj) in cost.iter().enumerate().take(total) {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut d = cj;
                for (k, &r) in self.rows.iter().enumerate() {
                    d -= pi[k] * self.a[(r, j)];
                }
                if d < -REDUCED_COST_TOL * scale {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return Ok(());
            };

            let u = lu.solve(&self.column(j)).ok_or(LpFailure::Numerical)?;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..u.len() {
                if u[i] <= PIVOT_TOL {
                    continue;
                }
                let t = xb[i].max(0.0) / u[i];
                leave = match leave {
                    None => Some((i, t)),
                    Some((bi, bt)) => {
                        let tie = (t - bt).abs() <= 1e-12 * (1.0 + bt.abs());
                        if t < bt && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, t))
                        } else {
                            Some((bi, bt))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Err(LpFailure::Unbounded);
            };
            self.basis[r] = j;
        }
    }

    /// Pivots basic artificials out after phase one, dropping redundant rows.
    fn expel_artificials(&mut self) -> Result<(), LpFailure> {
        let mut pos = 0;
        while pos < self.basis.len() {
            if self.basis[pos] < self.n {
                pos += 1;
                continue;
            }
            let bmat = self.basis_matrix();
            let mut unit = DVector::zeros(self.rows.len());
            unit[pos] = 1.0;
            let v = bmat.transpose().lu().solve(&unit).ok_or(LpFailure::Numerical)?;
            let replacement = (0..self.n).filter(|j| !self.basis.contains(j)).find(|&j| {
                let alpha: f64 = self.rows.iter().enumerate().map(|(k, &r)| v[k] * self.a[(r, j)]).sum();
                alpha.abs() > 1e-7
            });
            match replacement {
                Some(j) => {
                    self.basis[pos] = j;
                    pos += 1;
                }
                None => {
                    self.rows.remove(pos);
                    self.basis.remove(pos);
                }
            }
        }
        Ok(())
    }
}

/// Solves `min cᵀx  s.t. Ax = b, x ≥ 0` by two-phase revised simplex.
pub fn solve_standard(a: &DMatrix<f64>, b: &[f64], c: &[f64]) -> Result<StandardSolution, LpFailure> {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "rhs length");
    assert_eq!(c.len(), n, "cost length");

    let flipped: Vec<bool> = b.iter().map(|&v| v < 0.0).collect();
    let mut work_a = DMatrix::zeros(m, n + m);
    for i in 0..m {
        let s = if flipped[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            work_a[(i, j)] = s * a[(i, j)];
        }
        work_a[(i, n + i)] = 1.0;
    }
    let mut work = Work {
        a: work_a,
        b: b.iter().map(|v| v.abs()).collect(),
        flipped,
        rows: (0..m).collect(),
        basis: (n..n + m).collect(),
        n,
        iterations: 0,
    };

    let phase_one: Vec<f64> = (0..n + m).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    work.iterate(&phase_one, |_| true)?;
    let xb = if work.rows.is_empty() {
        DVector::zeros(0)
    } else {
        work.basis_matrix().lu().solve(&work.rhs()).ok_or(LpFailure::Numerical)?
    };
    let infeas: f64 = work
        .basis
        .iter()
        .zip(xb.iter())
        .filter(|(&j, _)| j >= n)
        .map(|(_, v)| v.abs())
        .sum();
    let bscale = 1.0 + b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if infeas > FEASIBILITY_TOL * bscale {
        return Err(LpFailure::Infeasible);
    }
    work.expel_artificials()?;

    let phase_two: Vec<f64> = (0..n + m).map(|j| if j < n { c[j] } else { 0.0 }).collect();
    work.iterate(&phase_two, |j| j < n)?;

    let mut x = vec![0.0; n];
    let mut multipliers = vec![0.0; m];
    if !work.rows.is_empty() {
        let bmat = work.basis_matrix();
        let xb = bmat.clone().lu().solve(&work.rhs()).ok_or(LpFailure::Numerical)?;
        for (k, &j) in work.basis.iter().enumerate() {
            x[j] = xb[k].max(0.0);
        }
        let cb = DVector::from_iterator(work.basis.len(), work.basis.iter().map(|&j| c[j]));
        let pi = bmat.transpose().lu().solve(&cb).ok_or(LpFailure::Numerical)?;
        for (k, &r) in work.rows.iter().enumerate() {
            multipliers[r] = if work.flipped[r] { -pi[k] } else { pi[k] };
        }
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(StandardSolution {
        x,
        basis: work.basis.clone(),
        multipliers,
        objective,
        iterations: work.iterations,
    })
}

/// Optimal solution of `min cᵀz  s.t. Gz ≤ h` with `z` free.
#[derive(Debug, Clone)]
pub struct InequalitySolution {
    pub z: Vec<f64>,
    /// Nonnegative multiplier per inequality row.
    pub duals: Vec<f64>,
    /// Rows forming the optimal basis.
    pub basis: Vec<usize>,
    pub objective: f64,
}

/// Solves an inequality-form LP through its standard-form dual
/// `min hᵀy  s.t. Gᵀy = -c, y ≥ 0`. The simplex multipliers of the dual are
/// the primal point, so the optimum is a vertex with exact duals.
pub fn solve_inequality(c: &[f64], g: &DMatrix<f64>, h: &[f64]) -> Result<InequalitySolution, LpFailure> {
    let (m, d) = g.shape();
    assert_eq!(c.len(), d, "cost length");
    assert_eq!(h.len(), m, "rhs length");
    let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
    let gt = g.transpose();
    let sol = match solve_standard(&gt, &neg_c, h) {
        Ok(s) => s,
        Err(LpFailure::Infeasible) => return Err(LpFailure::Unbounded),
        Err(LpFailure::Unbounded) => return Err(LpFailure::Infeasible),
        Err(e) => return Err(e),
    };
    let z = sol.multipliers;
    let objective = z.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(InequalitySolution {
        z,
        duals: sol.x,
        basis: sol.basis,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_form_textbook() {
        // min -x1 - 2x2  s.t. x1 + x2 + s1 = 4, x1 + 3x2 + s2 = 6
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0]);
        let sol = solve_standard(&a, &[4.0, 6.0], &[-1.0, -2.0, 0.0, 0.0]).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
        assert!((sol.objective + 5.0).abs() < 1e-9);
    }

    #[test]
    fn inequality_form_box() {
        // max x + y over the unit box
        let g = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let sol = solve_inequality(&[-1.0, -1.0], &g, &[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-9 && (sol.z[1] - 1.0).abs() < 1e-9);
        assert!((sol.duals[0] - 1.0).abs() < 1e-9 && (sol.duals[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        assert_eq!(
            solve_inequality(&[1.0], &g, &[0.0, -1.0]).unwrap_err(),
            LpFailure::Infeasible
        );
        let g = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert_eq!(solve_inequality(&[1.0], &g, &[3.0]).unwrap_err(), LpFailure::Unbounded);
    }

    #[test]
    fn redundant_equality_rows() {
        // x1 + x2 = 2 stated twice
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let sol = solve_standard(&a, &[2.0, 2.0], &[1.0, 3.0]).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && sol.x[1].abs() < 1e-9);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Beale-style cycling example; Bland's rule must terminate.
        let a = DMatrix::from_row_slice(
            3,
            7,
            &[
                0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0, //
                0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        let sol = solve_standard(&a, &[0.0, 0.0, 1.0], &[-0.75, 20.0, -0.5, 6.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((sol.objective + 1.25).abs() < 1e-9);
    }
}
