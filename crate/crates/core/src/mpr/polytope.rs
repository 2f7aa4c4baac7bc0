//! Half-space polytopes `{x : G·x ≤ h}` and the LPs used to inspect them.

use nalgebra::DMatrix;

use crate::simplex::{solve_inequality, LpFailure};

/// Relative tolerance used when comparing a row value with its bound.
pub const REDUNDANCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

/// Outcome of row normalization.
pub enum Normalized {
    Ok(Polytope),
    /// A zero row with a negative bound: the set is empty.
    Empty,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Polytope {
    pub fn new(g: Vec<Vec<f64>>, h: Vec<f64>) -> Self {
        assert_eq!(g.len(), h.len());
        Polytope { g, h }
    }

    pub fn dim(&self) -> usize {
        self.g.first().map_or(0, |r| r.len())
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Scales rows to unit norm, drops zero rows and merges parallel duplicates.
    pub fn normalized(&self) -> Normalized {
        let scale = 1.0 + self.g.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut g: Vec<Vec<f64>> = Vec::new();
        let mut h: Vec<f64> = Vec::new();
        for (row, &rhs) in self.g.iter().zip(&self.h) {
            let n = norm(row);
            if n <= 1e-10 * scale {
                if rhs < -1e-7 * (1.0 + rhs.abs()) {
                    return Normalized::Empty;
                }
                continue;
            }
            let unit: Vec<f64> = row.iter().map(|v| v / n).collect();
            let b = rhs / n;
            match g.iter().position(|r| r.iter().zip(&unit).all(|(a, c)| (a - c).abs() < 1e-9)) {
                Some(k) => h[k] = h[k].min(b),
                None => {
                    g.push(unit);
                    h.push(b);
                }
            }
        }
        Normalized::Ok(Polytope { g, h })
    }

    /// Appends the rows of an axis-aligned box.
    pub fn with_box(&self, lower: &[f64], upper: &[f64]) -> Polytope {
        let d = lower.len();
        let mut out = self.clone();
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            out.g.push(e.clone());
            out.h.push(upper[k]);
            e[k] = -1.0;
            out.g.push(e);
            out.h.push(-lower[k]);
        }
        out
    }

    fn matrix(rows: &[&Vec<f64>], extra: usize) -> DMatrix<f64> {
        let d = rows.first().map_or(0, |r| r.len());
        DMatrix::from_fn(rows.len(), d + extra, |i, j| if j < d { rows[i][j] } else { 0.0 })
    }

    /// Largest value of `c·x` over the polytope, `None` when unbounded.
    pub fn maximize(&self, c: &[f64]) -> Result<Option<(Vec<f64>, f64)>, LpFailure> {
        let rows: Vec<&Vec<f64>> = self.g.iter().collect();
        let g = Self::matrix(&rows, 0);
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        match solve_inequality(&neg, &g, &self.h) {
            Ok(sol) => {
                let v = dot(c, &sol.z);
                Ok(Some((sol.z, v)))
            }
            Err(LpFailure::Unbounded) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Indices of a minimal subset of rows describing the same set.
    ///
    /// Row `i` is dropped when maximizing its left-hand side over the other
    /// surviving rows cannot exceed its bound.
    pub fn irredundant_rows(&self) -> Vec<usize> {
        let mut kept: Vec<usize> = (0..self.len()).collect();
        let mut i = 0;
        while i < kept.len() {
            let row = kept[i];
            let others: Vec<usize> = kept.iter().copied().filter(|&k| k != row).collect();
            let sub = Polytope {
                g: others.iter().map(|&k| self.g[k].clone()).collect(),
                h: others.iter().map(|&k| self.h[k]).collect(),
            };
            let redundant = if others.is_empty() {
                false
            } else {
                match sub.maximize(&self.g[row]) {
                    Ok(Some((_, v))) => v <= self.h[row] + REDUNDANCY_TOL * (1.0 + self.h[row].abs()),
                    _ => false,
                }
            };
            if redundant {
                kept.remove(i);
            } else {
                i += 1;
            }
        }
        kept
    }

    pub fn select(&self, rows: &[usize]) -> Polytope {
        Polytope {
            g: rows.iter().map(|&k| self.g[k].clone()).collect(),
            h: rows.iter().map(|&k| self.h[k]).collect(),
        }
    }

    /// Center and radius of the largest inscribed ball, radius capped at `cap`.
    pub fn chebyshev_center(&self, cap: f64) -> Option<(Vec<f64>, f64)> {
        let d = self.dim();
        let mut g = DMatrix::zeros(self.len() + 1, d + 1);
        let mut h = self.h.clone();
        for (i, row) in self.g.iter().enumerate() {
            for j in 0..d {
                g[(i, j)] = row[j];
            }
            g[(i, d)] = norm(row);
        }
        g[(self.len(), d)] = 1.0;
        h.push(cap);
        let mut c = vec![0.0; d + 1];
        c[d] = -1.0;
        let sol = solve_inequality(&c, &g, &h).ok()?;
        let r = sol.z[d];
        Some((sol.z[..d].to_vec(), r))
    }

    /// Chebyshev center of facet `i` measured inside its own hyperplane.
    ///
    /// Rows other than `i` may be loosened by `relax` to absorb rounding when
    /// two polytopes share the hyperplane.
    pub fn facet_center(&self, i: usize, cap: f64, relax: f64) -> Option<(Vec<f64>, f64)> {
        let d = self.dim();
        let n_i = &self.g[i];
        let nn = dot(n_i, n_i);
        let m = self.len();
        let mut g = DMatrix::zeros(m + 2, d + 1);
        let mut h = Vec::with_capacity(m + 2);
        for (k, row) in self.g.iter().enumerate() {
            if k == i {
                for j in 0..d {
                    g[(k, j)] = row[j];
                }
                h.push(self.h[k]);
                continue;
            }
            let proj = dot(row, n_i) / nn;
            let tangential: Vec<f64> = row.iter().zip(n_i).map(|(a, b)| a - proj * b).collect();
            for j in 0..d {
                g[(k, j)] = row[j];
            }
            g[(k, d)] = norm(&tangential);
            h.push(self.h[k] + relax * (1.0 + self.h[k].abs()));
        }
        for j in 0..d {
            g[(m, j)] = -n_i[j];
        }
        h.push(-self.h[i]);
        g[(m + 1, d)] = 1.0;
        h.push(cap);
        let mut c = vec![0.0; d + 1];
        c[d] = -1.0;
        let sol = solve_inequality(&c, &g, &h).ok()?;
        Some((sol.z[..d].to_vec(), sol.z[d]))
    }

    /// Smallest slack `h_i − G_i·x`; positive means strictly inside.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.g
            .iter()
            .zip(&self.h)
            .map(|(row, &b)| b - dot(row, x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.margin(x) >= -tol
    }

    /// Vertices of a bounded 2-D polytope in counter-clockwise order.
    pub fn vertices_2d(&self) -> Vec<[f64; 2]> {
        assert_eq!(self.dim(), 2, "vertex listing is for planar polytopes");
        let mut pts: Vec<[f64; 2]> = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let (a, b) = (&self.g[i], &self.g[j]);
                let det = a[0] * b[1] - a[1] * b[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (self.h[i] * b[1] - a[1] * self.h[j]) / det;
                let y = (a[0] * self.h[j] - self.h[i] * b[0]) / det;
                let p = [x, y];
                let scale = 1e-7 * (1.0 + x.abs().max(y.abs()));
                if self.contains(&p, scale) && !pts.iter().any(|q| (q[0] - x).abs() < scale && (q[1] - y).abs() < scale) {
                    pts.push(p);
                }
            }
        }
        if pts.is_empty() {
            return pts;
        }
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64;
        pts.sort_by(|p, q| {
            let ap = (p[1] - cy).atan2(p[0] - cx);
            let aq = (q[1] - cy).atan2(q[0] - cx);
            ap.total_cmp(&aq)
        });
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polytope {
        Polytope::new(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 1.0]],
            vec![1.0, 1.0, 1.0, 1.0, 5.0],
        )
    }

    #[test]
    fn drops_redundant_row() {
        assert_eq!(square().irredundant_rows(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn chebyshev_of_square() {
        let (x, r) = square().chebyshev_center(10.0).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        assert!(x[0].abs() < 1e-9 && x[1].abs() < 1e-9);
    }

    #[test]
    fn facet_center_of_right_edge() {
        let (x, r) = square().facet_center(0, 10.0, 0.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && x[1].abs() < 1e-9);
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn square_vertices() {
        let v = square().vertices_2d();
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn normalization_merges_parallel_rows() {
        let p = Polytope::new(vec![vec![2.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]], vec![4.0, 3.0, 1.0]);
        match p.normalized() {
            Normalized::Ok(q) => {
                assert_eq!(q.len(), 1);
                assert!((q.h[0] - 2.0).abs() < 1e-12);
            }
            Normalized::Empty => panic!("not empty"),
        }
    }
}
