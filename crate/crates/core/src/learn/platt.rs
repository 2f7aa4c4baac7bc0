//! Platt scaling: maps an SVM score to `P(y = +1 | f) = 1 / (1 + exp(A·f + B))`.
//!
//! Uses the Newton method with backtracking line search of Lin, Lin and Weng,
//! which evaluates the log terms in a way that never overflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after the initial guess and after every accepted step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nll_trace: Vec<f64>,
}

impl PlattParams {
    pub fn probability(&self, f: f64) -> f64 {
        sigmoid(self.a * f + self.b)
    }
}

/// `1 / (1 + exp(z))`, evaluated stably.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Regularized targets: `(N₊+1)/(N₊+2)` for positives, `1/(N₋+2)` for negatives.
pub fn targets(y: &[f64]) -> (f64, f64) {
    let n_pos = y.iter().filter(|&&t| t > 0.0).count() as f64;
    let n_neg = y.len() as f64 - n_pos;
    ((n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
}

/// Negative log likelihood of `(a, b)` for scores `f` and targets `t`.
pub fn platt_nll(f: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    f.iter()
        .zip(t)
        .map(|(&fi, &ti)| {
            let z = fi * a + b;
            if z >= 0.0 {
                ti * z + (-z).exp().ln_1p()
            } else {
                (ti - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

/// Fits the sigmoid to scores `f` with labels `y ∈ {−1, +1}`.
pub fn fit_platt(f: &[f64], y: &[f64]) -> Result<PlattParams> {
    if f.len() != y.len() {
        return Err(Error::Dimension(format!("{} scores but {} labels", f.len(), y.len())));
    }
    let n_pos = y.iter().filter(|&&t| t > 0.0).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::SingleClass("calibration needs both labels".into()));
    }
    let (hi, lo) = targets(y);
    let t: Vec<f64> = y.iter().map(|&v| if v > 0.0 { hi } else { lo }).collect();
    let n_neg = (y.len() - n_pos) as f64;

    let max_iter = 200;
    let min_step = 1e-10;
    let sigma = 1e-12;
    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos as f64 + 1.0)).ln();
    let mut fval = platt_nll(f, &t, a, b);
    let mut trace = vec![fval];
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..max_iter {
        iterations = it + 1;
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&fi, &ti) in f.iter().zip(&t) {
            let z = fi * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += fi * fi * d2;
            h22 += d2;
            h21 += fi * d2;
            let d1 = ti - p;
            g1 += fi * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-12 && g2.abs() < 1e-12 {
            converged = true;
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut accepted = None;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = platt_nll(f, &t, na, nb);
            if nf < fval + 1e-4 * step * gd {
                accepted = Some((na, nb, nf));
                break;
            }
            step /= 2.0;
        }
        let Some((na, nb, nf)) = accepted else {
            // No further decrease available at machine precision.
            converged = true;
            break;
        };
        let change = fval - nf;
        a = na;
        b = nb;
        fval = nf;
        trace.push(fval);
        if change.abs() < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("platt fit reached {max_iter} iterations (scores separate the pair)");
    }
    Ok(PlattParams { a, b, iterations, converged, nll_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_values() {
        let y: Vec<f64> = (0..9).map(|_| 1.0).chain((0..4).map(|_| -1.0)).collect();
        let (hi, lo) = targets(&y);
        assert!((hi - 10.0 / 11.0).abs() < 1e-15);
        assert!((lo - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_scores_give_half_at_zero() {
        // Every (f, y) has a mirror (−f, −y).
        let f = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 0.3, -0.3];
        let y = [-1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
        let p = fit_platt(&f, &y).unwrap();
        assert!((p.probability(0.0) - 0.5).abs() < 1e-6, "{p:?}");
    }
}
