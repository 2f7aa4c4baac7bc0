//! Pairwise coupling of Hastie and Tibshirani.
//!
//! Given pairwise estimates `r_ij ≈ P(i | i or j)` and pair sizes `n_ij`,
//! finds class probabilities `p` whose implied pairwise ratios
//! `μ_ij = p_i / (p_i + p_j)` are closest in weighted Kullback–Leibler sense.

use serde::Serialize;

pub const R_CLIP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    pub p: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Runs the fixed-point iteration from the uniform vector.
///
/// `r[i][j]` for `i ≠ j` must satisfy `r[j][i] = 1 − r[i][j]`; diagonal
/// entries are ignored. Pairs with `n[i][j] = 0` carry no information.
pub fn couple(r: &[Vec<f64>], n: &[Vec<f64>]) -> Coupling {
    let k = r.len();
    if k == 0 {
        return Coupling { p: Vec::new(), sweeps: 0, converged: true };
    }
    if k == 1 {
        return Coupling { p: vec![1.0], sweeps: 0, converged: true };
    }
    let clip = |v: f64| v.clamp(R_CLIP, 1.0 - R_CLIP);
    let mut p = vec![1.0 / k as f64; k];
    let mut prev = p.clone();
    let max_sweeps = 10_000;
    for sweep in 1..=max_sweeps {
        prev.copy_from_slice(&p);
        for i in 0..k {
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..k {
                if i == j || n[i][j] <= 0.0 {
                    continue;
                }
                num += n[i][j] * clip(r[i][j]);
                den += n[i][j] * p[i] / (p[i] + p[j]);
            }
            if den > 0.0 {
                p[i] *= num / den;
            }
            let total: f64 = p.iter().sum();
            for v in &mut p {
                *v /= total;
            }
        }
        let change = p.iter().zip(&prev).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if change < 1e-8 {
            return Coupling { p, sweeps: sweep, converged: true };
        }
    }
    // Oscillating: settle on the average of the last two iterates.
    let mut avg: Vec<f64> = p.iter().zip(&prev).map(|(a, b)| 0.5 * (a + b)).collect();
    let total: f64 = avg.iter().sum();
    for v in &mut avg {
        *v /= total;
    }
    log::debug!("pairwise coupling did not converge in {max_sweeps} sweeps");
    Coupling { p: avg, sweeps: max_sweeps, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_classes_exact() {
        let r = vec![vec![0.0, 0.8], vec![0.2, 0.0]];
        let n = vec![vec![0.0, 10.0], vec![10.0, 0.0]];
        let c = couple(&r, &n);
        assert!((c.p[0] - 0.8).abs() < 1e-6 && (c.p[1] - 0.2).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn uniform_fixed_point() {
        let r = vec![vec![0.5; 4]; 4];
        let n = vec![vec![1.0; 4]; 4];
        let c = couple(&r, &n);
        assert!(c.p.iter().all(|v| (v - 0.25).abs() < 1e-12));
    }
}
