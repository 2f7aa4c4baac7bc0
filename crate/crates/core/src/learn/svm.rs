//! Soft-margin linear SVM.
//!
//! The dual QP is solved by a Mehrotra predictor–corrector interior-point
//! method. With a linear kernel the Hessian is `ZZᵀ` for the `n × d` matrix of
//! signed, centered features, so every Newton system reduces to a `d × d`
//! Cholesky factorization. Unlike pairwise decomposition, the iteration count
//! barely depends on how close the two classes come to each other, which is
//! what large penalties on densely sampled price regions produce. Training
//! stops once the relative duality gap between the primal (with its best
//! bias) and the dual falls below `gap_tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperplane `f(x) = w·x − b`; positive scores vote for the first class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
    pub class_pair: (usize, usize),
    /// Σ max(0, 1 − y·f(x)) over the training rows.
    pub slack_sum: f64,
    pub duality_gap: f64,
    pub converged: bool,
    /// Interior-point iterations performed.
    #[serde(default)]
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.b
    }

    /// Primal objective `½‖w‖² + C·Σ slack`.
    pub fn primal_objective(&self) -> f64 {
        0.5 * self.w.iter().map(|v| v * v).sum::<f64>() + self.c * self.slack_sum
    }
}

/// Options for [`train_binary_svm_with`].
#[derive(Debug, Clone)]
pub struct SvmOptions {
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions { gap_tol: 1e-6, max_iter: 500 }
    }
}

/// Minimizer of `Σ max(0, 1 − y_i·(s_i − b))` over the bias `b`.
///
/// Returns the midpoint of the optimal interval and the optimal value. The
/// objective is convex piecewise linear with kinks at `s_i − y_i`.
pub fn best_bias(scores: &[f64], y: &[f64]) -> (f64, f64) {
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (&s, &t) in scores.iter().zip(y) {
        if t > 0.0 {
            pos.push(s - 1.0);
        } else {
            neg.push(s + 1.0);
        }
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let prefix = |v: &[f64]| {
        let mut p = vec![0.0; v.len() + 1];
        for (i, x) in v.iter().enumerate() {
            p[i + 1] = p[i] + x;
        }
        p
    };
    let (pp, np) = (prefix(&pos), prefix(&neg));
    // Positive rows cost (b − k) when b > k; negative rows cost (k − b) when b < k.
    let eval = |b: f64| {
        let ip = pos.partition_point(|&k| k < b);
        let ineg = neg.partition_point(|&k| k <= b);
        let cp = ip as f64 * b - pp[ip];
        let cn = (np[neg.len()] - np[ineg]) - (neg.len() - ineg) as f64 * b;
        cp + cn
    };
    let mut kinks: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let values: Vec<f64> = kinks.iter().map(|&k| eval(k)).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + best.abs()) + 1e-12;
    let first = values.iter().position(|&v| v <= best + tol).unwrap_or(0);
    let last = values.iter().rposition(|&v| v <= best + tol).unwrap_or(0);
    ((kinks[first] + kinks[last]) / 2.0, best)
}

pub fn train_binary_svm(x: &[Vec<f64>], y: &[f64], c: f64) -> Result<BinarySvm> {
    train_binary_svm_with(x, y, c, &SvmOptions::default())
}

pub fn train_binary_svm_with(x: &[Vec<f64>], y: &[f64], c: f64, opts: &SvmOptions) -> Result<BinarySvm> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Dimension(format!("{n} rows but {} labels", y.len())));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("penalty C = {c} must be positive")));
    }
    if y.iter().any(|&t| t != 1.0 && t != -1.0) {
        return Err(Error::InvalidArgument("labels must be +1 or -1".into()));
    }
    let n_pos = y.iter().filter(|&&t| t > 0.0).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass(format!("{n} rows, {n_pos} positive")));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension("ragged feature matrix".into()));
    }

    // Translation leaves the dual unchanged and keeps kernel values well scaled.
    let mean: Vec<f64> = (0..d).map(|k| x.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let z: Vec<Vec<f64>> =
        x.iter().zip(y).map(|(r, &t)| r.iter().zip(&mean).map(|(a, m)| t * (a - m)).collect()).collect();
    let xc: Vec<Vec<f64>> = z.iter().zip(y).map(|(r, &t)| r.iter().map(|v| v * t).collect()).collect();

    // Strictly interior start; the equality residual is driven out by the iteration.
    let a0 = (0.5 * c).min(1.0);
    let mut alpha = vec![a0; n];
    let mut zl = vec![1.0; n];
    let mut zu = vec![1.0; n];
    let mut beta = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut last = summarize(&xc, y, c, &alpha);
    let q_scale = z.iter().map(|r| dot(r, r)).sum::<f64>() / n as f64;
    let d_floor = 1e-10 * q_scale.max(1.0);

    while iterations < opts.max_iter {
        let (_, _, _, _, gap, primal, dual) = last;
        if gap <= opts.gap_tol * primal.abs().max(dual.abs()) + 1e-12 && y.iter().zip(&alpha).map(|(t, a)| t * a).sum::<f64>().abs() <= 1e-9 * (1.0 + c) {
            converged = true;
            break;
        }
        iterations += 1;
        let s: Vec<f64> = alpha.iter().map(|a| c - a).collect();
        let w = weight(&z, &alpha);
        // Dual residual Qα − e − βy − z_l + z_u with Q = ZZᵀ.
        let rd: Vec<f64> =
            (0..n).map(|i| dot(&z[i], &w) - 1.0 - beta * y[i] - zl[i] + zu[i]).collect();
        let rp: f64 = y.iter().zip(&alpha).map(|(t, a)| t * a).sum();
        let mu = (0..n).map(|i| alpha[i] * zl[i] + s[i] * zu[i]).sum::<f64>() / (2 * n) as f64;
        // The floor keeps the Newton matrix away from exact singularity when
        // some multiplier pair has collapsed to zero.
        let dinv: Vec<f64> = (0..n).map(|i| 1.0 / (zl[i] / alpha[i] + zu[i] / s[i]).max(d_floor)).collect();
        let Some(kkt) = LowRankKkt::new(&z, &dinv, y) else {
            log::warn!("svm interior point hit a singular system");
            break;
        };
        let step = |rc_l: &[f64], rc_u: &[f64]| -> (Vec<f64>, f64, Vec<f64>, Vec<f64>) {
            let r: Vec<f64> = (0..n).map(|i| -rd[i] + rc_l[i] / alpha[i] - rc_u[i] / s[i]).collect();
            let (da, db) = kkt.solve(&r, -rp, y);
            let dzl: Vec<f64> = (0..n).map(|i| (rc_l[i] - zl[i] * da[i]) / alpha[i]).collect();
            let dzu: Vec<f64> = (0..n).map(|i| (rc_u[i] + zu[i] * da[i]) / s[i]).collect();
            (da, db, dzl, dzu)
        };
        // Predictor.
        let rc_l: Vec<f64> = (0..n).map(|i| -alpha[i] * zl[i]).collect();
        let rc_u: Vec<f64> = (0..n).map(|i| -s[i] * zu[i]).collect();
        let (da, _, dzl, dzu) = step(&rc_l, &rc_u);
        let (tp, td) = step_lengths(&alpha, &s, &zl, &zu, &da, &dzl, &dzu, 1.0);
        let mu_aff = (0..n)
            .map(|i| (alpha[i] + tp * da[i]) * (zl[i] + td * dzl[i]) + (s[i] - tp * da[i]) * (zu[i] + td * dzu[i]))
            .sum::<f64>()
            / (2 * n) as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
        // Corrector with the second-order complementarity terms.
        let rc_l: Vec<f64> = (0..n).map(|i| sigma * mu - alpha[i] * zl[i] - da[i] * dzl[i]).collect();
        let rc_u: Vec<f64> = (0..n).map(|i| sigma * mu - s[i] * zu[i] + da[i] * dzu[i]).collect();
        let (da, db, dzl, dzu) = step(&rc_l, &rc_u);
        let (tp, td) = step_lengths(&alpha, &s, &zl, &zu, &da, &dzl, &dzu, 0.995);
        for i in 0..n {
            alpha[i] = (alpha[i] + tp * da[i]).clamp(f64::MIN_POSITIVE, c * (1.0 - f64::EPSILON));
            zl[i] += td * dzl[i];
            zu[i] += td * dzu[i];
        }
        beta += td * db;
        last = summarize(&xc, y, c, &alpha);
    }
    if !converged {
        log::warn!("svm stopped with relative duality gap {:.3e}", last.4 / last.5.abs().max(1e-300));
    }
    let (w, _, bias, hinge, gap, _, _) = last;
    let shift: f64 = w.iter().zip(&mean).map(|(a, m)| a * m).sum();
    Ok(BinarySvm { w, b: bias + shift, c, class_pair: (0, 1), slack_sum: hinge, duality_gap: gap, converged, iterations })
}

/// Largest primal and dual steps (scaled by `frac`) keeping every bound strict.
#[allow(clippy::too_many_arguments)]
fn step_lengths(alpha: &[f64], s: &[f64], zl: &[f64], zu: &[f64], da: &[f64], dzl: &[f64], dzu: &[f64], frac: f64) -> (f64, f64) {
    let mut tp: f64 = 1.0;
    let mut td: f64 = 1.0;
    for i in 0..alpha.len() {
        if da[i] < 0.0 {
            tp = tp.min(-frac * alpha[i] / da[i]);
        }
        if da[i] > 0.0 {
            tp = tp.min(frac * s[i] / da[i]);
        }
        if dzl[i] < 0.0 {
            td = td.min(-frac * zl[i] / dzl[i]);
        }
        if dzu[i] < 0.0 {
            td = td.min(-frac * zu[i] / dzu[i]);
        }
    }
    (tp, td)
}

/// Newton system `[Q + D, −y; yᵀ, 0]` with `Q = ZZᵀ`, solved through the
/// Woodbury identity so each solve costs O(n·d²).
struct LowRankKkt<'a> {
    z: &'a [Vec<f64>],
    dinv: &'a [f64],
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    my: Vec<f64>,
    ymy: f64,
}

impl<'a> LowRankKkt<'a> {
    fn new(z: &'a [Vec<f64>], dinv: &'a [f64], y: &[f64]) -> Option<Self> {
        let d = z[0].len();
        let mut k = nalgebra::DMatrix::<f64>::identity(d, d);
        for (row, &di) in z.iter().zip(dinv) {
            for a in 0..d {
                for b in 0..=a {
                    k[(a, b)] += di * row[a] * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                k[(b, a)] = k[(a, b)];
            }
        }
        let chol = match k.clone().cholesky() {
            Some(ch) => ch,
            None => {
                let ridge = 1e-12 * (0..d).map(|a| k[(a, a)]).fold(1.0, f64::max);
                (k + nalgebra::DMatrix::<f64>::identity(d, d) * ridge).cholesky()?
            }
        };
        let mut me = LowRankKkt { z, dinv, chol, my: Vec::new(), ymy: 0.0 };
        me.my = me.apply_inverse(y);
        me.ymy = dot(y, &me.my);
        (me.ymy > 0.0).then_some(me)
    }

    /// `(D + ZZᵀ)⁻¹ r`.
    fn apply_inverse(&self, r: &[f64]) -> Vec<f64> {
        let d = self.z[0].len();
        let dr: Vec<f64> = r.iter().zip(self.dinv).map(|(a, b)| a * b).collect();
        let mut t = nalgebra::DVector::<f64>::zeros(d);
        for (row, v) in self.z.iter().zip(&dr) {
            for k in 0..d {
                t[k] += row[k] * v;
            }
        }
        let u = self.chol.solve(&t);
        dr.iter()
            .zip(self.z)
            .zip(self.dinv)
            .map(|((v, row), di)| v - di * (0..d).map(|k| row[k] * u[k]).sum::<f64>())
            .collect()
    }

    /// Solves `(Q + D)Δα − yΔβ = r`, `yᵀΔα = e`, with two rounds of
    /// iterative refinement against the exact operator: the Woodbury form
    /// cancels badly once some barrier weights approach zero.
    fn solve(&self, r: &[f64], e: f64, y: &[f64]) -> (Vec<f64>, f64) {
        let (mut da, mut db) = self.solve_once(r, e);
        for _ in 0..2 {
            let w = weight(self.z, &da);
            let res: Vec<f64> = (0..r.len())
                .map(|i| r[i] - (dot(&self.z[i], &w) + da[i] / self.dinv[i] - y[i] * db))
                .collect();
            let res_e = e - dot(y, &da);
            let (ca, cb) = self.solve_once(&res, res_e);
            for (a, c) in da.iter_mut().zip(&ca) {
                *a += c;
            }
            db += cb;
        }
        (da, db)
    }

    fn solve_once(&self, r: &[f64], e: f64) -> (Vec<f64>, f64) {
        let mr = self.apply_inverse(r);
        let yr: f64 = self.my.iter().zip(r).map(|(a, b)| a * b).sum();
        let db = (e - yr) / self.ymy;
        let da = mr.iter().zip(&self.my).map(|(a, b)| a + db * b).collect();
        (da, db)
    }
}

fn weight(z: &[Vec<f64>], alpha: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; z[0].len()];
    for (row, &a) in z.iter().zip(alpha) {
        for (wk, zk) in w.iter_mut().zip(row) {
            *wk += a * zk;
        }
    }
    w
}

/// Full-data weight vector, scores, best bias, hinge sum, duality gap, primal, dual.
#[allow(clippy::type_complexity)]
fn summarize(xc: &[Vec<f64>], y: &[f64], c: f64, alpha: &[f64]) -> (Vec<f64>, Vec<f64>, f64, f64, f64, f64, f64) {
    let ya: Vec<f64> = alpha.iter().zip(y).map(|(a, t)| a * t).collect();
    let w = weight(xc, &ya);
    let scores: Vec<f64> = xc.iter().map(|r| dot(&w, r)).collect();
    let (bias, hinge) = best_bias(&scores, y);
    let ww: f64 = w.iter().map(|v| v * v).sum();
    let primal = 0.5 * ww + c * hinge;
    let dual = alpha.iter().sum::<f64>() - 0.5 * ww;
    (w, scores, bias, hinge, (primal - dual).max(0.0), primal, dual)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let svm = train_binary_svm(&[vec![-1.0], vec![1.0]], &[-1.0, 1.0], 1000.0).unwrap();
        assert!((svm.w[0] - 1.0).abs() < 1e-6, "{svm:?}");
        assert!(svm.b.abs() < 1e-6);
    }

    #[test]
    fn best_bias_midpoint() {
        let (b, v) = best_bias(&[1.0, 2.0, 4.0, 5.0], &[-1.0, -1.0, 1.0, 1.0]);
        assert!((b - 3.0).abs() < 1e-12);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn rejects_single_class() {
        assert!(matches!(
            train_binary_svm(&[vec![0.0], vec![1.0]], &[1.0, 1.0], 1.0),
            Err(Error::SingleClass(_))
        ));
    }
}
