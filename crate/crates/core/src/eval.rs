//! k-fold cross validation with classification and price-forecast accuracy.
//!
//! Price-forecast accuracy at one bus and point is `1 − |λ̂ − λ| / |λ|`,
//! clamped to `[0, 1]`, i.e. one minus the relative deviation. Points where
//! the true price is (numerically) zero carry no relative information and are
//! skipped and counted.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::learn::{predict, train_ovo, train_ovo_cll, LabeledDataset};

/// Splits `0..n` into `k` shuffled folds whose sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..k).map(|f| perm[f * n / k..(f + 1) * n / k].to_vec()).collect())
}

/// Fraction of exact label matches.
pub fn classification_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Ok(1.0);
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastAccuracy {
    /// Mean accuracy per bus; `None` when every point at that bus was skipped.
    pub per_bus: Vec<Option<f64>>,
    /// Mean of the available per-bus values.
    pub overall: f64,
    /// Terms skipped because the true price was zero.
    pub skipped: usize,
}

pub const ZERO_PRICE: f64 = 1e-9;

pub fn lmp_forecast_accuracy(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<ForecastAccuracy> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!("{} predicted rows for {} true rows", pred.len(), truth.len())));
    }
    let nb = truth.first().map_or(0, |r| r.len());
    if pred.iter().chain(truth).any(|r| r.len() != nb) {
        return Err(Error::Dimension("price rows differ in length".into()));
    }
    let mut sums = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    let mut skipped = 0;
    for (p, t) in pred.iter().zip(truth) {
        for b in 0..nb {
            if t[b].abs() < ZERO_PRICE {
                skipped += 1;
                continue;
            }
            let acc = (1.0 - (p[b] - t[b]).abs() / t[b].abs()).clamp(0.0, 1.0);
            sums[b] += acc;
            counts[b] += 1;
        }
    }
    let per_bus: Vec<Option<f64>> =
        sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { Some(s / c as f64) } else { None }).collect();
    let avail: Vec<f64> = per_bus.iter().flatten().copied().collect();
    let overall = if avail.is_empty() { 1.0 } else { avail.iter().sum::<f64>() / avail.len() as f64 };
    Ok(ForecastAccuracy { per_bus, overall, skipped })
}

/// Which classifier family a cross validation trains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Trainer {
    Svm { c: f64 },
    Cll,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub alpha: f64,
    pub beta: f64,
    pub beta_per_bus: Vec<Option<f64>>,
    pub skipped_terms: usize,
    pub train_secs: f64,
    pub predict_secs: f64,
    pub post_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub trainer: Trainer,
    pub k: usize,
    pub seed: u64,
    pub n_classes: usize,
    pub folds: Vec<FoldResult>,
    pub mean_alpha: f64,
    pub mean_beta: f64,
    pub mean_beta_per_bus: Vec<Option<f64>>,
}

impl FoldReport {
    /// `fold,alpha,beta` rows with a trailing average row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fold,alpha,beta\n");
        for f in &self.folds {
            s.push_str(&format!("{},{:.6},{:.6}\n", f.fold + 1, f.alpha, f.beta));
        }
        s.push_str(&format!("avg,{:.6},{:.6}\n", self.mean_alpha, self.mean_beta));
        s
    }
}

/// Trains on k−1 folds and scores the held-out fold, k times.
pub fn cross_validate(ds: &LabeledDataset, k: usize, seed: u64, trainer: Trainer) -> Result<FoldReport> {
    let folds = kfold_split(ds.len(), k, seed)?;
    let mut results = Vec::with_capacity(k);
    for (f, valid) in folds.iter().enumerate() {
        let t0 = Instant::now();
        let train_rows: Vec<usize> = folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, v)| v.iter().copied()).collect();
        let train = ds.subset(&train_rows);
        let model = match trainer {
            Trainer::Svm { c } => train_ovo(&train, c)?,
            Trainer::Cll => train_ovo_cll(&train, 1.0)?,
        };
        let t1 = Instant::now();
        let preds: Vec<usize> = valid.iter().map(|&r| predict(&model, &model.schema.project(&ds.loads[r])).0).collect();
        let t2 = Instant::now();
        let truth: Vec<usize> = valid.iter().map(|&r| ds.labels[r]).collect();
        let alpha = classification_accuracy(&preds, &truth)?;
        let pred_lmps: Vec<Vec<f64>> = preds.iter().map(|&c| ds.class_lmps[c].clone()).collect();
        let true_lmps: Vec<Vec<f64>> = valid.iter().map(|&r| ds.lmps[r].clone()).collect();
        let acc = lmp_forecast_accuracy(&pred_lmps, &true_lmps)?;
        let t3 = Instant::now();
        results.push(FoldResult {
            fold: f,
            n_train: train_rows.len(),
            n_valid: valid.len(),
            alpha,
            beta: acc.overall,
            beta_per_bus: acc.per_bus,
            skipped_terms: acc.skipped,
            train_secs: (t1 - t0).as_secs_f64(),
            predict_secs: (t2 - t1).as_secs_f64(),
            post_secs: (t3 - t2).as_secs_f64(),
        });
    }
    let kf = results.len() as f64;
    let nb = results.first().map_or(0, |r| r.beta_per_bus.len());
    let mean_beta_per_bus = (0..nb)
        .map(|b| {
            let v: Vec<f64> = results.iter().filter_map(|r| r.beta_per_bus[b]).collect();
            if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) }
        })
        .collect();
    Ok(FoldReport {
        trainer,
        k,
        seed,
        n_classes: ds.n_classes(),
        mean_alpha: results.iter().map(|r| r.alpha).sum::<f64>() / kf,
        mean_beta: results.iter().map(|r| r.beta).sum::<f64>() / kf,
        mean_beta_per_bus,
        folds: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_of_1440() {
        let f = kfold_split(1440, 5, 3).unwrap();
        assert!(f.iter().all(|v| v.len() == 288));
    }

    #[test]
    fn hand_computed_forecast() {
        // bus 1: |22−20|/20 = 0.1 and exact → 0.95; bus 2: |−10 − 10|/10 clamps to 0, 50 exact → 0.5.
        let acc = lmp_forecast_accuracy(&[vec![22.0, -10.0], vec![20.0, 50.0]], &[vec![20.0, 10.0], vec![20.0, 50.0]]).unwrap();
        assert!((acc.per_bus[0].unwrap() - 0.95).abs() < 1e-12);
        assert!((acc.per_bus[1].unwrap() - 0.5).abs() < 1e-12);
        assert!((acc.overall - 0.725).abs() < 1e-12);
    }

    #[test]
    fn zero_prices_are_skipped() {
        let acc = lmp_forecast_accuracy(&[vec![1.0, 5.0]], &[vec![0.0, 5.0]]).unwrap();
        assert_eq!(acc.skipped, 1);
        assert_eq!(acc.per_bus[0], None);
        assert_eq!(acc.overall, 1.0);
    }
}
