//! Labeled load/price datasets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which columns of the full per-bus load vector are visible as features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    /// 0-based buses, in feature order.
    pub buses: Vec<usize>,
    /// Whether the total system load is appended as a last feature.
    pub include_total: bool,
}

impl FeatureSchema {
    pub fn full(n_buses: usize) -> Self {
        FeatureSchema { buses: (0..n_buses).collect(), include_total: false }
    }

    pub fn dim(&self) -> usize {
        self.buses.len() + usize::from(self.include_total)
    }

    /// Feature vector for a full per-bus load vector.
    pub fn project(&self, loads: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.buses.iter().map(|&b| loads[b]).collect();
        if self.include_total {
            x.push(loads.iter().sum());
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub index: usize,
    pub scenario: String,
    pub xi: f64,
}

/// Load vectors with their price labels.
///
/// `loads` always keeps the full per-bus vectors so features can be
/// re-projected; `x` holds the features currently in use.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub loads: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Observed price vector of each row.
    pub lmps: Vec<Vec<f64>>,
    pub class_lmps: Vec<Vec<f64>>,
    pub meta: Vec<RowMeta>,
    pub schema: FeatureSchema,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_lmps.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Rows selected by index, keeping the class table intact.
    pub fn subset(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            loads: rows.iter().map(|&r| self.loads[r].clone()).collect(),
            x: rows.iter().map(|&r| self.x[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            lmps: rows.iter().map(|&r| self.lmps[r].clone()).collect(),
            class_lmps: self.class_lmps.clone(),
            meta: rows.iter().map(|&r| self.meta[r].clone()).collect(),
            schema: self.schema.clone(),
        }
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

/// Groups rows whose price vectors agree within `tol` (relative, ∞-norm).
///
/// Classes are numbered in lexicographic order of their representative price
/// vector, so numbering does not depend on row order.
pub fn group_labels(loads: &[Vec<f64>], lmps: &[Vec<f64>], tol: f64) -> Result<LabeledDataset> {
    if loads.len() != lmps.len() {
        return Err(Error::Dimension(format!("{} load rows but {} price rows", loads.len(), lmps.len())));
    }
    let n_buses = loads.first().map_or(0, |r| r.len());
    if loads.iter().any(|r| r.len() != n_buses) {
        return Err(Error::Dimension("ragged load matrix".into()));
    }
    let mut reps: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels = Vec::with_capacity(lmps.len());
    for l in lmps {
        let k = match reps.iter().position(|r| close(r, l, tol)) {
            Some(k) => k,
            None => {
                reps.push(l.clone());
                reps.len() - 1
            }
        };
        raw_labels.push(k);
    }
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by(|&a, &b| {
        reps[a]
            .iter()
            .zip(&reps[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut rank = vec![0; reps.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let schema = FeatureSchema::full(n_buses);
    Ok(LabeledDataset {
        x: loads.iter().map(|r| schema.project(r)).collect(),
        loads: loads.to_vec(),
        labels: raw_labels.iter().map(|&k| rank[k]).collect(),
        lmps: lmps.to_vec(),
        class_lmps: order.iter().map(|&k| reps[k].clone()).collect(),
        meta: (0..loads.len()).map(|i| RowMeta { index: i, scenario: String::new(), xi: 0.0 }).collect(),
        schema,
    })
}

/// Replaces the features by selected bus loads and, optionally, total load.
pub fn project_features(ds: &LabeledDataset, keep_buses: &[usize], include_total: bool) -> Result<LabeledDataset> {
    if keep_buses.is_empty() && !include_total {
        return Err(Error::InvalidArgument("feature projection keeps nothing".into()));
    }
    let n_buses = ds.loads.first().map_or(0, |r| r.len());
    if let Some(&b) = keep_buses.iter().find(|&&b| b >= n_buses) {
        return Err(Error::InvalidArgument(format!("bus {} out of range", b + 1)));
    }
    let schema = FeatureSchema { buses: keep_buses.to_vec(), include_total };
    let mut out = ds.clone();
    out.x = ds.loads.iter().map(|r| schema.project(r)).collect();
    out.schema = schema;
    Ok(out)
}

/// Merges classes that share the same price at one bus.
pub fn relabel_by_bus(ds: &LabeledDataset, bus: usize) -> Result<LabeledDataset> {
    if ds.lmps.first().is_some_and(|r| bus >= r.len()) {
        return Err(Error::InvalidArgument(format!("bus {} out of range", bus + 1)));
    }
    let column: Vec<Vec<f64>> = ds.lmps.iter().map(|r| vec![r[bus]]).collect();
    let regrouped = group_labels(&ds.loads, &column, 1e-6)?;
    Ok(LabeledDataset {
        labels: regrouped.labels,
        lmps: regrouped.lmps,
        class_lmps: regrouped.class_lmps,
        ..ds.clone()
    })
}
