//! One-vs-one multiclass model with max-vote prediction.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::cll::train_cll;
use crate::learn::coupling::{couple, Coupling};
use crate::learn::dataset::{FeatureSchema, LabeledDataset};
use crate::learn::platt::{fit_platt, PlattParams};
use crate::learn::svm::{train_binary_svm, BinarySvm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Svm,
    Cll,
}

/// Classifier for the pair `(i, j)`; positive scores favor `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub i: usize,
    pub j: usize,
    pub svm: BinarySvm,
    pub platt: PlattParams,
    /// Training rows in classes `i` and `j` combined.
    pub n_ij: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvoModel {
    pub method: Method,
    pub c: f64,
    pub schema: FeatureSchema,
    pub class_lmps: Vec<Vec<f64>>,
    pub pairs: Vec<PairModel>,
}

impl OvoModel {
    pub fn n_classes(&self) -> usize {
        self.class_lmps.len()
    }

    /// Pairwise scores in pair order.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.pairs.iter().map(|p| p.svm.decision(x)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::parse_json(context, &e))?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }
}

/// A pair where one side has no training rows always votes for the other.
fn constant_pair(i: usize, j: usize, n_i: usize, n_j: usize, c: f64, dim: usize) -> PairModel {
    let (b, prob) = match (n_i > 0, n_j > 0) {
        (true, false) => (-1.0, (n_i as f64 + 1.0) / (n_i as f64 + 2.0)),
        (false, true) => (1.0, 1.0 / (n_j as f64 + 2.0)),
        _ => (0.0, 0.5),
    };
    PairModel {
        i,
        j,
        svm: BinarySvm { w: vec![0.0; dim], b, c, class_pair: (i, j), slack_sum: 0.0, duality_gap: 0.0, converged: true, iterations: 0 },
        // sigmoid(B) = prob, with A·f irrelevant because A = 0.
        platt: PlattParams { a: 0.0, b: (1.0 / prob - 1.0).ln(), iterations: 0, converged: true, nll_trace: Vec::new() },
        n_ij: n_i + n_j,
    }
}

fn train_pairs(
    ds: &LabeledDataset,
    features: &[Vec<f64>],
    c: f64,
    fit: impl Fn(&[Vec<f64>], &[f64]) -> Result<BinarySvm> + Sync,
) -> Result<Vec<PairModel>> {
    let k = ds.n_classes();
    if k < 2 {
        return Err(Error::SingleClass(format!("{k} class in training data")));
    }
    let dim = features.first().map_or(0, |r| r.len());
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (r, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(r);
    }
    for (cls, rows) in by_class.iter().enumerate() {
        if rows.len() < 2 {
            log::warn!("class {cls} has {} training rows", rows.len());
        }
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let (ri, rj) = (&by_class[i], &by_class[j]);
            if ri.is_empty() || rj.is_empty() {
                return Ok(constant_pair(i, j, ri.len(), rj.len(), c, dim));
            }
            let rows: Vec<usize> = ri.iter().chain(rj).copied().collect();
            let x: Vec<Vec<f64>> = rows.iter().map(|&r| features[r].clone()).collect();
            let y: Vec<f64> = rows.iter().map(|&r| if ds.labels[r] == i { 1.0 } else { -1.0 }).collect();
            let mut svm = fit(&x, &y)?;
            svm.class_pair = (i, j);
            let f: Vec<f64> = x.iter().map(|r| svm.decision(r)).collect();
            let platt = fit_platt(&f, &y)?;
            Ok(PairModel { i, j, svm, platt, n_ij: rows.len() })
        })
        .collect()
}

/// Trains one soft-margin SVM per class pair on that pair's rows.
pub fn train_ovo(ds: &LabeledDataset, c: f64) -> Result<OvoModel> {
    let pairs = train_pairs(ds, &ds.x, c, |x, y| train_binary_svm(x, y, c))?;
    Ok(OvoModel { method: Method::Svm, c, schema: ds.schema.clone(), class_lmps: ds.class_lmps.clone(), pairs })
}

/// Pairwise total-load thresholds, combined exactly like the SVM model.
pub fn train_ovo_cll(ds: &LabeledDataset, c: f64) -> Result<OvoModel> {
    let schema = FeatureSchema { buses: Vec::new(), include_total: true };
    let features: Vec<Vec<f64>> = ds.loads.iter().map(|r| schema.project(r)).collect();
    let pairs = train_pairs(ds, &features, c, |x, y| {
        let total: Vec<f64> = x.iter().map(|r| r[0]).collect();
        train_cll(&total, y, c)
    })?;
    Ok(OvoModel { method: Method::Cll, c, schema, class_lmps: ds.class_lmps.clone(), pairs })
}

/// Max-vote class and its price vector. Ties go to the lowest class index.
pub fn predict(model: &OvoModel, x: &[f64]) -> (usize, Vec<f64>) {
    let mut votes = vec![0usize; model.n_classes()];
    for p in &model.pairs {
        if p.svm.decision(x) >= 0.0 {
            votes[p.i] += 1;
        } else {
            votes[p.j] += 1;
        }
    }
    let best = votes.iter().enumerate().fold(0, |b, (k, &v)| if v > votes[b] { k } else { b });
    (best, model.class_lmps[best].clone())
}

/// Class probabilities from calibrated pairwise scores.
pub fn posterior_multiclass(model: &OvoModel, x: &[f64]) -> Coupling {
    let k = model.n_classes();
    let mut r = vec![vec![0.0; k]; k];
    let mut n = vec![vec![0.0; k]; k];
    for p in &model.pairs {
        let rij = p.platt.probability(p.svm.decision(x));
        r[p.i][p.j] = rij;
        r[p.j][p.i] = 1.0 - rij;
        n[p.i][p.j] = p.n_ij as f64;
        n[p.j][p.i] = p.n_ij as f64;
    }
    couple(&r, &n)
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    /// 1-based buses.
    buses: Vec<usize>,
    include_total: bool,
}

#[derive(Serialize, Deserialize)]
struct PairFile {
    i: usize,
    j: usize,
    w: Vec<f64>,
    b: f64,
    #[serde(rename = "platt_A")]
    platt_a: f64,
    #[serde(rename = "platt_B")]
    platt_b: f64,
    n_ij: usize,
    #[serde(default)]
    slack_sum: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    method: Method,
    c: f64,
    schema: SchemaFile,
    class_lmps: Vec<Vec<f64>>,
    pairs: Vec<PairFile>,
}

impl From<&OvoModel> for ModelFile {
    fn from(m: &OvoModel) -> Self {
        ModelFile {
            method: m.method,
            c: m.c,
            schema: SchemaFile { buses: m.schema.buses.iter().map(|b| b + 1).collect(), include_total: m.schema.include_total },
            class_lmps: m.class_lmps.clone(),
            pairs: m
                .pairs
                .iter()
                .map(|p| PairFile {
                    i: p.i,
                    j: p.j,
                    w: p.svm.w.clone(),
                    b: p.svm.b,
                    platt_a: p.platt.a,
                    platt_b: p.platt.b,
                    n_ij: p.n_ij,
                    slack_sum: p.svm.slack_sum,
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for OvoModel {
    type Error = Error;
    fn try_from(f: ModelFile) -> Result<Self> {
        let k = f.class_lmps.len();
        if f.pairs.len() != k * k.saturating_sub(1) / 2 {
            return Err(Error::InvalidArgument(format!("{} pairs for {k} classes", f.pairs.len())));
        }
        if f.schema.buses.contains(&0) {
            return Err(Error::InvalidArgument("schema buses are 1-based".into()));
        }
        let schema = FeatureSchema { buses: f.schema.buses.iter().map(|b| b - 1).collect(), include_total: f.schema.include_total };
        let dim = schema.dim();
        let mut pairs = Vec::with_capacity(f.pairs.len());
        for p in f.pairs {
            if p.i >= k || p.j >= k || p.i >= p.j {
                return Err(Error::InvalidArgument(format!("bad class pair ({}, {})", p.i, p.j)));
            }
            if p.w.len() != dim {
                return Err(Error::Dimension(format!("pair ({}, {}) has {} weights, schema has {dim}", p.i, p.j, p.w.len())));
            }
            pairs.push(PairModel {
                i: p.i,
                j: p.j,
                svm: BinarySvm {
                    w: p.w,
                    b: p.b,
                    c: f.c,
                    class_pair: (p.i, p.j),
                    slack_sum: p.slack_sum,
                    duality_gap: 0.0,
                    converged: true,
                    iterations: 0,
                },
                platt: PlattParams { a: p.platt_a, b: p.platt_b, iterations: 0, converged: true, nll_trace: Vec::new() },
                n_ij: p.n_ij,
            });
        }
        Ok(OvoModel { method: f.method, c: f.c, schema, class_lmps: f.class_lmps, pairs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::dataset::group_labels;

    fn three_clusters() -> LabeledDataset {
        let mut loads = Vec::new();
        let mut lmps = Vec::new();
        for (cx, price) in [(0.0, 10.0), (10.0, 20.0), (20.0, 30.0)] {
            for k in 0..5 {
                loads.push(vec![cx + k as f64 * 0.1, 0.0]);
                lmps.push(vec![price]);
            }
        }
        group_labels(&loads, &lmps, 1e-6).unwrap()
    }

    #[test]
    fn pair_count_and_vote() {
        let ds = three_clusters();
        let m = train_ovo(&ds, 10.0).unwrap();
        assert_eq!(m.pairs.len(), 3);
        assert_eq!(predict(&m, &[10.2, 0.0]).0, 1);
        assert_eq!(predict(&m, &[25.0, 0.0]).1, vec![30.0]);
    }

    #[test]
    fn cyclic_tie_goes_to_lowest_index() {
        let ds = three_clusters();
        let mut m = train_ovo(&ds, 10.0).unwrap();
        // Force 0 beats 1, 1 beats 2, 2 beats 0.
        for p in &mut m.pairs {
            p.svm.w = vec![0.0, 0.0];
            p.svm.b = if (p.i, p.j) == (0, 2) { 1.0 } else { -1.0 };
        }
        assert_eq!(predict(&m, &[0.0, 0.0]).0, 0);
    }

    #[test]
    fn json_round_trip() {
        let ds = three_clusters();
        let m = train_ovo(&ds, 10.0).unwrap();
        let back = OvoModel::from_json(&m.to_json(), "mem").unwrap();
        assert_eq!(back.pairs.len(), 3);
        assert_eq!(predict(&back, &[19.0, 0.0]).0, predict(&m, &[19.0, 0.0]).0);
    }
}
