//! Monte-Carlo market datasets.
//!
//! Every sample draws its randomness from its own ChaCha8 stream
//! (`seed_from_u64(seed)` with stream = sample index), so datasets are
//! bit-identical across runs and thread counts.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{compute_shift_factors, NetworkCase};
use crate::learn::{group_labels, LabeledDataset, RowMeta};
use crate::mpr::LoadBox;
use crate::sced::{apply_dlr, apply_ramp, build_sced, compute_lmp, solve_lp, Overrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Static line ratings.
    Slr,
    /// Dynamic line ratings `F = (1 + ξ)·F₀` with a fresh ξ per sample.
    Dlr,
    /// Sequential dispatch with ramp limits between intervals.
    Ramp,
}

impl Mode {
    pub fn tag(self) -> &'static str {
        match self {
            Mode::Slr => "slr",
            Mode::Dlr => "dlr",
            Mode::Ramp => "ramp",
        }
    }
}

/// Expected load per interval and load bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub means: Vec<Vec<f64>>,
}

impl LoadProfile {
    /// A smooth daily curve around 60% of installed capacity, split evenly
    /// over the load buses, each bus slightly phase-shifted.
    pub fn synthetic_daily(case: &NetworkCase, n_steps: usize, dt_minutes: f64) -> Self {
        let d = case.load_buses.len();
        let base = 0.6 * case.total_capacity() / d as f64;
        let means = (0..n_steps)
            .map(|t| {
                let day = 2.0 * std::f64::consts::PI * (t as f64 * dt_minutes) / 1440.0;
                (0..d).map(|b| base * (1.0 + 0.3 * (day - std::f64::consts::FRAC_PI_2 + 0.4 * b as f64).sin())).collect()
            })
            .collect();
        LoadProfile { means }
    }

    /// Reads a headered CSV with one column per load bus.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut means = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(col, v)| {
                    v.trim().parse::<f64>().map_err(|e| Error::Parse {
                        context: path.display().to_string(),
                        line: k + 2,
                        column: col + 1,
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            means.push(row);
        }
        if means.is_empty() {
            return Err(Error::InvalidArgument(format!("{} holds no profile rows", path.display())));
        }
        Ok(LoadProfile { means })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// Independent uniform draws from a box over the load buses.
    UniformBox(LoadBox),
    /// Normal draws around a profile, `σ = sigma_frac·|µ|`.
    NormalProfile(LoadProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub n_samples: usize,
    pub seed: u64,
    pub sigma_frac: f64,
    pub xi_sigma: f64,
    /// Ramp rate as a multiple of `(pmax − pmin)/15` per minute.
    pub ramp_scale: f64,
    pub dt_minutes: f64,
    pub sampling: Sampling,
}

impl ScenarioConfig {
    pub fn new(mode: Mode, n_samples: usize, seed: u64, sampling: Sampling) -> Self {
        ScenarioConfig { mode, n_samples, seed, sigma_frac: 0.10, xi_sigma: 0.10, ramp_scale: 1.0, dt_minutes: 5.0, sampling }
    }

    fn validate(&self, case: &NetworkCase) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be positive".into()));
        }
        if !(self.sigma_frac >= 0.0) || !(self.xi_sigma >= 0.0) {
            return Err(Error::InvalidArgument("standard deviations must be nonnegative".into()));
        }
        if !(self.ramp_scale > 0.0) {
            return Err(Error::InvalidArgument("ramp scale must be positive".into()));
        }
        let d = case.load_buses.len();
        match &self.sampling {
            Sampling::UniformBox(b) if b.dim() != d => {
                Err(Error::Dimension(format!("box has {} dims, case has {d} load buses", b.dim())))
            }
            Sampling::NormalProfile(p) if p.means.iter().any(|r| r.len() != d) => {
                Err(Error::Dimension(format!("profile rows must have {d} entries")))
            }
            Sampling::NormalProfile(p) if p.means.is_empty() => Err(Error::InvalidArgument("empty profile".into())),
            _ => Ok(()),
        }
    }

    /// One load draw over the load buses for interval `t`.
    fn draw(&self, t: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match &self.sampling {
            Sampling::UniformBox(b) => b.sample(rng),
            Sampling::NormalProfile(p) => {
                let mu = &p.means[t % p.means.len()];
                mu.iter()
                    .map(|&m| {
                        let sd = self.sigma_frac * m.abs();
                        if sd > 0.0 {
                            Normal::new(m, sd).expect("finite sd").sample(rng)
                        } else {
                            m
                        }
                    })
                    .collect()
            }
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { context: path.display().to_string(), line, column: 0, message: e.to_string() }
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws at most this many candidates for one sample before giving up.
const MAX_ATTEMPTS_PER_SAMPLE: usize = 1000;
/// Resampling budget for one interval of a ramp chain.
const MAX_RAMP_RETRIES: usize = 100;

/// Feasible load draws (over load buses) for the base case.
pub fn sample_loads(config: &ScenarioConfig, case: &NetworkCase) -> Result<Vec<Vec<f64>>> {
    config.validate(case)?;
    let sf = compute_shift_factors(case)?;
    let lp = build_sced(case, &sf, &Overrides::default())?;
    let draws: Vec<Result<(Vec<f64>, usize)>> = (0..config.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(config.seed, i);
            for attempt in 1..=MAX_ATTEMPTS_PER_SAMPLE {
                let x = config.draw(i, &mut rng);
                if solve_lp(&lp, &lp.full_load(&x)).is_ok() {
                    return Ok((x, attempt));
                }
            }
            Err(Error::LowFeasibility { accepted: 0, attempted: MAX_ATTEMPTS_PER_SAMPLE })
        })
        .collect();
    let mut out = Vec::with_capacity(config.n_samples);
    let mut attempts = 0;
    for d in draws {
        let (x, a) = d?;
        attempts += a;
        out.push(x);
    }
    check_rate(out.len(), attempts)?;
    log::info!("sampled {} loads, {} infeasible draws resampled", out.len(), attempts - out.len());
    Ok(out)
}

fn check_rate(accepted: usize, attempted: usize) -> Result<()> {
    if attempted > 0 && (accepted as f64) < 0.01 * attempted as f64 {
        return Err(Error::LowFeasibility { accepted, attempted });
    }
    Ok(())
}

/// One generated observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    /// Full per-bus load vector.
    pub pd: Vec<f64>,
    pub lmp: Vec<f64>,
    pub xi: f64,
    pub scenario: String,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub rows: Vec<SampleRow>,
    pub dataset: LabeledDataset,
    pub attempts: usize,
    pub degenerate: usize,
    /// Set when a ramp chain ended early.
    pub truncated: bool,
}

/// Solves a dispatch per sample and labels rows by their price vectors.
pub fn generate_dataset(case: &NetworkCase, config: &ScenarioConfig) -> Result<GeneratedData> {
    config.validate(case)?;
    let sf = compute_shift_factors(case)?;
    let (rows, attempts, truncated) = match config.mode {
        Mode::Slr | Mode::Dlr => {
            let base = build_sced(case, &sf, &Overrides::default())?;
            let xi_dist = Normal::new(0.0, config.xi_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let results: Vec<Result<(SampleRow, usize)>> = (0..config.n_samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = sample_rng(config.seed, i);
                    for attempt in 1..=MAX_ATTEMPTS_PER_SAMPLE {
                        let (xi, lp) = if config.mode == Mode::Dlr {
                            let xi: f64 = xi_dist.sample(&mut rng);
                            if xi <= -1.0 {
                                continue;
                            }
                            let ratings = apply_dlr(case, xi)?.ratings();
                            (xi, build_sced(case, &sf, &Overrides { ratings: Some(ratings), ..Default::default() })?)
                        } else {
                            (0.0, base.clone())
                        };
                        let x = config.draw(i, &mut rng);
                        let pd = lp.full_load(&x);
                        match solve_lp(&lp, &pd) {
                            Ok(sol) => {
                                let lmp = compute_lmp(&sol, &sf)?.lambda;
                                let row = SampleRow { pd, lmp, xi, scenario: config.mode.tag().into(), degenerate: sol.degenerate };
                                return Ok((row, attempt));
                            }
                            Err(Error::Infeasible) => continue,
                            Err(e) => return Err(e),
                        }
                    }
                    Err(Error::LowFeasibility { accepted: 0, attempted: MAX_ATTEMPTS_PER_SAMPLE })
                })
                .collect();
            let mut rows = Vec::with_capacity(config.n_samples);
            let mut attempts = 0;
            for r in results {
                let (row, a) = r?;
                attempts += a;
                rows.push(row);
            }
            (rows, attempts, false)
        }
        Mode::Ramp => ramp_chain(case, config, &sf)?,
    };
    check_rate(rows.len(), attempts)?;
    let degenerate = rows.iter().filter(|r| r.degenerate).count();
    if degenerate > 0 {
        log::warn!("{degenerate} rows came from degenerate solves");
    }
    let dataset = dataset_from_rows(&rows)?;
    Ok(GeneratedData { rows, dataset, attempts, degenerate, truncated })
}

fn ramp_chain(
    case: &NetworkCase,
    config: &ScenarioConfig,
    sf: &crate::grid::ShiftFactorMatrix,
) -> Result<(Vec<SampleRow>, usize, bool)> {
    let mut ramped = case.clone();
    for g in &mut ramped.generators {
        let r = config.ramp_scale * (g.pmax - g.pmin) / 15.0;
        g.ramp_up = r;
        g.ramp_down = r;
    }
    let mut rows = Vec::with_capacity(config.n_samples);
    let mut attempts = 0;
    let mut prev: Option<Vec<f64>> = None;
    for t in 0..config.n_samples {
        let mut rng = sample_rng(config.seed, t);
        let window = match &prev {
            None => ramped.clone(),
            Some(pg) => apply_ramp(&ramped, pg, config.dt_minutes)?,
        };
        let lp = build_sced(
            case,
            sf,
            &Overrides {
                ratings: None,
                gen_lo: Some(window.generators.iter().map(|g| g.pmin).collect()),
                gen_hi: Some(window.generators.iter().map(|g| g.pmax).collect()),
            },
        )?;
        let mut solved = None;
        for _ in 0..MAX_RAMP_RETRIES {
            attempts += 1;
            let x = config.draw(t, &mut rng);
            let pd = lp.full_load(&x);
            match solve_lp(&lp, &pd) {
                Ok(sol) => {
                    solved = Some((pd, sol));
                    break;
                }
                Err(Error::Infeasible) => continue,
                Err(e) => return Err(e),
            }
        }
        let Some((pd, sol)) = solved else {
            log::warn!("ramp chain truncated at interval {t}: no feasible load in {MAX_RAMP_RETRIES} draws");
            return Ok((rows, attempts, true));
        };
        let lmp = compute_lmp(&sol, sf)?.lambda;
        rows.push(SampleRow { pd, lmp, xi: 0.0, scenario: Mode::Ramp.tag().into(), degenerate: sol.degenerate });
        prev = Some(sol.pg.clone());
    }
    Ok((rows, attempts, false))
}

/// Groups rows into classes by price vector and attaches row metadata.
pub fn dataset_from_rows(rows: &[SampleRow]) -> Result<LabeledDataset> {
    let loads: Vec<Vec<f64>> = rows.iter().map(|r| r.pd.clone()).collect();
    let lmps: Vec<Vec<f64>> = rows.iter().map(|r| r.lmp.clone()).collect();
    let mut ds = group_labels(&loads, &lmps, 1e-6)?;
    ds.meta = rows
        .iter()
        .enumerate()
        .map(|(i, r)| RowMeta { index: i, scenario: r.scenario.clone(), xi: r.xi })
        .collect();
    Ok(ds)
}

/// Formats with 9 significant digits, like C's `%.9g`.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s }
    } else {
        let s = format!("{v:.8e}");
        let (mant, e) = s.split_once('e').expect("exponent form");
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{e}")
    };
    if s == "-0" { "0".into() } else { s }
}

/// Writes `idx, PD_1..PD_nb, LMP_1..LMP_nb, xi, scenario`.
pub fn write_csv(rows: &[SampleRow], path: &Path) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(std::io::Error::other(e)))?;
    let nb = rows.first().map_or(0, |r| r.pd.len());
    let mut header = vec!["idx".to_string()];
    header.extend((1..=nb).map(|b| format!("PD_{b}")));
    header.extend((1..=nb).map(|b| format!("LMP_{b}")));
    header.push("xi".into());
    header.push("scenario".into());
    w.write_record(&header).map_err(|e| io(std::io::Error::other(e)))?;
    for (i, r) in rows.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(r.pd.iter().map(|&v| fmt_sig9(v)));
        rec.extend(r.lmp.iter().map(|&v| fmt_sig9(v)));
        rec.push(fmt_sig9(r.xi));
        rec.push(r.scenario.clone());
        w.write_record(&rec).map_err(|e| io(std::io::Error::other(e)))?;
    }
    w.flush().map_err(io)
}

/// Reads a dataset CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<SampleRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let nb = header.iter().filter(|h| h.starts_with("PD_")).count();
    let expected = 2 * nb + 3;
    if nb == 0 || header.len() != expected || &header[0] != "idx" || &header[expected - 1] != "scenario" {
        return Err(Error::Parse {
            context: path.display().to_string(),
            line: 1,
            column: 0,
            message: "header must be idx, PD_1..PD_n, LMP_1..LMP_n, xi, scenario".into(),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let num = |col: usize| -> Result<f64> {
            rec[col].trim().parse::<f64>().map_err(|e| Error::Parse {
                context: path.display().to_string(),
                line: k + 2,
                column: col + 1,
                message: format!("{}: {e}", &header[col]),
            })
        };
        let pd = (1..=nb).map(num).collect::<Result<Vec<_>>>()?;
        let lmp = (nb + 1..=2 * nb).map(num).collect::<Result<Vec<_>>>()?;
        rows.push(SampleRow { pd, lmp, xi: num(2 * nb + 1)?, scenario: rec[expected - 1].to_string(), degenerate: false });
    }
    Ok(rows)
}

/// Random uniform loads without any feasibility filtering.
pub fn uniform_points(bx: &LoadBox, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| bx.lower.iter().zip(&bx.upper).map(|(l, u)| rng.random_range(*l..*u)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(20.0), "20");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(-123456.789012), "-123456.789");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig9(123456789012.0), "1.23456789e11");
    }
}
