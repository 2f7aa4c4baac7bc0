//! Network data model and DC shift factors.
//!
//! Case files number buses from 1. In memory every index is 0-based.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A transmission line in a case file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    /// Thermal rating in MW.
    pub rating: f64,
}

/// A generator in a case file. Ramp rates are in MW/min.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub bus: usize,
    pub cost: f64,
    pub pmin: f64,
    pub pmax: f64,
    #[serde(default)]
    pub ramp_up: f64,
    #[serde(default)]
    pub ramp_down: f64,
}

/// On-disk layout of a case, 1-based bus numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    #[serde(default)]
    name: String,
    buses: usize,
    lines: Vec<LineSpec>,
    generators: Vec<GeneratorSpec>,
    slack: usize,
    /// Buses that carry load. Defaults to every bus.
    #[serde(default)]
    loads: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: usize,
    pub cost: f64,
    pub pmin: f64,
    pub pmax: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
}

/// A validated dispatch instance. All bus indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub name: String,
    pub n_buses: usize,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub slack: usize,
    /// Sorted list of buses with a (possibly negative) load.
    pub load_buses: Vec<usize>,
}

impl NetworkCase {
    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn n_gens(&self) -> usize {
        self.generators.len()
    }

    pub fn ratings(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.rating).collect()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.generators.iter().map(|g| g.cost).collect()
    }

    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.pmax).sum()
    }

    /// Expands a vector over load buses into a full per-bus vector.
    pub fn expand_loads(&self, loads: &[f64]) -> Result<Vec<f64>> {
        if loads.len() != self.load_buses.len() {
            return Err(Error::Dimension(format!(
                "expected {} load values, got {}",
                self.load_buses.len(),
                loads.len()
            )));
        }
        let mut full = vec![0.0; self.n_buses];
        for (&bus, &v) in self.load_buses.iter().zip(loads) {
            full[bus] = v;
        }
        Ok(full)
    }

    /// Parses and validates a case from JSON text.
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let file: CaseFile = serde_json::from_str(text).map_err(|e| Error::parse_json(context, &e))?;
        Self::from_file_layout(file)
    }

    pub fn to_json(&self) -> String {
        let file = CaseFile {
            name: self.name.clone(),
            buses: self.n_buses,
            lines: self
                .lines
                .iter()
                .map(|l| LineSpec { from: l.from + 1, to: l.to + 1, susceptance: l.susceptance, rating: l.rating })
                .collect(),
            generators: self
                .generators
                .iter()
                .map(|g| GeneratorSpec {
                    bus: g.bus + 1,
                    cost: g.cost,
                    pmin: g.pmin,
                    pmax: g.pmax,
                    ramp_up: g.ramp_up,
                    ramp_down: g.ramp_down,
                })
                .collect(),
            slack: self.slack + 1,
            loads: Some(self.load_buses.iter().map(|b| b + 1).collect()),
        };
        serde_json::to_string_pretty(&file).expect("case serializes")
    }

    fn from_file_layout(file: CaseFile) -> Result<Self> {
        let nb = file.buses;
        if nb == 0 {
            return Err(Error::InvalidCase("case has no buses".into()));
        }
        let bus = |b: usize, what: &str| -> Result<usize> {
            if b == 0 || b > nb {
                Err(Error::InvalidCase(format!("{what} refers to bus {b}, valid range is 1..={nb}")))
            } else {
                Ok(b - 1)
            }
        };
        let mut lines = Vec::with_capacity(file.lines.len());
        for (k, l) in file.lines.iter().enumerate() {
            let what = format!("line {}", k + 1);
            lines.push(Line {
                from: bus(l.from, &what)?,
                to: bus(l.to, &what)?,
                susceptance: l.susceptance,
                rating: l.rating,
            });
        }
        let mut generators = Vec::with_capacity(file.generators.len());
        for (k, g) in file.generators.iter().enumerate() {
            generators.push(Generator {
                bus: bus(g.bus, &format!("generator {}", k + 1))?,
                cost: g.cost,
                pmin: g.pmin,
                pmax: g.pmax,
                ramp_up: g.ramp_up,
                ramp_down: g.ramp_down,
            });
        }
        let slack = bus(file.slack, "slack")?;
        let load_buses = match file.loads {
            None => (0..nb).collect(),
            Some(list) => {
                let mut v = list.iter().map(|&b| bus(b, "load list")).collect::<Result<Vec<_>>>()?;
                v.sort_unstable();
                v.dedup();
                v
            }
        };
        let case = NetworkCase { name: file.name, n_buses: nb, lines, generators, slack, load_buses };
        case.validate()?;
        Ok(case)
    }

    /// Checks every structural invariant, naming the offending element.
    pub fn validate(&self) -> Result<()> {
        let nb = self.n_buses;
        if self.slack >= nb {
            return Err(Error::InvalidCase(format!("slack bus {} out of range", self.slack + 1)));
        }
        if self.generators.is_empty() {
            return Err(Error::InvalidCase("case has no generators".into()));
        }
        if self.load_buses.is_empty() {
            return Err(Error::InvalidCase("case has no load buses".into()));
        }
        for (k, l) in self.lines.iter().enumerate() {
            if l.from >= nb || l.to >= nb {
                return Err(Error::InvalidCase(format!("line {} endpoint out of range", k + 1)));
            }
            if l.from == l.to {
                return Err(Error::InvalidCase(format!("line {} is a self loop", k + 1)));
            }
            if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
                return Err(Error::InvalidCase(format!(
                    "line {} has non-positive susceptance {}",
                    k + 1,
                    l.susceptance
                )));
            }
            if !(l.rating > 0.0 && l.rating.is_finite()) {
                return Err(Error::InvalidCase(format!("line {} has non-positive rating {}", k + 1, l.rating)));
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            if g.bus >= nb {
                return Err(Error::InvalidCase(format!("generator {} bus out of range", k + 1)));
            }
            if !g.cost.is_finite() || !g.pmin.is_finite() || !g.pmax.is_finite() {
                return Err(Error::InvalidCase(format!("generator {} has non-finite data", k + 1)));
            }
            if g.pmin > g.pmax {
                return Err(Error::InvalidCase(format!(
                    "generator {} has pmin {} greater than pmax {}",
                    k + 1,
                    g.pmin,
                    g.pmax
                )));
            }
            if g.ramp_up < 0.0 || g.ramp_down < 0.0 {
                return Err(Error::InvalidCase(format!("generator {} has a negative ramp rate", k + 1)));
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidCase("network graph is not connected".into()));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let nb = self.n_buses;
        let mut adj = vec![Vec::new(); nb];
        for l in &self.lines {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
        let mut seen = vec![false; nb];
        let mut queue = VecDeque::from([self.slack]);
        seen[self.slack] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Reads and validates a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<NetworkCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    NetworkCase::from_json(&text, &path.display().to_string())
}

/// Line flow per unit of injection at each bus, withdrawn at the slack.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftFactorMatrix {
    pub h: DMatrix<f64>,
}

impl ShiftFactorMatrix {
    /// Flows for a net injection vector.
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        (0..self.h.nrows())
            .map(|l| (0..self.h.ncols()).map(|k| self.h[(l, k)] * injection[k]).sum())
            .collect()
    }
}

/// Nodal susceptance matrix of the DC network.
pub fn susceptance_matrix(case: &NetworkCase) -> DMatrix<f64> {
    let nb = case.n_buses;
    let mut bbus = DMatrix::zeros(nb, nb);
    for l in &case.lines {
        bbus[(l.from, l.from)] += l.susceptance;
        bbus[(l.to, l.to)] += l.susceptance;
        bbus[(l.from, l.to)] -= l.susceptance;
        bbus[(l.to, l.from)] -= l.susceptance;
    }
    bbus
}

/// Builds the PTDF matrix by inverting the reduced susceptance matrix.
pub fn compute_shift_factors(case: &NetworkCase) -> Result<ShiftFactorMatrix> {
    let nb = case.n_buses;
    let keep: Vec<usize> = (0..nb).filter(|&b| b != case.slack).collect();
    let bbus = susceptance_matrix(case);
    let reduced = bbus.select_rows(&keep).select_columns(&keep);
    let inv = if keep.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        let lu = reduced.lu();
        let det = lu.determinant();
        if det.abs() < 1e-12 || !det.is_finite() {
            return Err(Error::SingularNetwork(format!("determinant {det:e}")));
        }
        lu.try_inverse()
            .ok_or_else(|| Error::SingularNetwork("reduced matrix not invertible".into()))?
    };
    // Full-size reactance matrix with a zero slack row and column.
    let mut x = DMatrix::zeros(nb, nb);
    for (i, &bi) in keep.iter().enumerate() {
        for (j, &bj) in keep.iter().enumerate() {
            x[(bi, bj)] = inv[(i, j)];
        }
    }
    let mut h = DMatrix::zeros(case.n_lines(), nb);
    for (k, l) in case.lines.iter().enumerate() {
        for bus in 0..nb {
            h[(k, bus)] = l.susceptance * (x[(l.from, bus)] - x[(l.to, bus)]);
        }
    }
    Ok(ShiftFactorMatrix { h })
}
