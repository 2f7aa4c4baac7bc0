//! Security-constrained economic dispatch as a parametric LP.
//!
//! The dispatch problem is kept in the form `min cᵀP_G  s.t. A·P_G + s = b + W·P_D, s ≥ 0`
//! with rows ordered balance(+), balance(−), line(+), line(−), generator upper,
//! generator lower. Only the right-hand side depends on the load vector, which
//! is what makes the region analysis in [`crate::mpr`] possible.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{NetworkCase, ShiftFactorMatrix};
use crate::simplex::{solve_inequality, LpFailure};

/// Tag of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    BalancePlus,
    BalanceMinus,
    LinePlus(usize),
    LineMinus(usize),
    GenUpper(usize),
    GenLower(usize),
}

impl std::fmt::Display for RowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowKind::BalancePlus => write!(f, "balance+"),
            RowKind::BalanceMinus => write!(f, "balance-"),
            RowKind::LinePlus(l) => write!(f, "line{}+", l + 1),
            RowKind::LineMinus(l) => write!(f, "line{}-", l + 1),
            RowKind::GenUpper(g) => write!(f, "gen{}+", g + 1),
            RowKind::GenLower(g) => write!(f, "gen{}-", g + 1),
        }
    }
}

/// Optional replacements for the load-independent right-hand side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub ratings: Option<Vec<f64>>,
    pub gen_lo: Option<Vec<f64>>,
    pub gen_hi: Option<Vec<f64>>,
}

/// The dispatch LP with the load vector left as a parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricLp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub w: DMatrix<f64>,
    pub c: DVector<f64>,
    pub rows: Vec<RowKind>,
    pub h: DMatrix<f64>,
    /// Buses whose load is a free parameter. Other buses carry zero load.
    pub load_buses: Vec<usize>,
}

impl ParametricLp {
    pub fn n_rows(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_gens(&self) -> usize {
        self.a.ncols()
    }
    pub fn n_buses(&self) -> usize {
        self.w.ncols()
    }
    pub fn n_lines(&self) -> usize {
        self.h.nrows()
    }

    /// `b + W·P_D` for a full per-bus load vector.
    pub fn rhs(&self, pd: &[f64]) -> DVector<f64> {
        &self.b + &self.w * DVector::from_column_slice(pd)
    }

    /// Returns a copy with a different cost vector.
    pub fn with_costs(&self, c: &[f64]) -> Result<Self> {
        if c.len() != self.n_gens() {
            return Err(Error::Dimension(format!("expected {} costs, got {}", self.n_gens(), c.len())));
        }
        let mut lp = self.clone();
        lp.c = DVector::from_column_slice(c);
        Ok(lp)
    }

    /// Expands a load-bus parameter vector to a full per-bus vector.
    pub fn full_load(&self, params: &[f64]) -> Vec<f64> {
        let mut pd = vec![0.0; self.n_buses()];
        for (&b, &v) in self.load_buses.iter().zip(params) {
            pd[b] = v;
        }
        pd
    }
}

/// Assembles the parametric dispatch LP.
pub fn build_sced(case: &NetworkCase, sf: &ShiftFactorMatrix, overrides: &Overrides) -> Result<ParametricLp> {
    let (nl, nb) = sf.h.shape();
    let ng = case.n_gens();
    if nl != case.n_lines() || nb != case.n_buses {
        return Err(Error::Dimension(format!(
            "shift factors are {nl}x{nb}, case has {} lines and {} buses",
            case.n_lines(),
            case.n_buses
        )));
    }
    let pick = |v: &Option<Vec<f64>>, n: usize, what: &str, default: Vec<f64>| -> Result<Vec<f64>> {
        match v {
            Some(x) if x.len() != n => Err(Error::Dimension(format!("{what} override has {} entries, need {n}", x.len()))),
            Some(x) => Ok(x.clone()),
            None => Ok(default),
        }
    };
    let f = pick(&overrides.ratings, nl, "rating", case.ratings())?;
    let lo = pick(&overrides.gen_lo, ng, "lower bound", case.generators.iter().map(|g| g.pmin).collect())?;
    let hi = pick(&overrides.gen_hi, ng, "upper bound", case.generators.iter().map(|g| g.pmax).collect())?;
    if f.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("line ratings must be positive".into()));
    }
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return Err(Error::InvalidArgument("generator lower bound exceeds upper bound".into()));
    }

    // Generator-to-bus incidence, so line rows act on P_G through H·Cg.
    let mut cg = DMatrix::zeros(nb, ng);
    for (k, g) in case.generators.iter().enumerate() {
        cg[(g.bus, k)] = 1.0;
    }
    let hg = &sf.h * &cg;

    let nc = 2 + 2 * nl + 2 * ng;
    let mut a = DMatrix::zeros(nc, ng);
    let mut w = DMatrix::zeros(nc, nb);
    let mut b = DVector::zeros(nc);
    let mut rows = Vec::with_capacity(nc);

    for k in 0..ng {
        a[(0, k)] = 1.0;
        a[(1, k)] = -1.0;
    }
    for j in 0..nb {
        w[(0, j)] = 1.0;
        w[(1, j)] = -1.0;
    }
    rows.push(RowKind::BalancePlus);
    rows.push(RowKind::BalanceMinus);
    for l in 0..nl {
        let (rp, rm) = (2 + l, 2 + nl + l);
        for k in 0..ng {
            a[(rp, k)] = hg[(l, k)];
            a[(rm, k)] = -hg[(l, k)];
        }
        for j in 0..nb {
            w[(rp, j)] = sf.h[(l, j)];
            w[(rm, j)] = -sf.h[(l, j)];
        }
        b[rp] = f[l];
        b[rm] = f[l];
    }
    rows.extend((0..nl).map(RowKind::LinePlus));
    rows.extend((0..nl).map(RowKind::LineMinus));
    for k in 0..ng {
        let (ru, rl) = (2 + 2 * nl + k, 2 + 2 * nl + ng + k);
        a[(ru, k)] = 1.0;
        a[(rl, k)] = -1.0;
        b[ru] = hi[k];
        b[rl] = -lo[k];
    }
    rows.extend((0..ng).map(RowKind::GenUpper));
    rows.extend((0..ng).map(RowKind::GenLower));

    Ok(ParametricLp {
        a,
        b,
        w,
        c: DVector::from_iterator(ng, case.generators.iter().map(|g| g.cost)),
        rows,
        h: sf.h.clone(),
        load_buses: case.load_buses.clone(),
    })
}

/// Optimal dispatch with its multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub pg: Vec<f64>,
    pub objective: f64,
    /// Energy price: multiplier of the balance equation.
    pub lambda1: f64,
    pub mu_plus: Vec<f64>,
    pub mu_minus: Vec<f64>,
    pub eta_plus: Vec<f64>,
    pub eta_minus: Vec<f64>,
    /// Stacked multipliers, one per row, all nonnegative.
    pub y: Vec<f64>,
    pub slacks: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Binding rows after dropping the redundant second balance row.
    pub binding: Vec<usize>,
    pub binding_tol: f64,
    pub degenerate: bool,
    pub degeneracy_note: Option<String>,
}

pub const BINDING_TOL: f64 = 1e-7;

/// Solves the dispatch LP at the given per-bus load vector.
pub fn solve_lp(lp: &ParametricLp, pd: &[f64]) -> Result<DispatchSolution> {
    if pd.len() != lp.n_buses() {
        return Err(Error::Dimension(format!("load vector has {} entries, need {}", pd.len(), lp.n_buses())));
    }
    if pd.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("load vector contains non-finite values".into()));
    }
    let rhs = lp.rhs(pd);
    let c: Vec<f64> = lp.c.iter().copied().collect();
    let sol = solve_inequality(&c, &lp.a, rhs.as_slice()).map_err(|e| match e {
        LpFailure::Infeasible => Error::Infeasible,
        LpFailure::Unbounded => Error::Unbounded,
        other => Error::Degenerate(format!("solver failure: {other:?}")),
    })?;

    let nc = lp.n_rows();
    let (nl, ng) = (lp.n_lines(), lp.n_gens());
    let pg = sol.z;
    let ax = &lp.a * DVector::from_column_slice(&pg);
    let slacks: Vec<f64> = (0..nc).map(|i| rhs[i] - ax[i]).collect();
    let y = sol.duals;

    let tol_of = |i: usize| BINDING_TOL * (1.0 + rhs[i].abs());
    let binding: Vec<usize> = (0..nc).filter(|&i| i != 1 && slacks[i] <= tol_of(i)).collect();

    let mut notes = Vec::new();
    if binding.len() != ng {
        notes.push(format!("{} binding rows for {} generators", binding.len(), ng));
    }
    for &r in &sol.basis {
        if r >= 2 && y[r] <= 1e-9 * (1.0 + lp.c.amax()) {
            notes.push(format!("basic multiplier of row {} is zero", r + 1));
        }
    }
    let objective = lp.c.iter().zip(&pg).map(|(a, b)| a * b).sum();

    Ok(DispatchSolution {
        lambda1: y[1] - y[0],
        mu_plus: y[2..2 + nl].to_vec(),
        mu_minus: y[2 + nl..2 + 2 * nl].to_vec(),
        eta_plus: y[2 + 2 * nl..2 + 2 * nl + ng].to_vec(),
        eta_minus: y[2 + 2 * nl + ng..].to_vec(),
        pg,
        objective,
        y,
        slacks,
        rhs: rhs.iter().copied().collect(),
        binding,
        binding_tol: BINDING_TOL,
        degenerate: !notes.is_empty(),
        degeneracy_note: if notes.is_empty() { None } else { Some(notes.join("; ")) },
    })
}

/// Locational marginal prices, one per bus, in $/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpVector {
    pub lambda: Vec<f64>,
}

impl LmpVector {
    pub fn max_abs_diff(&self, other: &LmpVector) -> f64 {
        self.lambda.iter().zip(&other.lambda).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Prices as the sensitivity of optimal cost to nodal load.
///
/// With the line rows written as `H·(P_G − P_D) ≤ F` the multiplier of the
/// positive-direction row lowers the price at buses that push flow along the
/// line, hence `λ = λ₁·1 + Hᵀ(μ⁻ − μ⁺)`.
pub fn compute_lmp(sol: &DispatchSolution, sf: &ShiftFactorMatrix) -> Result<LmpVector> {
    let (nl, nb) = sf.h.shape();
    if sol.mu_plus.len() != nl {
        return Err(Error::Dimension(format!("solution has {} line duals, network has {nl}", sol.mu_plus.len())));
    }
    let lambda = (0..nb)
        .map(|j| sol.lambda1 + (0..nl).map(|l| sf.h[(l, j)] * (sol.mu_minus[l] - sol.mu_plus[l])).sum::<f64>())
        .collect();
    Ok(LmpVector { lambda })
}

/// Scales every line rating by `1 + xi`.
pub fn apply_dlr(case: &NetworkCase, xi: f64) -> Result<NetworkCase> {
    if !(xi > -1.0) || !xi.is_finite() {
        return Err(Error::InvalidArgument(format!("rating factor 1 + {xi} must be positive")));
    }
    let mut out = case.clone();
    for l in &mut out.lines {
        l.rating *= 1.0 + xi;
    }
    Ok(out)
}

/// Tightens generator limits to what is reachable from `prev` in `dt` minutes.
pub fn apply_ramp(case: &NetworkCase, prev: &[f64], dt: f64) -> Result<NetworkCase> {
    if prev.len() != case.n_gens() {
        return Err(Error::Dimension(format!("{} previous outputs for {} generators", prev.len(), case.n_gens())));
    }
    if !(dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be nonnegative")));
    }
    let mut out = case.clone();
    for (k, (g, &p)) in out.generators.iter_mut().zip(prev).enumerate() {
        let slack = 1e-6 * (1.0 + g.pmax.abs());
        if p < g.pmin - slack || p > g.pmax + slack {
            return Err(Error::InvalidArgument(format!(
                "previous output {p} of generator {} is outside [{}, {}]",
                k + 1,
                g.pmin,
                g.pmax
            )));
        }
        let lo = g.pmin.max(p - g.ramp_down * dt);
        let hi = g.pmax.min(p + g.ramp_up * dt);
        if lo > hi {
            return Err(Error::Infeasible);
        }
        g.pmin = lo;
        g.pmax = hi;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::compute_shift_factors;

    fn fig1() -> NetworkCase {
        crate::grid::load_case(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig1.json")).unwrap()
    }

    #[test]
    fn row_counts() {
        let case = fig1();
        let sf = compute_shift_factors(&case).unwrap();
        let lp = build_sced(&case, &sf, &Overrides::default()).unwrap();
        assert_eq!(lp.n_rows(), 12);
        assert_eq!(lp.rows[4], RowKind::LinePlus(2));
    }

    #[test]
    fn uncongested_price_is_cheapest_unit() {
        let case = fig1();
        let sf = compute_shift_factors(&case).unwrap();
        let lp = build_sced(&case, &sf, &Overrides::default()).unwrap();
        let sol = solve_lp(&lp, &[0.0, 20.0, 20.0]).unwrap();
        assert!(!sol.degenerate);
        assert!((sol.lambda1 - 20.0).abs() < 1e-9);
        let lmp = compute_lmp(&sol, &sf).unwrap();
        assert!(lmp.lambda.iter().all(|v| (v - 20.0).abs() < 1e-9));
    }

    #[test]
    fn ramp_window() {
        let case = fig1();
        let out = apply_ramp(&case, &[50.0, 0.0], 5.0).unwrap();
        assert!((out.generators[0].pmin - (50.0 - 100.0 / 3.0)).abs() < 1e-9);
        assert!((out.generators[1].pmax - 50.0).abs() < 1e-9);
    }
}
