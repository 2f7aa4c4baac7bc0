//! Multi-parametric analysis of the dispatch LP.
//!
//! A *system pattern* is the set of binding rows at the optimum. All load
//! vectors sharing a pattern form a convex polytope (a system pattern region)
//! on which the dispatch is affine and the prices are constant. Regions live
//! in the space of load-bus injections; buses without load are fixed at zero.

pub mod polytope;

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{compute_shift_factors, NetworkCase};
use crate::sced::{build_sced, solve_lp, DispatchSolution, LmpVector, Overrides, ParametricLp, RowKind};
use polytope::{Normalized, Polytope};

/// Binding rows of an optimal partition, 0-based, with the second balance row
/// removed. Serialized in 1-based form with both balance rows listed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct SystemPattern {
    rows: Vec<usize>,
}

impl SystemPattern {
    pub fn new(mut rows: Vec<usize>) -> Result<Self> {
        rows.sort_unstable();
        let before = rows.len();
        rows.dedup();
        if rows.len() != before {
            return Err(Error::InvalidPattern("repeated row index".into()));
        }
        if rows.contains(&1) {
            return Err(Error::InvalidPattern("the second balance row is implied by the first".into()));
        }
        if rows.first() != Some(&0) {
            return Err(Error::InvalidPattern("the balance row must be binding".into()));
        }
        Ok(SystemPattern { rows })
    }

    /// 0-based binding rows, balance row first.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// 1-based indices including both balance rows, e.g. `[1, 2, 13, 14]`.
    pub fn display_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.rows.iter().map(|r| r + 1).collect();
        v.push(2);
        v.sort_unstable();
        v
    }

    pub fn from_display(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidPattern("pattern indices are 1-based".into()));
        }
        Self::new(indices.iter().filter(|&&i| i != 2).map(|i| i - 1).collect())
    }

    /// Number of rows in which the two patterns differ (symmetric difference / 2).
    pub fn distance(&self, other: &SystemPattern) -> usize {
        let a: BTreeSet<_> = self.rows.iter().collect();
        let b: BTreeSet<_> = other.rows.iter().collect();
        a.symmetric_difference(&b).count()
    }

    pub fn labels(&self, lp: &ParametricLp) -> Vec<String> {
        self.rows.iter().map(|&r| lp.rows[r].to_string()).collect()
    }
}

impl From<SystemPattern> for Vec<usize> {
    fn from(p: SystemPattern) -> Self {
        p.display_indices()
    }
}

impl TryFrom<Vec<usize>> for SystemPattern {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        SystemPattern::from_display(&v)
    }
}

impl std::fmt::Display for SystemPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.display_indices())
    }
}

/// Axis-aligned box over the load buses that bounds exploration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LoadBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dimension("box bounds must have equal, nonzero length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidArgument("box lower bounds must be strictly below upper bounds".into()));
        }
        Ok(LoadBox { lower, upper })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// `[−2·L, 2·L]` per load bus, with `L` the total generating capacity,
    /// which is the largest total load the system can ever serve.
    pub fn default_for(case: &NetworkCase) -> Self {
        let cap = case.total_capacity().abs().max(1.0);
        let d = case.load_buses.len();
        LoadBox { lower: vec![-2.0 * cap; d], upper: vec![2.0 * cap; d] }
    }

    fn default_for_lp(lp: &ParametricLp) -> Self {
        let cap: f64 = lp
            .rows
            .iter()
            .zip(lp.b.iter())
            .filter(|(k, _)| matches!(k, RowKind::GenUpper(_)))
            .map(|(_, v)| v.abs())
            .sum::<f64>()
            .max(1.0);
        let d = lp.load_buses.len();
        LoadBox { lower: vec![-2.0 * cap; d], upper: vec![2.0 * cap; d] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn diagonal(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l).powi(2)).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v > l && v < u)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| rng.random_range(*l..*u)).collect()
    }
}

/// One system pattern region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprRecord {
    pub pattern: SystemPattern,
    /// Names of the binding rows, in pattern order.
    pub binding: Vec<String>,
    /// Unit-norm rows of the minimal representation `a_region·x ≤ b_region`,
    /// `x` being the load-bus vector.
    pub a_region: Vec<Vec<f64>>,
    pub b_region: Vec<f64>,
    pub lmp: LmpVector,
    /// Chebyshev center of the region intersected with the exploration box.
    pub interior_point: Vec<f64>,
    pub chebyshev_radius: f64,
    /// Multipliers of the binding rows, balance entry first (free sign).
    pub dual_y: Vec<f64>,
}

impl SprRecord {
    pub fn polytope(&self) -> Polytope {
        Polytope::new(self.a_region.clone(), self.b_region.clone())
    }

    /// Membership with a tolerance on every row.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.polytope().contains(x, tol)
    }

    /// Smallest row slack at `x`.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.polytope().margin(x)
    }

    /// Vertices of the region clipped to a 2-D box.
    pub fn vertices_in(&self, bx: &LoadBox) -> Vec<[f64; 2]> {
        self.polytope().with_box(&bx.lower, &bx.upper).vertices_2d()
    }
}

/// Reads the binding pattern off a solution.
pub fn optimal_partition(sol: &DispatchSolution) -> Result<SystemPattern> {
    if sol.degenerate {
        return Err(Error::Degenerate(sol.degeneracy_note.clone().unwrap_or_default()));
    }
    SystemPattern::new(sol.binding.clone())
}

/// Rows not in the pattern and not the redundant balance row.
fn nonbinding_rows(pattern: &SystemPattern, n_rows: usize) -> Vec<usize> {
    (0..n_rows).filter(|r| *r != 1 && !pattern.rows.contains(r)).collect()
}

/// Solves `A_Bᵀ·y = −c`. `None` when the binding block is singular.
fn binding_duals(pattern: &SystemPattern, lp: &ParametricLp, c: &DVector<f64>) -> Option<DVector<f64>> {
    let ab = lp.a.select_rows(pattern.rows.iter());
    if ab.nrows() != ab.ncols() {
        return None;
    }
    let lu = ab.transpose().lu();
    if lu.determinant().abs() < 1e-10 {
        return None;
    }
    lu.solve(&(-c))
}

/// Region of a pattern in its raw (unnormalized) inequality form.
fn raw_region(pattern: &SystemPattern, lp: &ParametricLp) -> Result<Polytope> {
    let ng = lp.n_gens();
    if pattern.rows.len() != ng {
        return Err(Error::InvalidPattern(format!("{} binding rows for {} generators", pattern.rows.len(), ng)));
    }
    if pattern.rows.iter().any(|&r| r >= lp.n_rows()) {
        return Err(Error::InvalidPattern("row index out of range".into()));
    }
    let brows = &pattern.rows;
    let nrows = nonbinding_rows(pattern, lp.n_rows());
    let ab = lp.a.select_rows(brows.iter());
    let lu = ab.clone().transpose().lu();
    if lu.determinant().abs() < 1e-10 {
        return Err(Error::InvalidPattern(format!("binding block of {pattern} is singular")));
    }
    // M = A_N·A_B⁻¹, computed as (A_B⁻ᵀ·A_Nᵀ)ᵀ.
    let an = lp.a.select_rows(nrows.iter());
    let mt = lu.solve(&an.transpose()).ok_or_else(|| Error::InvalidPattern("singular binding block".into()))?;
    let m = mt.transpose();
    let wb = lp.w.select_rows(brows.iter());
    let wn = lp.w.select_rows(nrows.iter());
    let bb = DVector::from_iterator(brows.len(), brows.iter().map(|&r| lp.b[r]));
    let bn = DVector::from_iterator(nrows.len(), nrows.iter().map(|&r| lp.b[r]));
    let gfull: DMatrix<f64> = &m * &wb - &wn;
    let h = &bn - &m * &bb;
    let g = gfull.select_columns(lp.load_buses.iter());
    Ok(Polytope::new(
        (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect(),
        h.iter().copied().collect(),
    ))
}

/// Builds the region of a pattern, clipped to the default box for its
/// interior point.
pub fn region_of(pattern: &SystemPattern, lp: &ParametricLp) -> Result<SprRecord> {
    region_in_box(pattern, lp, &LoadBox::default_for_lp(lp))
}

/// Builds the region of a pattern; the interior point is the Chebyshev center
/// of the region intersected with `bx`.
pub fn region_in_box(pattern: &SystemPattern, lp: &ParametricLp, bx: &LoadBox) -> Result<SprRecord> {
    if bx.dim() != lp.load_buses.len() {
        return Err(Error::Dimension(format!("box has {} dims, case has {} load buses", bx.dim(), lp.load_buses.len())));
    }
    let raw = raw_region(pattern, lp)?;
    let y = binding_duals(pattern, lp, &lp.c).ok_or_else(|| Error::InvalidPattern("singular binding block".into()))?;
    let ytol = 1e-9 * (1.0 + lp.c.amax());
    if y.iter().skip(1).any(|&v| v <= ytol) {
        return Err(Error::InvalidPattern(format!("{pattern} has a nonpositive multiplier for the given costs")));
    }
    let wb = lp.w.select_rows(pattern.rows.iter());
    let lmp: Vec<f64> = (-(wb.transpose() * &y)).iter().copied().collect();

    let poly = match raw.normalized() {
        Normalized::Ok(p) => p,
        Normalized::Empty => return Err(Error::EmptyRegion { radius: 0.0 }),
    };
    let poly = poly.select(&poly.irredundant_rows());
    let clipped = poly.with_box(&bx.lower, &bx.upper);
    let (center, radius) = clipped.chebyshev_center(bx.diagonal()).ok_or(Error::EmptyRegion { radius: 0.0 })?;
    if radius <= 1e-7 * bx.diagonal() {
        return Err(Error::EmptyRegion { radius });
    }
    Ok(SprRecord {
        binding: pattern.labels(lp),
        pattern: pattern.clone(),
        a_region: poly.g,
        b_region: poly.h,
        lmp: LmpVector { lambda: lmp },
        interior_point: center,
        chebyshev_radius: radius,
        dual_y: y.iter().copied().collect(),
    })
}

/// Tuning knobs for [`enumerate_sprs_with`].
#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    pub seed: u64,
    pub max_seed_attempts: usize,
    /// Facet step as a fraction of the box diagonal.
    pub step_frac: f64,
    pub parallel: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions { seed: 0x0053_5052, max_seed_attempts: 10_000, step_frac: 1e-4, parallel: true }
    }
}

/// Counters collected while walking the region graph.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EnumerationStats {
    pub probes: usize,
    pub infeasible_probes: usize,
    pub degenerate_skips: usize,
    pub thin_regions: usize,
}

/// Enumerates every region that meets the box, for the case's own costs.
pub fn enumerate_sprs(case: &NetworkCase, bx: &LoadBox) -> Result<Vec<SprRecord>> {
    let sf = compute_shift_factors(case)?;
    let lp = build_sced(case, &sf, &Overrides::default())?;
    Ok(enumerate_sprs_with(&lp, bx, &EnumerateOptions::default())?.0)
}

/// Breadth-first walk over region facets.
///
/// Starting from a region containing a random feasible load, every facet is
/// probed just outside its in-plane center (and a few spread points on the
/// facet). Each probe is solved and a new pattern becomes a new region.
pub fn enumerate_sprs_with(
    lp: &ParametricLp,
    bx: &LoadBox,
    opts: &EnumerateOptions,
) -> Result<(Vec<SprRecord>, EnumerationStats)> {
    if bx.dim() != lp.load_buses.len() {
        return Err(Error::Dimension(format!("box has {} dims, case has {} load buses", bx.dim(), lp.load_buses.len())));
    }
    let mut stats = EnumerationStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let seed_record = find_seed(lp, bx, opts, &mut rng)?;

    let mut visited: BTreeSet<SystemPattern> = BTreeSet::new();
    visited.insert(seed_record.pattern.clone());
    let mut regions = vec![seed_record];
    let mut frontier: VecDeque<usize> = VecDeque::from([0]);

    while !frontier.is_empty() {
        let layer: Vec<usize> = frontier.drain(..).collect();
        let probe = |&idx: &usize| probe_neighbors(lp, bx, opts, &regions[idx], idx as u64);
        let found: Vec<(Vec<SystemPattern>, EnumerationStats)> =
            if opts.parallel { layer.par_iter().map(probe).collect() } else { layer.iter().map(probe).collect() };
        for (patterns, s) in found {
            stats.probes += s.probes;
            stats.infeasible_probes += s.infeasible_probes;
            stats.degenerate_skips += s.degenerate_skips;
            for p in patterns {
                if !visited.insert(p.clone()) {
                    continue;
                }
                match region_in_box(&p, lp, bx) {
                    Ok(rec) => {
                        frontier.push_back(regions.len());
                        regions.push(rec);
                    }
                    Err(Error::EmptyRegion { .. }) => stats.thin_regions += 1,
                    Err(e) => log::warn!("skipping pattern {p}: {e}"),
                }
            }
        }
    }
    Ok((regions, stats))
}

fn find_seed(lp: &ParametricLp, bx: &LoadBox, opts: &EnumerateOptions, rng: &mut ChaCha8Rng) -> Result<SprRecord> {
    for _ in 0..opts.max_seed_attempts {
        let x = bx.sample(rng);
        let Ok(sol) = solve_lp(lp, &lp.full_load(&x)) else { continue };
        let Ok(p) = optimal_partition(&sol) else { continue };
        if let Ok(rec) = region_in_box(&p, lp, bx) {
            return Ok(rec);
        }
    }
    Err(Error::NoFeasibleSeed { attempts: opts.max_seed_attempts })
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `n`.
fn plane_basis(n: &[f64]) -> Vec<Vec<f64>> {
    let d = n.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        let p: f64 = v.iter().zip(n).map(|(a, b)| a * b).sum();
        for (vi, ni) in v.iter_mut().zip(n) {
            *vi -= p * ni;
        }
        for b in &basis {
            let q: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= q * bi;
            }
        }
        let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len > 1e-8 {
            basis.push(v.into_iter().map(|a| a / len).collect());
        }
        if basis.len() == d.saturating_sub(1) {
            break;
        }
    }
    basis
}

fn probe_neighbors(
    lp: &ParametricLp,
    bx: &LoadBox,
    opts: &EnumerateOptions,
    rec: &SprRecord,
    salt: u64,
) -> (Vec<SystemPattern>, EnumerationStats) {
    let mut stats = EnumerationStats::default();
    let mut out = Vec::new();
    let diag = bx.diagonal();
    let eps = opts.step_frac * diag;
    let clipped = rec.polytope().with_box(&bx.lower, &bx.upper);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));

    for facet in 0..rec.a_region.len() {
        let Some((center, r)) = clipped.facet_center(facet, diag, 0.0) else { continue };
        if r <= 1e-7 * diag {
            continue;
        }
        let n = &rec.a_region[facet];
        let basis = plane_basis(n);
        let mut anchors = vec![center.clone()];
        for b in &basis {
            for s in [-0.9, 0.9] {
                anchors.push(center.iter().zip(b).map(|(c, v)| c + s * r * v).collect());
            }
        }
        for anchor in anchors {
            let mut resolved = false;
            for (attempt, scale) in [1.0, 10.0, 100.0].into_iter().enumerate() {
                let mut x: Vec<f64> = anchor.iter().zip(n).map(|(a, v)| a + scale * eps * v).collect();
                if attempt > 0 {
                    for b in &basis {
                        let t = rng.random_range(-0.1..0.1) * r;
                        for (xi, bi) in x.iter_mut().zip(b) {
                            *xi += t * bi;
                        }
                    }
                }
                if !bx.contains_open(&x) {
                    resolved = true;
                    break;
                }
                stats.probes += 1;
                match solve_lp(lp, &lp.full_load(&x)) {
                    Err(_) => {
                        stats.infeasible_probes += 1;
                        resolved = true;
                        break;
                    }
                    Ok(sol) => {
                        if let Ok(p) = optimal_partition(&sol) {
                            if p != rec.pattern && !out.contains(&p) {
                                out.push(p);
                            }
                            resolved = true;
                            break;
                        }
                    }
                }
            }
            if !resolved {
                stats.degenerate_skips += 1;
                log::debug!("degenerate crossing near facet {facet} of {}", rec.pattern);
            }
        }
    }
    (out, stats)
}

/// Whether two regions share a (d−1)-dimensional facet.
pub fn are_adjacent(r1: &SprRecord, r2: &SprRecord) -> bool {
    if r1.pattern.distance(&r2.pattern) != 2 {
        return false;
    }
    let mut both = r1.polytope();
    let own = both.len();
    let other = r2.polytope();
    both.g.extend(other.g);
    both.h.extend(other.h);
    (0..own).any(|i| matches!(both.facet_center(i, 1.0, 1e-9), Some((_, r)) if r > 1e-7))
}

/// Result of the pairwise price-distinctness check.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessCheck {
    pub unique: bool,
    pub offending: Option<(usize, usize)>,
}

/// Checks that no two regions carry the same price vector.
pub fn verify_unique_lmps(regions: &[SprRecord]) -> UniquenessCheck {
    for i in 0..regions.len() {
        for j in i + 1..regions.len() {
            if regions[i].lmp.max_abs_diff(&regions[j].lmp) <= 1e-6 {
                return UniquenessCheck { unique: false, offending: Some((i, j)) };
            }
        }
    }
    UniquenessCheck { unique: true, offending: None }
}

/// Whether the pattern stays optimal under a new cost vector, i.e. the
/// binding multipliers solving `A_Bᵀ·y = −c_new` remain strictly positive.
pub fn pattern_admits_cost(pattern: &SystemPattern, lp: &ParametricLp, c_new: &[f64]) -> bool {
    if c_new.len() != lp.n_gens() {
        log::warn!("cost vector has {} entries, expected {}", c_new.len(), lp.n_gens());
        return false;
    }
    let c = DVector::from_column_slice(c_new);
    match binding_duals(pattern, lp, &c) {
        Some(y) => y.iter().skip(1).all(|&v| v > 1e-9),
        None => {
            log::warn!("binding block of {pattern} is singular");
            false
        }
    }
}

/// Serializable enumeration output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SprReport {
    pub case: String,
    /// 1-based load buses; coordinates of every region vector.
    pub load_buses: Vec<usize>,
    #[serde(rename = "box")]
    pub bx: LoadBox,
    pub regions: Vec<SprRecord>,
}

impl SprReport {
    pub fn new(case: &NetworkCase, bx: &LoadBox, regions: Vec<SprRecord>) -> Self {
        SprReport {
            case: case.name.clone(),
            load_buses: case.load_buses.iter().map(|b| b + 1).collect(),
            bx: bx.clone(),
            regions,
        }
    }
}

/// Index of the region strictly containing `x`, if any.
pub fn locate(regions: &[SprRecord], x: &[f64], tol: f64) -> Option<usize> {
    regions.iter().position(|r| r.margin(x) > tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_display_round_trip() {
        let p = SystemPattern::from_display(&[1, 2, 13, 14]).unwrap();
        assert_eq!(p.rows(), &[0, 12, 13]);
        assert_eq!(p.display_indices(), vec![1, 2, 13, 14]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[1,2,13,14]");
    }

    #[test]
    fn pattern_requires_balance() {
        assert!(SystemPattern::new(vec![3, 4]).is_err());
    }

    #[test]
    fn plane_basis_is_orthonormal() {
        let n = [0.6, 0.8, 0.0];
        let b = plane_basis(&n);
        assert_eq!(b.len(), 2);
        for v in &b {
            let d: f64 = v.iter().zip(&n).map(|(a, c)| a * c).sum();
            assert!(d.abs() < 1e-12);
        }
    }
}
