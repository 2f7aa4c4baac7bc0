mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprlab::grid::{compute_shift_factors, NetworkCase};
use sprlab::mpr::{
    are_adjacent, enumerate_sprs, enumerate_sprs_with, locate, optimal_partition, pattern_admits_cost, region_of, verify_unique_lmps, EnumerateOptions, LoadBox, SprRecord, SystemPattern,
};
use sprlab::sced::{apply_dlr, build_sced, solve_lp, Overrides, ParametricLp};
use sprlab::Error;

use common::{fig1, fig13};

fn lp_of(case: &NetworkCase) -> ParametricLp {
    let sf = compute_shift_factors(case).unwrap();
    build_sced(case, &sf, &Overrides::default()).unwrap()
}

/// Pattern from a direct solve, or `None` if infeasible or degenerate.
fn pattern_at(lp: &ParametricLp, loads: &[f64]) -> Option<SystemPattern> {
    solve_lp(lp, &lp.full_load(loads)).ok().and_then(|s| optimal_partition(&s).ok())
}

fn fig13_regions() -> (NetworkCase, LoadBox, Vec<SprRecord>) {
    let case = fig13();
    let bx = LoadBox::default_for(&case);
    let regions = enumerate_sprs(&case, &bx).unwrap();
    (case, bx, regions)
}

fn by_display(regions: &[SprRecord], idx: &[usize]) -> SprRecord {
    let p = SystemPattern::from_display(idx).unwrap();
    regions.iter().find(|r| r.pattern == p).cloned().unwrap_or_else(|| panic!("{idx:?} not enumerated"))
}

#[test]
fn partition_of_cheap_region() {
    let lp = lp_of(&fig13());
    let p = pattern_at(&lp, &[20.0, 20.0]).unwrap();
    assert_eq!(p.display_indices(), vec![1, 2, 13, 14]);
}

#[test]
fn single_unit_pattern_is_balance_only() {
    let case = NetworkCase::from_json(
        r#"{"buses":2,"slack":1,"lines":[{"from":1,"to":2,"susceptance":1,"rating":500}],
            "generators":[{"bus":1,"cost":10,"pmin":0,"pmax":100}],"loads":[2]}"#,
        "two bus",
    )
    .unwrap();
    let lp = lp_of(&case);
    assert_eq!(pattern_at(&lp, &[40.0]).unwrap().rows(), &[0]);
}

#[test]
fn degenerate_solution_is_refused() {
    // Exactly on the corner where unit 1 is full and unit 2 sits at zero.
    let lp = lp_of(&fig1());
    let sol = solve_lp(&lp, &lp.full_load(&[50.0, 50.0])).unwrap();
    assert!(sol.degenerate);
    assert!(matches!(optimal_partition(&sol), Err(Error::Degenerate(_))));
}

#[test]
fn pattern_size_counts_active_limits() {
    let lp = lp_of(&fig13());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 1000 {
        let x = [rng.random_range(-150.0..250.0), rng.random_range(-150.0..250.0)];
        let Ok(sol) = solve_lp(&lp, &lp.full_load(&x)) else { continue };
        let Ok(p) = optimal_partition(&sol) else { continue };
        let tight = |i: usize| sol.slacks[i] <= sol.binding_tol * (1.0 + sol.rhs[i].abs());
        let lines = (2..2 + 2 * lp.n_lines()).filter(|&i| tight(i)).count();
        let gens = (2 + 2 * lp.n_lines()..lp.n_rows()).filter(|&i| tight(i)).count();
        assert_eq!(p.rows().len(), 1 + lines + gens);
        checked += 1;
    }
}

/// Rows `g·x ≤ h` as printed for the region with prices (20, 50, 80).
const SPR2_G: [[f64; 2]; 4] = [[0.0, 1.0], [0.0, -1.0], [0.4472, 0.8944], [-0.4472, -0.8944]];
const SPR2_H: [f64; 4] = [140.0, -80.0, 147.5805, -80.4984];

#[test]
fn analytical_region_matches_printed_rows() {
    let lp = lp_of(&fig13());
    let p = SystemPattern::from_display(&[1, 2, 4, 14]).unwrap();
    let r = region_of(&p, &lp).unwrap();
    common::assert_close(&r.lmp.lambda, &[20.0, 50.0, 80.0], 1e-9);
    assert_eq!(r.a_region.len(), 4);
    for (g, h) in SPR2_G.iter().zip(SPR2_H) {
        let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let hit = r.a_region.iter().zip(&r.b_region).any(|(a, b)| {
            (a[0] - g[0] / n).abs() < 1e-4 && (a[1] - g[1] / n).abs() < 1e-4 && (b - h).abs() < 5e-3
        });
        assert!(hit, "row {g:?} <= {h} missing from {:?} {:?}", r.a_region, r.b_region);
    }
    // Re-solving at the interior point gives back the pattern.
    assert_eq!(pattern_at(&lp, &r.interior_point), Some(p));
}

#[test]
fn invalid_patterns_are_rejected() {
    let lp = lp_of(&fig13());
    // Both limits of the same unit can never bind together.
    let p = SystemPattern::from_display(&[1, 2, 12, 14]).unwrap();
    assert!(region_of(&p, &lp).is_err());
    // Unit 2 at its upper limit with unit 3 at its lower limit leaves unit 1
    // marginal with a negative multiplier on the cheaper side: not optimal.
    let q = SystemPattern::from_display(&[1, 2, 10, 13]);
    if let Ok(q) = q {
        assert!(region_of(&q, &lp).is_err());
    }
}

#[test]
fn membership_agrees_with_direct_solves() {
    let (case, _, regions) = fig13_regions();
    let lp = lp_of(&case);
    let bx = LoadBox::uniform(2, -150.0, 350.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut compared = 0;
    for _ in 0..10_000 {
        let x = bx.sample(&mut rng);
        let Some(p) = pattern_at(&lp, &x) else { continue };
        if regions.iter().any(|r| r.margin(&x).abs() < 1e-6) {
            continue;
        }
        let inside: Vec<&SprRecord> = regions.iter().filter(|r| r.margin(&x) > 0.0).collect();
        assert_eq!(inside.len(), 1, "{x:?} lies in {} regions", inside.len());
        assert_eq!(inside[0].pattern, p, "{x:?}");
        compared += 1;
    }
    assert!(compared > 3000, "{compared}");
}

#[test]
fn fig13_has_ten_regions_with_their_prices() {
    let (_, _, regions) = fig13_regions();
    assert_eq!(regions.len(), 10);
    let want = [
        [20.0, 20.0, 20.0],
        [20.0, 50.0, 80.0],
        [50.0, 50.0, 50.0],
        [20.0, 50.0, 35.0],
        [20.0, 50.0, -10.0],
        [20.0, -60.0, 100.0],
        [20.0, 50.0, 100.0],
        [20.0, 60.0, 100.0],
        [100.0, 100.0, 100.0],
        [20.0, 180.0, 100.0],
    ];
    for w in want {
        assert!(regions.iter().any(|r| r.lmp.lambda.iter().zip(w).all(|(a, b)| (a - b).abs() < 1e-9)), "{w:?}");
    }
    for r in &regions {
        assert!(r.chebyshev_radius > 0.0);
        assert!(r.margin(&r.interior_point) > 0.0);
    }
}

#[test]
fn enumeration_covers_sampled_patterns_and_partitions() {
    let (case, bx, regions) = fig13_regions();
    let lp = lp_of(&case);
    let known: BTreeSet<SystemPattern> = regions.iter().map(|r| r.pattern.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (mut feasible, mut covered) = (0, 0);
    for _ in 0..100_000 {
        let x = bx.sample(&mut rng);
        let Ok(sol) = solve_lp(&lp, &lp.full_load(&x)) else { continue };
        feasible += 1;
        if let Ok(p) = optimal_partition(&sol) {
            assert!(known.contains(&p), "pattern {p} at {x:?} not enumerated");
        }
        let hits = regions.iter().filter(|r| r.margin(&x) > 1e-9).count();
        assert!(hits <= 1, "{x:?} interior to {hits} regions");
        if regions.iter().any(|r| r.contains(&x, 1e-9)) {
            covered += 1;
        }
    }
    assert!(covered as f64 >= 0.999 * feasible as f64, "{covered} of {feasible}");
}

#[test]
fn prices_constant_inside_each_region() {
    let (case, bx, regions) = fig13_regions();
    let lp = lp_of(&case);
    let sf = compute_shift_factors(&case).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for r in &regions {
        let verts = r.vertices_in(&bx);
        let (lo0, hi0) = verts.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v[0]), b.max(v[0])));
        let (lo1, hi1) = verts.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v[1]), b.max(v[1])));
        let mut got = 0;
        while got < 100 {
            let x = [rng.random_range(lo0..hi0), rng.random_range(lo1..hi1)];
            if r.margin(&x) <= 1e-6 {
                continue;
            }
            let sol = solve_lp(&lp, &lp.full_load(&x)).unwrap();
            let lam = sprlab::sced::compute_lmp(&sol, &sf).unwrap();
            assert!(lam.max_abs_diff(&r.lmp) < 1e-6, "{x:?}: {:?} vs {:?}", lam.lambda, r.lmp.lambda);
            got += 1;
        }
    }
}

#[test]
fn adjacency_examples() {
    let (_, _, regions) = fig13_regions();
    let spr1 = by_display(&regions, &[1, 2, 13, 14]);
    let spr2 = by_display(&regions, &[1, 2, 4, 14]);
    assert!(!are_adjacent(&spr1, &spr1));
    assert!(are_adjacent(&spr1, &spr2));
    assert!(are_adjacent(&spr2, &spr1));
}

/// Region pairs met by neighboring cells of a fine lattice share a facet.
/// Cells near a region corner are left out: there two regions that only
/// share a point can sit in neighboring cells.
#[test]
fn adjacency_matches_lattice_transitions() {
    let (_, _, regions) = fig13_regions();
    let bx = LoadBox::uniform(2, -150.0, 350.0).unwrap();
    let corners: Vec<[f64; 2]> = regions.iter().flat_map(|r| r.vertices_in(&bx)).collect();
    let n = 500;
    let step = (bx.upper[0] - bx.lower[0]) / n as f64;
    let center = |i: usize, j: usize| [bx.lower[0] + (i as f64 + 0.5) * step, bx.lower[1] + (j as f64 + 0.5) * step];
    let near_corner = |x: [f64; 2]| corners.iter().any(|v| (v[0] - x[0]).hypot(v[1] - x[1]) < 3.0 * step);
    let grid: Vec<Vec<Option<usize>>> =
        (0..n).map(|i| (0..n).map(|j| locate(&regions, &center(i, j), 0.0)).collect()).collect();
    let mut seen = BTreeSet::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            for (k, l) in [(i + 1, j), (i, j + 1)] {
                if let (Some(a), Some(b)) = (grid[i][j], grid[k][l]) {
                    if a != b && !near_corner(center(i, j)) {
                        seen.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    let mut predicted = BTreeSet::new();
    for a in 0..regions.len() {
        for b in a + 1..regions.len() {
            if are_adjacent(&regions[a], &regions[b]) {
                predicted.insert((a, b));
            }
        }
    }
    assert_eq!(seen, predicted);
}

#[test]
fn unique_prices() {
    let (_, _, regions) = fig13_regions();
    assert!(verify_unique_lmps(&regions).unique);
    assert!(verify_unique_lmps(&regions[..1]).unique);
    let mut dup = regions.clone();
    dup.insert(3, regions[7].clone());
    let check = verify_unique_lmps(&dup);
    assert!(!check.unique);
    assert_eq!(check.offending, Some((3, 8)));
}

#[test]
fn cost_robustness() {
    let (case, bx, regions) = fig13_regions();
    let lp = lp_of(&case);
    for r in &regions {
        assert!(pattern_admits_cost(&r.pattern, &lp, &case.costs()));
    }
    assert!(!pattern_admits_cost(&regions[0].pattern, &lp, &[20.0, 50.0]));

    // The regions drawn for a diesel offer of 65 survive any offer below
    // 2·50 − 20 = 80; at 100 three of them are replaced.
    let lp65 = lp.with_costs(&[20.0, 50.0, 65.0]).unwrap();
    let (base, _) = enumerate_sprs_with(&lp65, &bx, &EnumerateOptions::default()).unwrap();
    assert_eq!(base.len(), 10);
    assert!(base.iter().all(|r| pattern_admits_cost(&r.pattern, &lp65, &[20.0, 50.0, 79.0])));
    let rejected = base.iter().filter(|r| !pattern_admits_cost(&r.pattern, &lp65, &[20.0, 50.0, 100.0])).count();
    assert_eq!(rejected, 3);

    // Admission agrees with re-enumeration under the new costs.
    for c_new in [[20.0, 50.0, 79.0], [20.0, 50.0, 100.0], [30.0, 45.0, 90.0]] {
        let lp_new = lp.with_costs(&c_new).unwrap();
        let (fresh, _) = enumerate_sprs_with(&lp_new, &bx, &EnumerateOptions::default()).unwrap();
        let fresh: BTreeSet<SystemPattern> = fresh.into_iter().map(|r| r.pattern).collect();
        for r in &base {
            assert_eq!(
                pattern_admits_cost(&r.pattern, &lp65, &c_new),
                fresh.contains(&r.pattern),
                "{} under {c_new:?}",
                r.pattern
            );
        }
    }
}

/// Normals of every region are unchanged by rating scaling; only offsets move.
#[test]
fn rating_scaling_shifts_boundaries_only() {
    let case = fig1();
    let bx = LoadBox::uniform(2, -100.0, 200.0).unwrap();
    let base = enumerate_sprs(&case, &bx).unwrap();
    let base_normals: BTreeMap<SystemPattern, Vec<Vec<f64>>> =
        base.iter().map(|r| (r.pattern.clone(), r.a_region.clone())).collect();
    for xi in [-0.1, 0.1] {
        let scaled = apply_dlr(&case, xi).unwrap();
        for r in enumerate_sprs(&scaled, &bx).unwrap() {
            // A pattern that only appears after scaling is compared with its
            // unscaled analytical region.
            let normals = match base_normals.get(&r.pattern) {
                Some(n) => n.clone(),
                None => match region_of(&r.pattern, &lp_of(&case)) {
                    Ok(reg) => reg.a_region,
                    Err(_) => continue,
                },
            };
            for a in &r.a_region {
                assert!(
                    normals.iter().any(|n| (n[0] - a[0]).abs() < 1e-9 && (n[1] - a[1]).abs() < 1e-9),
                    "xi {xi}: normal {a:?} of {} is new",
                    r.pattern
                );
            }
        }
    }
}
