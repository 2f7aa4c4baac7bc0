#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprlab::grid::{load_case, NetworkCase};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fig1() -> NetworkCase {
    load_case(fixture_path("fig1.json")).unwrap()
}

pub fn fig11() -> NetworkCase {
    load_case(fixture_path("fig11.json")).unwrap()
}

pub fn fig13() -> NetworkCase {
    load_case(fixture_path("fig13.json")).unwrap()
}

/// A connected network with `n_buses` buses: a random spanning tree plus a
/// few extra lines, generators with spread-out costs, and loads on up to
/// `max_loads` non-slack buses.
pub fn random_case(seed: u64, n_buses: usize, max_loads: usize) -> NetworkCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    let mut edges = std::collections::BTreeSet::new();
    for b in 2..=n_buses {
        let parent = rng.random_range(1..b);
        edges.insert((parent, b));
    }
    let extra = rng.random_range(1..=n_buses);
    for _ in 0..extra {
        let a = rng.random_range(1..=n_buses);
        let b = rng.random_range(1..=n_buses);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    for (a, b) in edges {
        lines.push(format!(
            r#"{{"from":{a},"to":{b},"susceptance":{:.3},"rating":{:.1}}}"#,
            rng.random_range(0.5..2.0),
            rng.random_range(30.0..150.0)
        ));
    }
    let n_gens = rng.random_range(2..=3.min(n_buses));
    let mut gen_buses: Vec<usize> = (1..=n_buses).collect();
    for i in 0..n_gens {
        let j = rng.random_range(i..gen_buses.len());
        gen_buses.swap(i, j);
    }
    let gens: Vec<String> = (0..n_gens)
        .map(|k| {
            // Cost bands keep every pair of units clearly apart.
            let cost = 10.0 + 30.0 * k as f64 + rng.random_range(0.0..20.0);
            format!(
                r#"{{"bus":{},"cost":{cost:.4},"pmin":0,"pmax":{:.1}}}"#,
                gen_buses[k],
                rng.random_range(80.0..200.0)
            )
        })
        .collect();
    let mut candidates: Vec<usize> = (2..=n_buses).collect();
    let n_loads = rng.random_range(1..=max_loads.min(candidates.len()));
    for i in 0..n_loads {
        let j = rng.random_range(i..candidates.len());
        candidates.swap(i, j);
    }
    let mut loads: Vec<usize> = candidates[..n_loads].to_vec();
    loads.sort_unstable();
    let text = format!(
        r#"{{"name":"random-{seed}","buses":{n_buses},"slack":1,"lines":[{}],"generators":[{}],"loads":{loads:?}}}"#,
        lines.join(","),
        gens.join(",")
    );
    NetworkCase::from_json(&text, "random").unwrap()
}

pub fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
    }
}

pub fn assert_close_ok(got: &[f64], want: &[f64], tol: f64) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
}
