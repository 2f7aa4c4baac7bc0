mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sprlab::grid::{compute_shift_factors, load_case, NetworkCase};
use sprlab::Error;

use common::{fig1, fig13, fixture_path, random_case};

/// Flows from a direct DC solve: pseudo-inverse of the full Laplacian, so no
/// bus is singled out and nothing is shared with the PTDF construction.
fn dc_flows(case: &NetworkCase, injection: &[f64]) -> Vec<f64> {
    let nb = case.n_buses;
    let mut lap = DMatrix::<f64>::zeros(nb, nb);
    for l in &case.lines {
        lap[(l.from, l.from)] += l.susceptance;
        lap[(l.to, l.to)] += l.susceptance;
        lap[(l.from, l.to)] -= l.susceptance;
        lap[(l.to, l.from)] -= l.susceptance;
    }
    let theta = lap.pseudo_inverse(1e-12).unwrap() * DVector::from_column_slice(injection);
    case.lines.iter().map(|l| l.susceptance * (theta[l.from] - theta[l.to])).collect()
}

#[test]
fn fixtures_load() {
    let c1 = fig1();
    assert_eq!((c1.n_buses, c1.n_lines(), c1.n_gens()), (3, 3, 2));
    assert_eq!(c1.ratings(), vec![60.0, 60.0, 80.0]);
    assert_eq!(c1.costs(), vec![20.0, 50.0]);
    let c13 = fig13();
    assert_eq!(c13.costs(), vec![20.0, 50.0, 100.0]);
    assert_eq!(c13.slack, 0);
    assert_eq!(c13.load_buses, vec![1, 2]);
}

#[test]
fn inverted_limits_name_the_generator() {
    let text = std::fs::read_to_string(fixture_path("fig13.json"))
        .unwrap()
        .replace(r#""pmin": 0.0, "pmax": 50.0"#, r#""pmin": 60.0, "pmax": 50.0"#);
    let err = NetworkCase::from_json(&text, "edited").unwrap_err();
    assert!(matches!(err, Error::InvalidCase(_)));
    assert!(err.to_string().contains("generator 3"), "{err}");
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(load_case("/no/such/case.json"), Err(Error::Io { .. })));
}

#[test]
fn nonpositive_rating_rejected() {
    let text = std::fs::read_to_string(fixture_path("fig1.json")).unwrap().replace("60.0", "0.0");
    assert!(NetworkCase::from_json(&text, "edited").is_err());
}

#[test]
fn triangle_row_and_slack_column() {
    let h = compute_shift_factors(&fig1()).unwrap().h;
    assert!((h[(0, 1)] + 2.0 / 3.0).abs() < 1e-12);
    assert!((h[(0, 2)] + 1.0 / 3.0).abs() < 1e-12);
    for l in 0..3 {
        assert_eq!(h[(l, 0)], 0.0);
    }
    let sf = compute_shift_factors(&fig1()).unwrap();
    assert!(sf.flows(&[1.0, 0.0, 0.0]).iter().all(|f| *f == 0.0));
}

#[test]
fn fixture_flows_match_direct_solve() {
    let case = fig13();
    let sf = compute_shift_factors(&case).unwrap();
    let inj = [170.0, -100.0, -70.0];
    let got = sf.flows(&inj);
    let want = dc_flows(&case, &inj);
    common::assert_close(&got, &want, 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ptdf_matches_dc_power_flow(
        seed in any::<u64>(),
        nb in 3usize..8,
        raw in prop::collection::vec(-100.0f64..100.0, 8),
    ) {
        let case = random_case(seed, nb, nb - 1);
        let sf = compute_shift_factors(&case).unwrap();
        // Balance the injections at the slack bus.
        let mut inj = raw[..nb].to_vec();
        let rest: f64 = inj[1..].iter().sum();
        inj[case.slack] = -rest;
        let got = sf.flows(&inj);
        let want = dc_flows(&case, &inj);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9 * (1.0 + w.abs()), "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn every_line_sees_its_endpoints(seed in any::<u64>(), nb in 3usize..8) {
        let case = random_case(seed, nb, 2);
        let h = compute_shift_factors(&case).unwrap().h;
        for (k, l) in case.lines.iter().enumerate() {
            let (a, b) = (h[(k, l.from)], h[(k, l.to)]);
            prop_assert!(a.is_finite() && b.is_finite());
            prop_assert!(a != 0.0 || b != 0.0, "line {k} blind to its endpoints");
        }
        for k in 0..case.n_lines() {
            prop_assert_eq!(h[(k, case.slack)], 0.0);
        }
    }
}
