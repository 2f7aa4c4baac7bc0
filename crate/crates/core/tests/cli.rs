use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};
use sprlab::cli::main_with_args;
use sprlab::grid::load_case;
use sprlab::mpr::{enumerate_sprs, locate, LoadBox, SprReport};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("sprlab").chain(args.iter().copied()))
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

fn sha(path: &str) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

fn manifest(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(format!("{path}.manifest.json")).unwrap()).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sprlab"))
}

#[test]
fn gen_writes_requested_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "dlr.csv");
    assert_eq!(run(&["gen", "--case", "fig1", "--mode", "dlr", "--n", "8640", "--seed", "7", "--box=-100,200", "-o", &out]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 8641);
    let m = manifest(&out);
    assert_eq!(m["command"], "gen");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["outputs"][0]["sha256"], sha(&out));
    assert!(m["timings"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn ramp_manifest_records_scale_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.csv");
    let b = p(dir.path(), "b.csv");
    for out in [&a, &b] {
        let args = ["gen", "--case", "fig1", "--mode", "ramp", "--ramp-scale", "0.5", "--sampling", "profile", "--n", "288", "--seed", "3", "-o", out];
        assert_eq!(run(&args), 0);
    }
    assert_eq!(manifest(&a)["config"]["ramp_scale"], 0.5);
    assert_eq!(sha(&a), sha(&b));
}

#[test]
fn enumerate_json_vertices_and_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let json = p(dir.path(), "spr.json");
    let verts = p(dir.path(), "v.csv");
    let grid = p(dir.path(), "g.csv");
    let code = run(&["enumerate", "--case", "fig13", "-o", &json, "--vertices", &verts, "--grid", "60", "--grid-out", &grid]);
    assert_eq!(code, 0);
    let report: SprReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.regions.len(), 10);
    assert!(std::fs::read_to_string(&verts).unwrap().starts_with("region,"));

    // Lattice labels agree with region membership off the boundaries.
    let mut labeled = 0;
    for line in std::fs::read_to_string(&grid).unwrap().lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let x = [cols[0].parse::<f64>().unwrap(), cols[1].parse::<f64>().unwrap()];
        let inside: Vec<usize> = (0..report.regions.len()).filter(|&k| report.regions[k].margin(&x) > 1e-6).collect();
        let on_edge = report.regions.iter().any(|r| r.margin(&x).abs() <= 1e-6);
        if on_edge {
            continue;
        }
        match cols[2] {
            "" => assert!(inside.is_empty(), "{x:?}"),
            s => {
                assert_eq!(inside, vec![s.parse::<usize>().unwrap() - 1], "{x:?}");
                labeled += 1;
            }
        }
    }
    assert!(labeled > 100);
    assert_eq!(manifest(&json)["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn enumerate_matches_library_count_on_fig1() {
    let dir = tempfile::tempdir().unwrap();
    let json = p(dir.path(), "fig1.json");
    assert_eq!(run(&["enumerate", "--case", "fig1", "--box=-100,200", "-o", &json]), 0);
    let report: SprReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fig1.json");
    let direct = enumerate_sprs(&load_case(fixtures).unwrap(), &LoadBox::uniform(2, -100.0, 200.0).unwrap()).unwrap();
    assert_eq!(report.regions.len(), direct.len());
    assert!(locate(&report.regions, &[10.0, 10.0], 0.0).is_some());
}

#[test]
fn train_predict_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "slr.csv");
    let model = p(dir.path(), "model.json");
    let pred = p(dir.path(), "pred.csv");
    let folds = p(dir.path(), "folds.csv");
    let full = p(dir.path(), "folds.json");
    assert_eq!(run(&["gen", "--case", "fig1", "--n", "300", "--seed", "1", "--box=-100,200", "-o", &data]), 0);
    assert_eq!(run(&["train", "--data", &data, "-o", &model]), 0);
    assert_eq!(manifest(&model)["config"]["c_effective"], 1000.0);
    assert_eq!(run(&["predict", "--model", &model, "--data", &data, "--posterior", "-o", &pred]), 0);

    // Training and predicting on the same separable set recalls every row.
    let truth = sprlab::datagen::read_csv(Path::new(&data)).unwrap();
    let text = std::fs::read_to_string(&pred).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..5], &["idx", "class", "LMP_1", "LMP_2", "LMP_3"]);
    let n_classes = header.len() - 5;
    for (line, row) in lines.zip(&truth) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        for b in 0..3 {
            assert!((cols[2 + b] - row.lmp[b]).abs() < 1e-6);
        }
        let p: f64 = cols[5..5 + n_classes].iter().sum();
        assert!((p - 1.0).abs() <= 1e-6, "posterior sums to {p}");
    }

    assert_eq!(run(&["eval", "--data", &data, "--k", "5", "--seed", "2", "-o", &folds, "--json", &full]), 0);
    let csv = std::fs::read_to_string(&folds).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&full).unwrap()).unwrap();
    assert_eq!(report["folds"].as_array().unwrap().len(), 5);
    let stages: Vec<String> =
        manifest(&folds)["timings"].as_array().unwrap().iter().map(|t| t["stage"].as_str().unwrap().to_owned()).collect();
    for s in ["training", "predicting", "data_post_processing"] {
        assert!(stages.iter().any(|x| x == s), "{stages:?}");
    }
}

#[test]
fn feature_and_bus_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "fig11.csv");
    let model = p(dir.path(), "m.json");
    let folds = p(dir.path(), "f.csv");
    assert_eq!(run(&["gen", "--case", "fig11", "--n", "300", "--seed", "4", "--box=-100,200", "-o", &data]), 0);
    let args = ["train", "--data", &data, "--features", "buses=2,total", "--label-bus", "2", "-o", &model];
    assert_eq!(run(&args), 0);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(m["schema"]["buses"], serde_json::json!([2]));
    assert_eq!(m["schema"]["include_total"], true);
    assert_eq!(m["class_lmps"].as_array().unwrap().len(), 2);
    assert_eq!(run(&["eval", "--data", &data, "--method", "cll", "--seed", "1", "-o", &folds]), 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "x.csv");
    // Validation failures.
    assert_eq!(bin().args(["solve", "--case", "/no/such/case.json", "--loads", "1,2"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["gen", "--case", "fig1", "--mode", "sideways", "-o", &out]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["solve", "--case", "fig1", "--loads", "1,2,3,4"]).status().unwrap().code(), Some(2));
    // Infeasible dispatch.
    assert_eq!(bin().args(["solve", "--case", "fig1", "--loads", "400,400"]).status().unwrap().code(), Some(3));
    // Loads the network can never carry.
    let code = bin().args(["gen", "--case", "fig1", "--n", "10", "--box", "500,600", "-o", &out]).status().unwrap().code();
    assert_eq!(code, Some(3));
    let ok = bin().args(["solve", "--case", "fig1", "--loads", "10,10"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["lmp"], serde_json::json!([20.0, 20.0, 20.0]));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.csv");
    let b = p(dir.path(), "b.csv");
    let c = p(dir.path(), "c.csv");
    let gen = |out: &str, seed: &str| {
        bin()
            .env("SPRLAB_SEED", seed)
            .args(["gen", "--case", "fig1", "--n", "50", "--box=-100,200", "-o", out])
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(gen(&a, "11"), Some(0));
    assert_eq!(gen(&b, "11"), Some(0));
    assert_eq!(gen(&c, "12"), Some(0));
    assert_eq!(sha(&a), sha(&b));
    assert_ne!(sha(&a), sha(&c));
    assert_eq!(manifest(&a)["seed"], 11);
}
