use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn perclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perclab")).args(args).env_remove("PERCLAB_JOBS").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

const CROSSING_BONDS: &str = r#"{
  "name": "broken",
  "basis": [[1.0, 0.0], [0.0, 1.0]],
  "sites": [{"id": "0", "pos": [0.0, 0.0]}],
  "bonds": [
    {"id": "h", "a": "0", "b": "0", "offset": [1, 0]},
    {"id": "v", "a": "0", "b": "0", "offset": [0, 1]},
    {"id": "d1", "a": "0", "b": "0", "offset": [1, 1]},
    {"id": "d2", "a": "0", "b": "0", "offset": [1, -1]}
  ]
}"#;

#[test]
fn square_bond_threshold_is_one_half() {
    let out = perclab(&["pc", "--lattice", "square", "--mode", "bond", "--sizes", "32,64", "--sweeps", "100"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["seed"], 1);
    assert_eq!(v["config"]["lattice"], "square");
    let p = v["result"]["p_hat"].as_f64().unwrap();
    assert!((p - 0.5).abs() < 0.02, "{p}");
    let ci = v["result"]["ci"].as_array().unwrap();
    assert!(ci[0].as_f64().unwrap() <= p && p <= ci[1].as_f64().unwrap());
}

#[test]
fn triangular_bond_duality_sum_is_one() {
    let out =
        perclab(&["duality-sum", "--lattice", "triangular", "--mode", "bond", "--sizes", "16,32", "--sweeps", "200"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert!((r["sum"].as_f64().unwrap() - 1.0).abs() < 0.02, "{r}");
    assert_eq!(r["partner"], "triangular-dual");
}

#[test]
fn corrupted_lattice_file_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, CROSSING_BONDS).unwrap();
    let out = perclab(&["verify", "--suite", "dual", "--lattice", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["pass"], false);
    assert!(r["failures"].as_u64().unwrap() >= 1);

    fs::write(&path, "{ not json").unwrap();
    let out = perclab(&["verify", "--suite", "dual", "--lattice", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["pass"], false);
}

#[test]
fn builtin_suites_pass() {
    let out = perclab(&["verify", "--suite", "all"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["failures"], 0, "{r}");
    for suite in ["dual/square", "dual/fig1-right", "engine", "zhang", "fk", "tri"] {
        assert!(r["suites"][suite].is_object(), "{suite}");
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    for args in [
        vec!["pc", "--lattice", "nosuch"],
        vec!["pc", "--sizes", "64,32"],
        vec!["pc", "--mode", "edge"],
        vec!["verify", "--suite", "dual", "--lattice", missing.to_str().unwrap()],
        vec!["fk", "--size", "4"],
        vec!["fk", "--p", "0.5", "--p3", "0.4"],
        vec!["zhang", "--k", "2", "--j", "3", "--replicas", "20", "--radius", "2", "--margin", "4"],
        vec!["run", missing.to_str().unwrap()],
        vec!["lattice", "dual", "--lattice", "fig1-right", "--jobs", "0"],
    ] {
        let out = perclab(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unmet_precision_target_exits_with_three() {
    let out = perclab(&["pc", "--sizes", "8,16", "--sweeps", "4", "--max-sweeps", "8", "--target-ci", "1e-9"]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_eq!(v["converged"], false);
    assert_eq!(v["result"]["estimate"]["replicas"], serde_json::json!([8, 8]));
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cases: [&[&str]; 3] = [
        &["pc", "--sizes", "8,16", "--sweeps", "40", "--seed", "9"],
        &["zhang", "--radius", "3", "--margin", "8", "--replicas", "300", "--seed", "9"],
        &["fk", "--q", "2", "--p", "0.55", "--size", "6", "--sweeps", "120", "--burnin", "20", "--seed", "9"],
    ];
    for args in cases {
        let name = args[0];
        let mut first = None;
        for jobs in ["1", "3"] {
            let mut full = args.to_vec();
            full.extend(["--out-dir", d, "--jobs", jobs]);
            let out = perclab(&full);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
            let files = (read(dir.path(), &format!("{name}.json")), read(dir.path(), &format!("{name}.csv")));
            assert_eq!(files.0, out.stdout);
            assert!(!files.1.is_empty());
            match &first {
                None => first = Some(files),
                Some(f) => assert!(f == &files, "{name} differs across runs"),
            }
        }
    }
}

#[test]
fn seeds_change_the_sample() {
    let a = json(&perclab(&["theta", "--p", "0.5", "--replicas", "400", "--margin", "8", "--seed", "1"]));
    let b = json(&perclab(&["theta", "--p", "0.5", "--replicas", "400", "--margin", "8", "--seed", "2"]));
    assert_eq!(a["seed"], 1);
    assert_ne!(a["result"], b["result"]);
}

#[test]
fn toml_config_reproduces_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("pc.toml");
    fs::write(&config, "command = \"pc\"\nseed = 5\nsizes = [8, 16]\nsweeps = 30\nmode = \"site\"\n").unwrap();
    let from_file = perclab(&["run", config.to_str().unwrap()]);
    let from_flags = perclab(&["pc", "--sizes", "8,16", "--sweeps", "30", "--mode", "site", "--seed", "5"]);
    assert_eq!(code(&from_file), 0, "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(from_file.stdout, from_flags.stdout);
    assert_eq!(json(&from_file)["config"]["mode"], "site");

    fs::write(&config, "command = \"pc\"\nsweeps = \"many\"\n").unwrap();
    assert_eq!(code(&perclab(&["run", config.to_str().unwrap()])), 2);
}

#[test]
fn echoed_config_runs_again() {
    let out =
        json(&perclab(&["tri-r", "--r", "0.3", "--sizes", "8,16", "--sweeps", "30", "--equivalence-replicas", "20"]));
    assert_eq!(out["result"]["disorder"], "annealed");
    assert_eq!(out["result"]["equivalence"]["pass"], true);
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("echo.toml");
    let echoed: toml::Value = serde_json::from_value(strip_nulls(out["config"].clone())).unwrap();
    fs::write(&config, toml::to_string(&echoed).unwrap()).unwrap();
    let again = json(&perclab(&["run", config.to_str().unwrap()]));
    assert_eq!(again, out);
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            Value::Object(m.into_iter().filter(|(_, x)| !x.is_null()).map(|(k, x)| (k, strip_nulls(x))).collect())
        }
        other => other,
    }
}

#[test]
fn lattice_subcommands_describe_structure() {
    let info = json(&perclab(&["lattice", "info", "--lattice", "kagome"]));
    assert_eq!(info["result"]["sites"], 3);
    assert_eq!(info["result"]["degrees"], serde_json::json!([4, 4, 4]));
    let dual = json(&perclab(&["lattice", "dual", "--lattice", "triangular"]));
    assert_eq!(dual["result"]["links"].as_array().unwrap().len(), 3);
    let matching = json(&perclab(&["lattice", "matching", "--lattice", "hexagonal"]));
    assert_eq!(matching["result"]["chords"], 9);

    // The matching graph of the hexagonal lattice is not planar, so it has no dual.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("matching.json");
    fs::write(&path, matching["result"]["matching"].to_string()).unwrap();
    let spec = path.to_str().unwrap();
    assert_eq!(json(&perclab(&["lattice", "info", "--lattice", spec]))["result"]["planar"], false);
    assert_eq!(code(&perclab(&["lattice", "dual", "--lattice", spec])), 2);
    assert_eq!(code(&perclab(&["lattice", "info", "--out-dir", spec])), 2);
}
