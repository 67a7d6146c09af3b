use std::process::{Command, Output};

use serde_json::Value;

fn sparfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparfilter")).args(args).output().unwrap()
}

fn prices() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/assets/synthetic_prices_50x70.csv")
}

fn report(args: &[&str]) -> Value {
    let out = sparfilter(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn missing_input_exits_one_and_names_path() {
    let out = sparfilter(&["filter", "--input", "/no/such/prices.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/prices.csv"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["simulate", "--fixture", "appendix-a", "--reps", "0"][..],
        &["filter", "--input", "x.csv", "--distance", "minkowski:0.5"],
        &["filter", "--input", "x.csv", "--band", "3:2"],
        &["filter", "--input", "x.csv", "--cost", "power:1,1"],
        &["frobnicate"],
    ] {
        assert_eq!(sparfilter(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn zero_cost_equals_default() {
    let base = ["filter", "--input", prices(), "--returns", "log"];
    let a = report(&base);
    let b = report(&[&base[..], &["--cost", "power:0,2"]].concat());
    assert_eq!(a["maximal"], b["maximal"]);
    assert_eq!(a["tuned"], a["maximal"]);
}

#[test]
fn mp_band_matches_explicit_band() {
    let base = ["filter", "--input", prices(), "--returns", "log"];
    let spec = sparfilter(&["spectrum", "--input", prices(), "--returns", "log"]);
    let spec: Value = serde_json::from_slice(&spec.stdout).unwrap();
    let k = spec["deviating"].as_u64().unwrap();
    assert!(k >= 1);
    let mp = report(&[&base[..], &["--band", "mp"]].concat());
    let band = format!("1:{k}");
    let explicit = report(&[&base[..], &["--band", band.as_str()]].concat());
    assert_eq!(mp["maximal"], explicit["maximal"]);
    assert_eq!(mp["band"], explicit["band"]);
}

#[test]
fn exports_agree_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let rep = report(&[
        "filter",
        "--input",
        prices(),
        "--returns",
        "log",
        "--format",
        "graphml,graph_json",
        "--out",
        out_dir,
    ]);
    let graph: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("maximal.json")).unwrap()).unwrap();
    assert_eq!(graph["edges"].as_array().unwrap().len() as u64, rep["maximal"]["retained_edges"].as_u64().unwrap());
    assert_eq!(graph["nodes"].as_array().unwrap().len(), 50);
    let graphml = std::fs::read_to_string(dir.path().join("tuned.graphml")).unwrap();
    assert!(graphml.contains("<graphml"));
    assert!(!dir.path().join("maximal.csv").exists());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(saved["digest"], rep["digest"]);
}

#[test]
fn metrics_scores_exported_network() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("sigma.csv");
    std::fs::copy(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/sparse10_sigma_v1.csv"), &sigma).unwrap();
    // the true network itself scores perfectly
    let truth_net = dir.path().join("truth.json");
    let net = sparfilter::network::build_network(&sparfilter::sim::sparse10_fixture());
    std::fs::write(&truth_net, serde_json::to_string(&net.to_graph_json()).unwrap()).unwrap();
    let scored = report(&["metrics", "--truth", sigma.to_str().unwrap(), "--network", truth_net.to_str().unwrap()]);
    assert_eq!(scored["p_t"], 1.0);
    assert_eq!(scored["p_f"], 0.0);
}

#[test]
fn ingest_writes_returns() {
    let out = sparfilter(&["ingest", "--input", prices()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 70);
    assert!(text.starts_with("S01,"));
}

#[test]
fn identity_spectrum_study() {
    let rows = report(&["simulate", "--identity", "40", "--ratios", "0.1,1.0", "--seed", "4"]);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1]["max_deviation"].as_f64() > rows[0]["max_deviation"].as_f64());
}
