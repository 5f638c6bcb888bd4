use std::path::Path;
use std::process::{Command, Output};

fn nfhcb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfhcb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = nfhcb(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn toy_config(dir: &Path) -> String {
    let path = dir.join("toy.json");
    std::fs::write(&path, r#"{ "n_elements": 32, "n_users": 60, "seed": 9 }"#).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn search_report_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    let run = |threads: &str| ok(&["search-exp", "--config", &cfg, "--nu", "200", "--threads", threads]).stdout;
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
}

#[test]
fn search_with_one_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    let out = ok(&["search-exp", "--config", &cfg, "--pattern", "bmwss"]);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = json["codebooks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["exhaustive", "bmwss"]);
}

#[test]
fn gain_experiment_overrides_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    let out_path = dir.path().join("gain.json");
    ok(&[
        "gain-exp",
        "--config",
        &cfg,
        "--seed",
        "4",
        "--nu",
        "25",
        "--rmax",
        "1.5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(json["n_users"], 25);
    assert_eq!(json["config"]["seed"], 4);
    assert_eq!(json["r_max"].as_f64().unwrap(), 1.5);

    let csv = ok(&["gain-exp", "--config", &cfg, "--format", "csv"]).stdout;
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("codebook,metric,value\n"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn build_and_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    let lower = dir.path().join("lower.nfcb");
    let hier = dir.path().join("hier.nfcb");
    ok(&["build-lower", "--config", &cfg, "--out", lower.to_str().unwrap()]);
    ok(&[
        "build-hierarchy",
        "--config",
        &cfg,
        "--pattern",
        "quadric",
        "--grid",
        "64x2",
        "--out",
        hier.to_str().unwrap(),
    ]);

    let csv = ok(&["export-codebook", "--input", lower.to_str().unwrap(), "--format", "csv"]).stdout;
    let rows = nfhcb_rows(&String::from_utf8(csv).unwrap());
    assert!(rows > 0);

    let json = ok(&["export-codebook", "--input", hier.to_str().unwrap(), "--format", "json"]).stdout;
    let doc: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(doc["kind"], "hierarchy");
    assert_eq!(doc["n_elements"], 32);
    let words = doc["codewords"].as_array().unwrap();
    assert_eq!(words[0]["level"], 1);
    assert_eq!(words[0]["weights"].as_array().unwrap().len(), 32);
    // bottom level is the 64x2 grid
    assert_eq!(
        words
            .iter()
            .filter(|w| w["level"] == words.last().unwrap()["level"])
            .count(),
        128
    );
}

fn nfhcb_rows(csv: &str) -> usize {
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("level,ring,angle,theta,r,w0_re,w0_im"));
    lines.count()
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = nfhcb(&["gain-exp", "--config", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "n_elements": 32, "bogus": 1 }"#).unwrap();
    let out = nfhcb(&["gain-exp", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let cfg = toy_config(dir.path());
    let out = nfhcb(&["gain-exp", "--config", &cfg, "--rmax", "0.01"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("r_max"));

    let out = nfhcb(&["search-exp", "--pattern", "fancy"]);
    assert!(!out.status.success());

    let junk = dir.path().join("junk.nfcb");
    std::fs::write(&junk, b"not a codebook").unwrap();
    let out = nfhcb(&["export-codebook", "--input", junk.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("nfhcb: error:"));
}
