use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dynclust(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynclust"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn dynclust")
}

fn report(out: &Output) -> Value {
    let stdout = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(stdout.trim()).unwrap_or_else(|e| panic!("bad report {stdout:?}: {e}"))
}

fn simulate(dir: &Path, seed: &str) {
    let out = dynclust(&["simulate", "--n", "30", "--times", "20", "--seed", seed, "--out-dir", "sim"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_accepts_simulated_panel() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "1");
    let out = dynclust(&["validate", "--data", "sim/panel.csv", "--iters", "400", "--burnin", "200"], dir.path());
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["ok"], true);
    assert_eq!(r["n"], 30);
    assert_eq!(r["times"], 20);
}

#[test]
fn burn_in_past_iterations_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "1");
    let out = dynclust(&["validate", "--data", "sim/panel.csv", "--iters", "100", "--burnin", "100"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(report(&out)["error"]["message"].is_string());
}

#[test]
fn missing_data_file_reports_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dynclust(&["validate", "--data", "nope.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!(r["error"]["kind"].is_string());
}

#[test]
fn malformed_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "station_id,time,y,lat,lon,x1\nA,1,1.0,-30,-70,0.1\nA,2,oops,-30,-70,0.2\n";
    fs::write(dir.path().join("bad.csv"), csv).unwrap();
    let out = dynclust(&["validate", "--data", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["error"]["kind"], "ingestion");
    let msg = r["error"]["message"].as_str().unwrap();
    assert!(msg.contains("row 3") && msg.contains("`y`"), "{msg}");
}

#[test]
fn fit_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "2");
    let fit = |out: &str| {
        let o = dynclust(
            &["fit", "--data", "sim/panel.csv", "--iters", "300", "--burnin", "100", "--seed", "7", "--out-dir", out],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
        fs::read(dir.path().join(out).join("draws_chain0.bin")).unwrap()
    };
    assert_eq!(fit("a"), fit("b"));
}

#[test]
fn pipeline_recovers_simulated_clusters() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "1");
    let fit = dynclust(
        &["fit", "--data", "sim/panel.csv", "--iters", "4000", "--burnin", "2000", "--thin", "2", "--seed", "1"],
        dir.path(),
    );
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stdout));
    assert!(dir.path().join("fit/manifest.json").exists());

    let sum = dynclust(&["summarize", "--truth", "sim/truth_partitions.csv"], dir.path());
    assert!(sum.status.success(), "{}", String::from_utf8_lossy(&sum.stdout));
    let r = report(&sum);
    let median = r["median_ari"].as_f64().unwrap();
    assert!(median >= 0.9, "median ARI {median}");
    assert!(dir.path().join("fit/partitions.csv").exists());
    assert!(dir.path().join("fit/lagged_ari.csv").exists());

    let diag = dynclust(&["diagnose"], dir.path());
    assert!(diag.status.success(), "{}", String::from_utf8_lossy(&diag.stdout));
    let d = report(&diag);
    assert!(d["waic"].as_f64().unwrap().is_finite());
    assert!(dir.path().join("fit/criteria.csv").exists());
}

#[test]
fn tampered_draw_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "2");
    let o = dynclust(&["fit", "--data", "sim/panel.csv", "--iters", "200", "--burnin", "100"], dir.path());
    assert!(o.status.success());
    let path = dir.path().join("fit/draws_chain0.bin");
    let mut bytes = fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    fs::write(&path, bytes).unwrap();
    let out = dynclust(&["summarize"], dir.path());
    assert!(!out.status.success());
    assert!(report(&out)["error"].is_object());
}
