use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deckland(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deckland")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn episode_writes_timeline_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ep");
    let o = deckland(&["episode", "--scenario", "calm", "--seed", "3", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let timeline = fs::read_to_string(out.join("timeline.csv")).unwrap();
    assert!(timeline.lines().count() > 10);
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("episode.json")).unwrap()).unwrap();
    assert_eq!(record["seed"], 3);
}

#[test]
fn batch_is_reproducible_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.json");
    fs::write(&cfg, r#"{"name": "short", "timeout": 60.0}"#).unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["batch", "--scenario", path(&cfg), "--n", "3", "--seed", "7"];
        args.extend_from_slice(&["--controller", "baseline", "--out", path(&out)]);
        args.extend_from_slice(extra);
        let o = deckland(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", &[]);
    let b = run("b", &["--sequential"]);
    let csv = fs::read(a.join("episodes.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("episodes.csv")).unwrap());
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["episodes"], 3);
}

#[test]
fn predict_and_spectrum_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = deckland(&[
        "predict", "--scenario", "three-mode", "--horizons", "0.25,1.0", "--duration", "45",
        "--out", path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("prediction.csv")).unwrap().lines().count(), 3);

    let o = deckland(&["spectrum", "--scenario", "three-mode", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("spectrum_b4.csv").exists() && out.join("modes.json").exists());
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"name": "bad", "no_such_field": 1}"#).unwrap();
    let invalid = dir.path().join("invalid.json");
    fs::write(&invalid, r#"{"control_rate": -1.0}"#).unwrap();
    for args in [
        vec!["batch", "--scenario", path(&bad), "--n", "1", "--out", path(&out)],
        vec!["batch", "--scenario", path(&invalid), "--n", "1", "--out", path(&out)],
        vec!["batch", "--scenario", "no-such-scenario", "--out", path(&out)],
        vec!["batch", "--controller", "pid", "--out", path(&out)],
        vec!["batch", "--n", "0", "--out", path(&out)],
        vec!["predict", "--horizons", "2.0", "--out", path(&out)],
    ] {
        let o = deckland(&args);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(!o.stderr.is_empty());
    }
}
