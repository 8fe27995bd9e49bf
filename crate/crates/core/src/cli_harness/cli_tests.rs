use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use super::*;

const SHIFT: &str = r#"{
  "system": {"kind": "shift", "alphabet": {"discrete": 2}, "depth": 6},
  "quantities": ["S", "R"],
  "grid": {"values": [0.4, 0.3, 0.2, 0.1]},
  "horizons": {"range": {"from": 1, "to": 4}},
  "seed": 3
}"#;

fn run(args: &[&str]) -> i32 {
    let mut v: Vec<OsString> = vec!["mdim".into()];
    v.extend(args.iter().map(OsString::from));
    main_with_args(v)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sweep_estimate_verify_succeed() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(t.path(), "c.json", SHIFT);
    let out = t.path().join("out");
    assert_eq!(run(&["sweep", "--config", s(&cfg), "--out", s(&out)]), 0);
    assert!(out.join("sweep_S.csv").exists() && out.join("sweep_R.csv").exists());
    assert_eq!(run(&["estimate", "--config", s(&cfg), "--out", s(&out)]), 0);
    let est = fs::read_to_string(out.join("estimates.csv")).unwrap();
    assert!(est.lines().any(|l| l.starts_with("mdim[S]")), "{est}");
    assert_eq!(run(&["verify", "--config", s(&cfg), "--out", s(&out), "--suite", "chain"]), 0);
    assert!(out.join("verify.json").exists());
}

#[test]
fn config_errors_exit_two() {
    let t = tempfile::tempdir().unwrap();
    let empty = write(t.path(), "e.json", &SHIFT.replace(r#"["S", "R"]"#, "[]"));
    assert_eq!(run(&["sweep", "--config", s(&empty)]), 2);
    let typo = write(t.path(), "t.json", &SHIFT.replace("\"seed\"", "\"sed\""));
    assert_eq!(run(&["estimate", "--config", s(&typo)]), 2);
    let cfg = write(t.path(), "c.json", SHIFT);
    assert_eq!(run(&["verify", "--config", s(&cfg), "--suite", "nope"]), 2);
    assert_eq!(run(&["quantize", "--config", s(&cfg)]), 2);
    assert_eq!(run(&["sweep"]), 2);
    assert_eq!(run(&["sweep", "--config", s(&t.path().join("missing.json"))]), 2);
}

#[test]
fn rerun_is_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(t.path(), "c.json", SHIFT);
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(run(&["sweep", "--config", s(&cfg), "--out", s(d)]), 0);
        assert_eq!(run(&["estimate", "--config", s(&cfg), "--out", s(d)]), 0);
    }
    // A second run in the same directory reads the distance cache.
    assert_eq!(run(&["sweep", "--config", s(&cfg), "--out", s(&a)]), 0);
    for f in ["sweep_S.csv", "sweep_R.csv", "estimates.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

/// Sup-norm distances between points with coordinates in sixty-fourths.
fn matrix_instance(quantity: &str) -> String {
    let coords: [(u32, u32); 14] = [
        (3, 60), (17, 2), (40, 41), (9, 33), (55, 12), (28, 28), (61, 50),
        (12, 9), (47, 63), (33, 5), (0, 44), (22, 53), (50, 30), (36, 17),
    ];
    let rows: Vec<Vec<f64>> = coords
        .iter()
        .map(|a| coords.iter().map(|b| a.0.abs_diff(b.0).max(a.1.abs_diff(b.1)) as f64 / 64.0).collect())
        .collect();
    serde_json::json!({"kind": "count", "points": {"matrix": rows}, "quantity": quantity, "eps": 0.3}).to_string()
}

#[test]
fn oracle_subcommand_reports_agreement() {
    let t = tempfile::tempdir().unwrap();
    let inst = write(t.path(), "i.json", &matrix_instance("N"));
    let out = t.path().join("o");
    assert_eq!(run(&["oracle", "--config", s(&inst), "--out", s(&out)]), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("oracle.json")).unwrap()).unwrap();
    assert_eq!(report["agree"], true);
    // One search node is not enough to certify the count.
    assert_eq!(run(&["oracle", "--config", s(&inst), "--budget", "1"]), 1);
}

#[test]
fn quantize_writes_tables() {
    let t = tempfile::tempdir().unwrap();
    let text = SHIFT.replace(
        "\"seed\": 3",
        r#""seed": 3, "quantize": {"kind": "lp", "measure": {"atoms": [0, 9, 21, 40], "weights": ["1/2", "1/4", "1/8", "1/8"]}}"#,
    );
    let cfg = write(t.path(), "q.json", &text);
    let out = t.path().join("q");
    assert_eq!(run(&["quantize", "--config", s(&cfg), "--out", s(&out)]), 0);
    let table = fs::read_to_string(out.join("quantize.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4 * 4);
    assert!(out.join("quantize_estimates.csv").exists());
}
