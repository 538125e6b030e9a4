use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rumtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumtest"))
        .args(args)
        .output()
        .expect("spawn rumtest")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A synthetic instance in `dir` with the given kind.
fn synth(dir: &Path, kind: &str) {
    let out = rumtest(&[
        "synth", "--periods", "4", "--goods", "3", "--observations", "20", "--types", "3", "--kind", kind, "--seed",
        "7", "--out-dir", s(dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "random");
    let report = dir.path().join("report.json");
    let out = rumtest(&[
        "run", "--prices", s(&dir.path().join("prices.csv")), "--choices", s(&dir.path().join("choices.csv")),
        "--bootstrap", "40", "--seed", "3", "--out", s(&report), "--table",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&report);
    assert_eq!(r["periods"], 4);
    assert_eq!(r["completed"], 40);
    let p = r["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(String::from_utf8_lossy(&out.stdout).contains("heur-bounds"));
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "random");
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = rumtest(&[
            "run", "--prices", s(&dir.path().join("prices.csv")), "--choices", s(&dir.path().join("choices.csv")),
            "--bootstrap", "30", "--seed", "11", "--out", s(&path),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let mut v = json(&path);
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn rationalizable_mixture_has_unit_p_value() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "mixture");
    let report = dir.path().join("report.json");
    let out = rumtest(&[
        "run", "--prices", s(&dir.path().join("prices.csv")), "--choices", s(&dir.path().join("choices.csv")),
        "--bootstrap", "20", "--out", s(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&report);
    assert_eq!(r["j_stat"].as_f64(), Some(0.0));
    assert_eq!(r["p_value"].as_f64(), Some(1.0));
}

#[test]
fn patch_counts_input_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "random");
    let patches = dir.path().join("patches.json");
    let out = rumtest(&["patches", "--prices", s(&dir.path().join("prices.csv")), "--out", s(&patches)]);
    assert_eq!(out.status.code(), Some(0));
    let p = json(&patches);
    let counts = dir.path().join("counts.csv");
    std::fs::write(&counts, "period,patch,count\n0,0,5\n1,0,4\n2,0,6\n3,0,2\n0,0,1\n").unwrap();
    let trace = dir.path().join("trace.jsonl");
    let report = dir.path().join("report.json");
    let out = rumtest(&[
        "run", "--prices", s(&dir.path().join("prices.csv")), "--patch-counts", s(&counts), "--bootstrap", "10",
        "--trace", s(&trace), "--out", s(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&report)["observations"], 18);
    let lines: Vec<Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().any(|l| l["phase"] == "statistic"));

    let out = rumtest(&["enumerate", "--patches", s(&patches)]);
    assert_eq!(out.status.code(), Some(0));
    let e: Value = serde_json::from_slice(&out.stdout).unwrap();
    let n = e["count"].as_u64().unwrap();
    assert_eq!(e["types"].as_array().unwrap().len() as u64, n);
    let product: u64 = p["patches"].as_array().unwrap().iter().map(|t| t.as_array().unwrap().len() as u64).product();
    assert!(n >= 1 && n <= product);
}

#[test]
fn replication_timeout_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "random");
    let report = dir.path().join("report.json");
    let out = rumtest(&[
        "run", "--prices", s(&dir.path().join("prices.csv")), "--choices", s(&dir.path().join("choices.csv")),
        "--bootstrap", "10", "--replication-time-limit", "0", "--out", s(&report),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&report);
    assert_eq!(r["partial"], true);
    assert!(r["completed"].as_u64().unwrap() < 10);
}

#[test]
fn bad_input_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "random");
    let missing = dir.path().join("missing.csv");
    let out = rumtest(&["run", "--prices", s(&missing), "--choices", s(&dir.path().join("choices.csv"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "period,q1,q2,q3\n0,1,oops,2\n").unwrap();
    let out = rumtest(&["run", "--prices", s(&dir.path().join("prices.csv")), "--choices", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));

    let out = rumtest(&[
        "run", "--prices", s(&dir.path().join("prices.csv")), "--choices", s(&dir.path().join("choices.csv")),
        "--tau=-1",
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = rumtest(&["run", "--bootstrap", "many"]);
    assert_eq!(out.status.code(), Some(3));
}
