use std::process::Command;

use isocap_lab::experiments::{CONVERGENCE_HEADER, FLUCTUATION_HEADER};

fn run(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_isocap")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Drops the leading timestamp line.
fn body(csv: &str) -> &str {
    assert!(csv.starts_with("# isocap "), "missing timestamp line");
    &csv[csv.find('\n').unwrap() + 1..]
}

fn fluctuation(ledger: &std::path::Path) -> String {
    run(&[
        "fluctuation",
        "--dim",
        "2",
        "--p",
        "1.5",
        "--N",
        "5,9,13",
        "--restarts",
        "2",
        "--seed",
        "1",
        "--ledger",
        ledger.to_str().unwrap(),
    ])
}

#[test]
fn convergence_csv_matches_the_golden_file() {
    let csv = run(&["convergence", "--dim", "3", "--p", "2", "--k", "2,3,4"]);
    let body = body(&csv);
    assert_eq!(body.lines().next(), Some(CONVERGENCE_HEADER));
    assert_eq!(body, include_str!("golden/convergence_d3_p2.csv"));
}

#[test]
fn fluctuation_csv_matches_the_golden_file_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = fluctuation(&dir.path().join("a.json"));
    let b = fluctuation(&dir.path().join("b.json"));
    assert_eq!(body(&a), body(&b));
    let body = body(&a);
    assert_eq!(body.lines().next(), Some(FLUCTUATION_HEADER));
    for row in body.lines().skip(1).filter(|l| !l.starts_with('#')) {
        assert_eq!(row.split(',').count(), 10, "{row}");
    }
    assert_eq!(body, include_str!("golden/fluctuation_d2_p1.5.csv"));
}

#[test]
fn rerunning_never_raises_the_best_known_value() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("l.json");
    let read = || -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(&ledger).unwrap()).unwrap() };
    run(&["fluctuation", "--dim", "2", "--p", "1.5", "--N", "9,12", "--restarts", "1", "--ledger", ledger.to_str().unwrap()]);
    let first = read();
    run(&[
        "fluctuation",
        "--dim",
        "2",
        "--p",
        "1.5",
        "--N",
        "9,12",
        "--restarts",
        "3",
        "--seed",
        "5",
        "--ledger",
        ledger.to_str().unwrap(),
    ]);
    let second = read();
    for (k, e) in first["entries"].as_object().unwrap() {
        let before = e["value"].as_f64().unwrap();
        let after = second["entries"][k]["value"].as_f64().unwrap();
        assert!(after <= before, "{k}: {before} -> {after}");
        assert!(second["entries"][k]["runs"].as_u64().unwrap() > e["runs"].as_u64().unwrap());
    }
}

#[test]
fn decreasing_cardinalities_are_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_isocap"))
        .args(["fluctuation", "--dim", "2", "--p", "1.5", "--N", "9,5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
