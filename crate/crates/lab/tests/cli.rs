use std::path::Path;
use std::process::{Command, Output};

use isocap_core::energy::energy_p;
use isocap_lab::io::{parse_checkpoint, read_function};
use nalgebra::{DMatrix, DVector};

fn isocap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isocap")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Capacity of the origin relative to the open ball of radius `r`, by a dense solve.
fn dense_singleton_capacity(r: f64) -> f64 {
    let m = r.ceil() as i32;
    let mut nodes = Vec::new();
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                if ((a * a + b * b + c * c) as f64) < r * r && (a, b, c) != (0, 0, 0) {
                    nodes.push([a, b, c]);
                }
            }
        }
    }
    let idx = |q: [i32; 3]| nodes.iter().position(|&x| x == q);
    let n = nodes.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (i, q) in nodes.iter().enumerate() {
        a[(i, i)] = 6.0;
        for k in 0..3 {
            for s in [-1, 1] {
                let mut nb = *q;
                nb[k] += s;
                if nb == [0, 0, 0] {
                    rhs[i] += 1.0;
                } else if let Some(j) = idx(nb) {
                    a[(i, j)] -= 1.0;
                }
            }
        }
    }
    let u = a.cholesky().unwrap().solve(&rhs);
    let value = |q: [i32; 3]| if q == [0, 0, 0] { 1.0 } else { idx(q).map_or(0.0, |j| u[j]) };
    // Every edge of the box once; ordered pairs count it twice.
    let mut e = 0.0;
    for a in -m - 1..=m + 1 {
        for b in -m - 1..=m + 1 {
            for c in -m - 1..=m + 1 {
                for k in 0..3 {
                    let q = [a, b, c];
                    let mut nb = q;
                    nb[k] += 1;
                    e += (value(q) - value(nb)).powi(2);
                }
            }
        }
    }
    2.0 * e
}

#[test]
fn singleton_relative_capacity_matches_a_dense_solve() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "one.txt", "3 1\n0 0 0\n");
    let doc = json(&isocap(&["solve", &set, "--R", "3", "--dim", "3"]));
    let want = dense_singleton_capacity(3.0);
    let got = doc["value"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    assert!(doc["check"]["harmonic_defect"].as_f64().unwrap() <= 1e-10);
    assert_eq!(doc["n"], 1);
}

#[test]
fn dumped_potential_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "pair.txt", "3 2\n0 0 0\n1 0 0\n");
    let dump = dir.path().join("u.txt");
    let doc = json(&isocap(&["solve", &set, "--p", "2", "--dump-potential", dump.to_str().unwrap()]));
    let u = read_function(&dump).unwrap();
    let raw = doc["raw_value"].as_f64().unwrap();
    assert!((energy_p(&u, 2.0) - raw).abs() <= 1e-12 * raw);
    let eig = json(&isocap(&["solve", &set, "--eigen"]));
    assert!((eig["value"].as_f64().unwrap() - 5.0).abs() < 1e-10);
}

#[test]
fn malformed_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("dup", "3 2\n0 0 0\n0 0 0\n"), ("short", "3 2\n0 0 0\n"), ("junk", "three\n")] {
        let set = write(dir.path(), name, text);
        let out = isocap(&["solve", &set]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(!out.stderr.is_empty());
    }
    let set = write(dir.path(), "ok", "3 1\n0 0 0\n");
    assert_eq!(isocap(&["solve", &set, "--dim", "2"]).status.code(), Some(2));
    assert_eq!(isocap(&["solve", &set, "--bogus"]).status.code(), Some(2));
    let cfg = write(dir.path(), "bad.toml", "[solver]\nnope = 1\n");
    assert_eq!(isocap(&["--config", &cfg, "solve", &set]).status.code(), Some(2));
    assert_eq!(isocap(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn infeasible_parameters_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "far.txt", "3 2\n0 0 0\n40 0 0\n");
    let out = isocap(&["solve", &set, "--R", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = isocap(&["solve", &set, "--p", "3.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_and_catches_the_broken_kernel() {
    let ok = isocap(&["verify", "--trials", "20", "--seed", "1"]);
    let doc = json(&ok);
    assert_eq!(doc["passed"], true);
    let bad = isocap(&["verify", "--suite", "rearrangement", "--trials", "50", "--mutate-diag"]);
    assert_eq!(bad.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(doc["passed"], false);
    let failing: Vec<_> = doc["properties"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["failures"].as_u64().unwrap() > 0)
        .collect();
    assert!(!failing.is_empty());
    assert!(failing.iter().all(|p| p["witness"].is_string()));
}

#[test]
fn minimize_writes_a_checkpoint_and_updates_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("best.txt");
    let ledger = dir.path().join("ledger.json");
    let args = [
        "minimize",
        "--dim",
        "3",
        "--N",
        "7",
        "--restarts",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--ledger",
        ledger.to_str().unwrap(),
    ];
    assert!(isocap(&args).status.success());
    let c = parse_checkpoint(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(c.set.len(), 7);
    assert_eq!(c.objective, "capacity p=2");
    let l: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ledger).unwrap()).unwrap();
    let entry = &l["entries"]["d=3 p=2 N=7"];
    assert_eq!(entry["runs"], 2);
    assert!((entry["value"].as_f64().unwrap() - c.value).abs() < 1e-12);
}
