use std::process::{Command, Output};

use serde_json::Value;

fn gk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gk")).args(args).env_remove("GK_THREADS").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn cusp_classes_for_level_one_plus_i() {
    let out = gk(&["cusps", "--q0", "1+1i", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["count"], 2);
    assert_eq!(v["classes"].as_array().unwrap().len(), 2);
    assert_eq!(v["q0"], "1+1i");
}

#[test]
fn classical_kloosterman_value() {
    let out = gk(&["kloosterman", "--q0", "1", "--a", "inf", "--b", "inf", "--w1", "1", "--w2", "1", "--c", "1+1i"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["value"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["value"][1].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["terms"], 1);
    assert!(v["err"].as_f64().is_some());
    assert_eq!(v["meta"]["C"], "1+1i");
}

#[test]
fn all_routes_agree_and_brute_force_stabilizes() {
    let out = gk(&["kloosterman", "--q0", "2", "--a", "1/2", "--b", "1/2", "--w1", "1", "--w2", "-1+1i", "--c", "2", "--method", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["agree"], true);
    assert_eq!(v["brute_status"]["status"], "stabilized");
    assert_eq!(v["routes"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_literal_is_a_positioned_parse_error() {
    let out = gk(&["cusps", "--q0", "1+x"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("position 2"), "{err}");
}

#[test]
fn inadmissible_modulus_is_a_domain_error() {
    let out = gk(&["kloosterman", "--q0", "2", "--a", "1/2", "--b", "1/2", "--w1", "1", "--w2", "1", "--c", "1+1i", "--method", "samecusp"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn empty_suite_is_a_usage_error() {
    let out = gk(&["verify", "--suite", ""]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--suite"));
}

#[test]
fn fast_verification_succeeds() {
    let out = gk(&["verify", "--suite", "all", "--budget", "fast"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "class_count_formula_vs_search" && c["status"] == "pass"));
    for m in ["gaussint", "cusps", "kloosterman", "bessel", "btransform", "sieve"] {
        assert!(checks.iter().any(|c| c["module"] == m), "{m}");
    }
}

#[test]
fn output_is_independent_of_worker_count() {
    let a = gk(&["verify", "--suite", "kloosterman", "--threads", "1"]);
    let b = Command::new(env!("CARGO_BIN_EXE_gk")).args(["verify", "--suite", "kloosterman", "--threads", "1"]).env("GK_THREADS", "3").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["sieve", "--q0", "1+1i", "--a", "1/1", "--c", "1", "--N", "25", "--M", "3", "--psi", "0.5", "--family", "random", "--seed", "4"][..],
        &["sieve", "--sweep", "mean_value", "--format", "csv"][..],
        &["btransform", "--P", "1", "--K", "2", "--u", "0.5+1.5i", "--method", "triple_series"][..],
    ] {
        let a = gk(args);
        let b = gk(args);
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("classes.csv");
    let out = gk(&["cusps", "--q0", "2", "--list", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "cusp,stab_index,u,w,width");
    assert_eq!(lines.count(), 3);
}

#[test]
fn delta_and_geometric_side() {
    let out = gk(&["delta", "--q0", "1+1i", "--a", "1/1", "--b", "1/1", "--w1", "1", "--w2", "1", "--method", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["agree"], true);
    assert!((v["value"][0].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let out = gk(&["geom", "--w1", "1", "--w2", "1", "--P", "2", "--K", "2", "--cutoff", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["tail_envelope"].as_f64().unwrap() > 0.0);
    assert!(v["kloosterman_part"][0].as_f64().unwrap().is_finite());
    assert!(gk(&["geom", "--w1", "0", "--w2", "1", "--cutoff", "6"]).status.code() == Some(1));
}

#[test]
fn bessel_and_transform_values() {
    let out = gk(&["bessel", "--method", "j", "--nu", "0", "--z", "0"]);
    let v = json(&out);
    assert_eq!(v["value"][0].as_f64().unwrap(), 1.0);
    let out = gk(&["bessel", "--method", "j", "--nu", "0.5", "--z", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gk(&["btransform", "--P", "2", "--K", "2", "--diagonal"]);
    let v = json(&out);
    let main = v["main_term"].as_f64().unwrap();
    assert!((main - 2.0 * 2.0 * 8.0 / (8.0 * std::f64::consts::PI.powi(2))).abs() < 1e-12);
    let out = gk(&["btransform", "--u", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = gk(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify"));
}
