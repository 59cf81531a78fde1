use std::fs;
use std::process::{Command, Output};

use serde_json::Value;
use uecsp::Formula;

fn uecsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uecsp")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn generate_writes_header_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.txt");
    let p = path.to_str().unwrap();
    let args = ["generate", "--k", "3", "--d", "2", "--n", "1000", "--alpha", "0.5", "--seed", "1", "--out", p];
    assert!(uecsp(&args).status.success());
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# uecsp generate --k 3 --d 2 --n 1000 --alpha 0.5 --seed 1"));
    assert_eq!(lines.next().unwrap(), "2 1000 500 3");

    let f = Formula::from_text(&text).unwrap();
    let again = uecsp::generate_random_formula(1000, 3, 0.5, 2, 1).unwrap();
    assert_eq!(f.to_text(), again.to_text());

    // same seed, same bytes
    let path2 = dir.path().join("g.txt");
    let mut args2 = args;
    args2[12] = path2.to_str().unwrap();
    assert!(uecsp(&args2).status.success());
    assert_eq!(text, fs::read_to_string(&path2).unwrap());
}

#[test]
fn domain_one_is_a_usage_error() {
    let out = uecsp(&["generate", "--k", "3", "--d", "1", "--n", "10", "--alpha", "0.5"]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_parameters_fail() {
    assert!(!uecsp(&["search", "--k", "3", "--alpha-range", "0.9:0.5:0.1"]).status.success());
    assert!(!uecsp(&["trajectory", "--k", "3", "--alpha", "0.8", "--policy", "nope"]).status.success());
    assert!(!uecsp(&["scaling", "--kmax", "8192"]).status.success());
    assert!(!uecsp(&["phase", "--k", "3", "--section", "c3=0"]).status.success());
}

#[test]
fn solve_agrees_with_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.txt");
    let p = path.to_str().unwrap();
    for (alpha, seed) in [("0.5", "3"), ("1.2", "4")] {
        let args = ["generate", "--k", "3", "--n", "300", "--alpha", alpha, "--seed", seed, "--out", p];
        assert!(uecsp(&args).status.success());
        let v = stdout_json(&uecsp(&["solve", p, "--witness"]));
        let f = Formula::from_text(&fs::read_to_string(&path).unwrap()).unwrap();
        let expect = uecsp::gaussian_solve(&f).unwrap().satisfiable;
        assert_eq!(v["satisfiable"], Value::Bool(expect));
        assert!(v["invocation"].as_str().unwrap().starts_with("uecsp solve"));
        if expect {
            assert_eq!(v["witness"].as_array().unwrap().len(), 300);
        }
    }
}

#[test]
fn thresholds_k3() {
    let v = stdout_json(&uecsp(&["thresholds", "--k", "3"]));
    assert!((v["alpha_d"].as_f64().unwrap() - 0.818).abs() < 1e-3);
    assert!((v["alpha_s"].as_f64().unwrap() - 0.918).abs() < 1e-3);
    assert!((v["alpha_a_uc"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-4);
    let guc = v["alpha_a_guc"].as_f64().unwrap();
    assert!(guc > 2.0 / 3.0 && guc <= v["alpha_d"].as_f64().unwrap());
}

#[test]
fn trajectory_writes_snapshots_and_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let od = dir.path().join("tr");
    let v = stdout_json(&uecsp(&[
        "trajectory",
        "--policy",
        "uc",
        "--k",
        "3",
        "--alpha",
        "0.8",
        "--out-dir",
        od.to_str().unwrap(),
    ]));
    assert!((v["t_d"].as_f64().unwrap() - 0.02957).abs() < 1e-3);
    assert!((v["t_s"].as_f64().unwrap() - 0.11697).abs() < 1e-3);
    for name in ["trajectory.csv", "potential.csv", "tstar.csv"] {
        let text = fs::read_to_string(od.join(name)).unwrap();
        assert!(text.starts_with("# uecsp trajectory"), "{name}");
    }
    let pot = fs::read_to_string(od.join("potential.csv")).unwrap();
    assert_eq!(pot.lines().nth(1).unwrap(), "t,b,V");
    assert!(pot.lines().count() > 200);
}

#[test]
fn phase_section_passes_through_tricritical_corner() {
    let out = uecsp(&["phase", "--k", "4", "--section", "c4=0", "--range", "0.4:0.5:0.05"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "sweep_value,c_crit_d,c_crit_s");
    assert_eq!(rows.len(), 4);
    let last: Vec<f64> = rows[3].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 0.5);
    assert!((last[1] - 1.0 / 6.0).abs() < 1e-4 && (last[2] - 1.0 / 6.0).abs() < 1e-4);
}

#[test]
fn search_csv_is_sorted_and_paired() {
    let out = uecsp(&["search", "--k", "3", "--n", "500", "--alpha-range", "0:0.2:0.1", "--seeds", "8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# uecsp search"));
    assert_eq!(lines.next().unwrap(), "alpha,p_hat,stderr");
    let alphas: Vec<String> = lines.map(|l| l.split(',').next().unwrap().to_string()).collect();
    assert_eq!(alphas, ["0", "0.1", "0.2"]);
    assert!(text.contains("\n0,1,0\n"));
}

#[test]
fn leafremove_reports_core() {
    let v = stdout_json(&uecsp(&["leafremove", "--n", "20000", "--alpha", "0.6"]));
    assert_eq!(v["empty"], Value::Bool(true));
    assert_eq!(v["core_vars"], 0);
    let v = stdout_json(&uecsp(&["leafremove", "--n", "20000", "--alpha", "0.9"]));
    assert_eq!(v["empty"], Value::Bool(false));
}

#[test]
fn small_scaling_run() {
    let dir = tempfile::tempdir().unwrap();
    let od = dir.path().join("sc");
    let out = uecsp(&["scaling", "--kmin", "16", "--kmax", "128", "--out-dir", od.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["records"].as_array().unwrap().len(), 4);
    assert!(v["fit"]["nu"].is_number());
    for name in ["sweep.csv", "collapse.csv", "epochs.csv"] {
        assert!(fs::read_to_string(od.join(name)).unwrap().starts_with("# uecsp scaling"), "{name}");
    }
}
