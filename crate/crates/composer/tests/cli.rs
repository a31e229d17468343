use std::path::Path;
use std::process::{Command, Output};

const WORKED: &str = "user,grid,count\nu1,g1,2\nu2,g1,2\nu1,g2,1\nu3,g2,3\nu4,g2,3\nu5,g2,3\n";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dp-composer"))
        .args(args)
        .env("DP_COMPOSER_THREADS", "2")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn clip_user_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let occ = write(dir.path(), "occ.csv", WORKED);
    let o = bin(&["clip-user", "--occupancy", &occ, "--u", "1", "--eps", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("kind,stage,user,grid,value\n"));
    assert!(out.contains("error_cap,,,,1.5\n"), "{out}");
    assert!(out.contains("k_factor,,,,1\n"), "{out}");
    assert!(out.contains("initial_k,,,,2\n"), "{out}");
    assert!(out.contains("privacy_loss,,,,1\n"), "{out}");
    assert!(out.contains("suppress,1,u1,g2,"), "{out}");
    assert!(out.contains("halt_single_grid,"), "{out}");
}

#[test]
fn clip_user_release_needs_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "d.csv",
        "user,grid,value\na,g1,0.5\nb,g1,0.25\na,g2,1\nc,g2,0\n",
    );
    let o = bin(&["clip-user", "--data", &data, "--u", "1", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&[
        "clip-user",
        "--data",
        &data,
        "--u",
        "1",
        "--eps",
        "1",
        "--seed",
        "4",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(
        out.lines()
            .filter(|l| l.starts_with("release_mean,"))
            .count(),
        2
    );
}

#[test]
fn sensitivity_item_level() {
    let o = bin(&["sensitivity", "--counts", "1,1,1,1", "--u", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("delta_mu,0.25\n"));
    assert!(out.contains("delta_var,0.1875\n"));
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "user,grid,value\na,g,0.5\n");
    let o = bin(&[
        "mechanism",
        "--data",
        &data,
        "--u",
        "1",
        "--eps",
        "1",
        "--mechanism",
        "baseline",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        bin(&["stats", "--u", "1", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    let o = bin(&["stats", "--data", "/nonexistent/d.csv", "--u", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "user,grid,value\na,g,7\n");
    assert_eq!(
        bin(&["stats", "--data", &bad, "--u", "1"]).status.code(),
        Some(4)
    );
    let bad = write(dir.path(), "bad2.csv", "user,grid,value\na,g\n");
    assert_eq!(
        bin(&["stats", "--data", &bad, "--u", "1"]).status.code(),
        Some(4)
    );
}

#[test]
fn stats_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "d.csv",
        "user,grid,value\na,g1,0\nb,g1,1\na,g2,0.5\n",
    );
    let o = bin(&["stats", "--data", &data, "--u", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["grid"], "g1");
    assert_eq!(v[0]["mean"], 0.5);
    assert_eq!(v[0]["variance"], 0.25);
    assert_eq!(v[1]["n"], 1);
}

#[test]
fn output_file_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.conf", "u = 1\ncounts = 1,1,1,1\n");
    let out = dir.path().join("out.csv");
    let o = bin(&[
        "sensitivity",
        "--config",
        &cfg,
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("delta_var,0.1875\n"));
}

#[test]
fn synth_then_montecarlo() {
    let o = bin(&[
        "synth", "--grids", "3", "--users", "7", "--q", "0.5", "--seed", "9",
    ]);
    assert!(o.status.success());
    let occ = stdout(&o);
    assert!(occ.starts_with("user,grid,count\n"));
    // user 1 occupies every grid
    assert_eq!(occ.lines().filter(|l| l.starts_with("u1,")).count(), 3);
    let o = bin(&[
        "montecarlo",
        "--metric",
        "privacy",
        "--grids",
        "3",
        "--users",
        "7",
        "--q",
        "0.5",
        "--trials",
        "4",
        "--eps",
        "0.5,1",
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("epsilon,value,label\n"));
    assert!(out.contains("0.5,1.5,no_suppression\n"), "{out}");
}

#[test]
fn mae_baseline_is_analytic() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "d.csv",
        "user,grid,value\na,g,0\na,g,1\nb,g,1\nc,g,0\n",
    );
    let o = bin(&[
        "mae",
        "--data",
        &data,
        "--u",
        "1",
        "--mechanism",
        "baseline",
        "--eps",
        "0.5,1",
        "--seed",
        "0",
    ]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "epsilon,value,label\n0.5,1,baseline\n1,0.5,baseline\n"
    );
}

#[test]
fn scaling_reports_each_law() {
    let o = bin(&["scaling", "--counts", "1,4,9", "--lambdas", "10"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(
        out.contains("sample/m_ub_optimized,10,90,90,true,true\n"),
        "{out}"
    );
}
