use std::path::Path;
use std::process::{Command, Output};

use mixlab::{io, GridFunction};

fn mixlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bounds_csv_shape() {
    let out = mixlab(&["bounds"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r0,old_bound,new_bound,gap"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    for r in &rows {
        assert!(r[2] >= r[1] && (r[2] - r[1] - r[3]).abs() < 1e-12);
    }
    assert_eq!(rows[0], vec![0.0; 4]);
}

#[test]
fn bounds_json_parses() {
    let out = mixlab(&["bounds", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 21);
    assert_eq!(v[20]["r0"], 1.0);
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &[
            "variational",
            "--samples",
            "200",
            "--seed",
            "7",
            "--n",
            "64",
        ][..],
        &["rearrange", "--seed", "3", "--n", "256"][..],
        &["hull-probe", "--probes", "2000", "--seed", "11"][..],
        &["ode", "--alpha0", "0.8"][..],
    ] {
        let a = mixlab(args);
        let b = mixlab(args);
        assert_eq!(
            code(&a),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_mixlab"))
            .args(["hull-probe", "--probes", "5000", "--seed", "4"])
            .env("MIXLAB_THREADS", threads)
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("4"));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn invalid_input_exits_two() {
    assert_eq!(code(&mixlab(&["bounds", "--E", "-1"])), 2);
    assert_eq!(code(&mixlab(&["bounds", "--n", "100"])), 2);
    assert_eq!(code(&mixlab(&["verify-subsolution", "--eps", "0.6"])), 2);
    assert_eq!(code(&mixlab(&["hull-probe", "--d", "1"])), 2);
    assert_eq!(code(&mixlab(&["ode", "--alpha0", "1.5"])), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_mixlab"))
        .arg("bounds")
        .env("MIXLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn unparseable_density_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("rho.csv");
    std::fs::write(&bad, "x,value\n0.0,abc\n").unwrap();
    let out = mixlab(&["simulate", "--rho0", path_str(&bad)]);
    assert_eq!(code(&out), 3);
    let missing = dir.path().join("absent.csv");
    assert_eq!(
        code(&mixlab(&["simulate", "--rho0", path_str(&missing)])),
        3
    );
}

#[test]
fn mixed_density_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.csv");
    let f = GridFunction::zeros(2.0 * std::f64::consts::PI, 64).unwrap();
    std::fs::write(&zero, io::grid_to_csv(&f)).unwrap();
    assert_eq!(code(&mixlab(&["simulate", "--rho0", path_str(&zero)])), 4);
}

#[test]
fn simulate_from_file_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let rho = dir.path().join("rho.json");
    let f = GridFunction::from_fn(2.0 * std::f64::consts::PI, 256, |x| 0.8 * x.sin()).unwrap();
    std::fs::write(&rho, io::grid_to_json(&f)).unwrap();
    let traj = dir.path().join("traj.csv");
    let out = mixlab(&[
        "simulate",
        "--n",
        "256",
        "--rho0",
        path_str(&rho),
        "--h-stop",
        "0.05",
        "--out",
        path_str(&traj),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary["ratio"].as_f64().unwrap() >= 0.98);
    let text = std::fs::read_to_string(&traj).unwrap();
    assert!(text.starts_with("t,h,q,alpha_eff,lambda\n"));
    let last_h: f64 = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(last_h <= 0.05 + 1e-12);
    let side = dir.path().join("traj.csv.summary.json");
    let saved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    assert_eq!(saved, summary);
}

#[test]
fn mismatched_period_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let rho = dir.path().join("rho.csv");
    let f =
        GridFunction::from_fn(1.0, 64, |x| 0.5 * (2.0 * std::f64::consts::PI * x).sin()).unwrap();
    std::fs::write(&rho, io::grid_to_csv(&f)).unwrap();
    assert_eq!(code(&mixlab(&["simulate", "--rho0", path_str(&rho)])), 2);
}

#[test]
fn verify_subsolution_passes_for_both_families() {
    let out = mixlab(&["verify-subsolution", "--n", "512", "--times", "10"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("tau_dot_equals_lambda,true"));
    let out = mixlab(&[
        "verify-subsolution",
        "--eps",
        "0.25",
        "--n",
        "256",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v.as_array().unwrap().iter().all(|l| l["passed"] == true));
}

#[test]
fn injected_violation_exits_six() {
    let out = mixlab(&["hull-probe", "--probes", "1000", "--inject-violation"]);
    assert_eq!(code(&out), 6);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("injected"), "{err}");
    assert!(stdout(&out).contains("injected,0,1,1,"));
}

#[test]
fn failed_write_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("bounds.csv");
    let out = mixlab(&["bounds", "--out", path_str(&target)]);
    assert_eq!(code(&out), 2);
    assert!(!target.exists());
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("ode.csv");
    let out = mixlab(&["ode", "--steps", "11", "--out", path_str(&target)]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let file = std::fs::read_to_string(&target).unwrap();
    assert_eq!(file, stdout(&mixlab(&["ode", "--steps", "11"])));
    assert_eq!(file.lines().count(), 12);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn rk4_trace_ends_at_the_sharp_time() {
    let out = mixlab(&["ode", "--rk4", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let times = v["times"].as_array().unwrap();
    let t_end = times.last().unwrap().as_f64().unwrap();
    let p = mixlab::MixParams::new(2.0 * std::f64::consts::PI, 1.0, 2).unwrap();
    assert!((t_end / p.sharp_mixing_time() - 1.0).abs() < 1e-5);
}
