//! End-to-end checks of the nzlab binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use num_complex::Complex64;
use nzlab_core::zeta::zeta_rank1_reference;

const RANK1_ORDINATES: [f64; 3] =
    [14.134725141734694, 21.022039638771555, 25.010857580145689];

fn nzlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nzlab"));
    c.env_remove("NZL_THREADS");
    c
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("nzlab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_file(&p);
    p
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process was killed by a signal")
}

fn read(path: &PathBuf) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {path:?}: {e}"))
}

#[test]
fn zeta_empty_grid_writes_the_header_and_exits_zero() {
    let out_path = tmp_path("zeta-empty.csv");
    let out = nzlab()
        .args(["zeta", "--s-grid", "0.5:0.5:1,0:30:0", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&out_path), "s_re,s_im,value_re,value_im,err\n");
}

#[test]
fn zeta_pole_exits_with_the_numeric_code() {
    let out = nzlab().args(["zeta", "--s-grid", "1:1:1,0:0:1"]).output().unwrap();
    assert_eq!(exit_code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("pole"));
}

#[test]
fn zeta_bad_grid_spec_is_a_usage_error() {
    let out = nzlab().args(["zeta", "--s-grid", "nonsense"]).output().unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn zeta_critical_line_matches_the_reference() {
    let out_path = tmp_path("zeta-ref.csv");
    let out = nzlab()
        .args(["zeta", "--s-grid", "0.5:0.5:1,5:29:7", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let body = read(&out_path);
    let mut rows = 0;
    for line in body.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let s = Complex64::new(f[0], f[1]);
        let got = Complex64::new(f[2], f[3]);
        let want = zeta_rank1_reference(s).unwrap();
        let err = f[4];
        assert!(
            (got - want).norm() <= 2.0 * err,
            "s = {s}: got {got}, want {want}, err {err}"
        );
        rows += 1;
    }
    assert_eq!(rows, 7);
}

#[test]
fn zeros_scan_finds_three_ordinates_and_is_idempotent() {
    let cache = tmp_path("zeros-rank1.csv");
    let run = || {
        nzlab()
            .args(["zeros", "--gamma-range", "10:30", "--cache"])
            .arg(&cache)
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(exit_code(&first), 0, "stderr: {}", String::from_utf8_lossy(&first.stderr));
    let after_first = read(&cache);
    let second = run();
    assert_eq!(exit_code(&second), 0);
    let after_second = read(&cache);
    assert_eq!(after_first, after_second, "a re-run must not grow the cache");

    let lines: Vec<&str> = after_first.lines().collect();
    assert_eq!(lines.len(), 4, "header plus one row per zero:\n{after_first}");
    assert_eq!(lines[0], "n,gamma,tol,route,timestamp");
    for (row, want) in lines[1..].iter().zip(RANK1_ORDINATES) {
        let gamma: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((gamma - want).abs() < 1e-5, "gamma {gamma} vs {want}");
        assert!(row.contains(",direct,"));
    }
}

#[test]
fn zeros_rank2_records_carry_both_routes() {
    let cache = tmp_path("zeros-rank2.csv");
    let out = nzlab()
        .args(["zeros", "--rank", "2", "--gamma-range", "5:9", "--levels", "2", "--cache"])
        .arg(&cache)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("direct_residual="), "stdout: {stdout}");
    assert!(stdout.contains("phi_residual="), "stdout: {stdout}");

    let body = read(&cache);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 3, "header plus two routes of one zero:\n{body}");
    assert!(lines[1].contains(",direct,") || lines[2].contains(",direct,"));
    assert!(lines[1].contains(",phi,") || lines[2].contains(",phi,"));
    let gamma: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((gamma - 7.769080111571352).abs() < 1e-5, "gamma {gamma}");
}

#[test]
fn verify_report_passes_and_is_byte_identical_across_thread_caps() {
    let a = tmp_path("verify-a.json");
    let b = tmp_path("verify-b.json");
    let first = nzlab().args(["verify", "--seed", "9", "--out"]).arg(&a).output().unwrap();
    assert_eq!(exit_code(&first), 0, "stderr: {}", String::from_utf8_lossy(&first.stderr));
    let second = nzlab()
        .args(["verify", "--seed", "9", "--out"])
        .arg(&b)
        .env("NZL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(exit_code(&second), 0);
    let report_a = read(&a);
    assert_eq!(report_a, read(&b), "reports must not depend on the thread cap");

    let report: serde_json::Value = serde_json::from_str(&report_a).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert_eq!(report["sigma"], serde_json::json!(-1.0));
    assert_eq!(report["suites"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_corrupt_sign_fails_the_resolvent_suite() {
    let path = tmp_path("verify-corrupt.json");
    let out = nzlab()
        .args(["verify", "--seed", "9", "--corrupt-sign", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 3);
    let report: serde_json::Value = serde_json::from_str(&read(&path)).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(false));
    assert_eq!(report["sigma"], serde_json::json!(1.0));
    let suites = report["suites"].as_array().unwrap();
    let resolvent = suites.iter().find(|s| s["name"] == "resolvent").unwrap();
    assert_eq!(resolvent["pass"], serde_json::Value::Bool(false));
    let heat = suites.iter().find(|s| s["name"] == "heat").unwrap();
    assert_eq!(heat["pass"], serde_json::Value::Bool(true));
}

#[test]
fn langevin_ou_passes_equipartition_and_reruns_identically() {
    let prefix_a = tmp_path("lg-a");
    let prefix_b = tmp_path("lg-b");
    let run = |prefix: &PathBuf, threads: Option<&str>| {
        let mut cmd = nzlab();
        cmd.args(["langevin", "--paths", "2000", "--steps", "400", "--out"]).arg(prefix);
        if let Some(t) = threads {
            cmd.env("NZL_THREADS", t);
        }
        cmd.output().unwrap()
    };
    let first = run(&prefix_a, None);
    assert_eq!(exit_code(&first), 0, "stderr: {}", String::from_utf8_lossy(&first.stderr));
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert!(stdout.contains("equipartition axis=0: PASS"), "stdout: {stdout}");

    let second = run(&prefix_b, Some("1"));
    assert_eq!(exit_code(&second), 0);
    for suffix in ["config.json", "moments.csv", "km.csv", "density.csv"] {
        let a = read(&PathBuf::from(format!("{}-{suffix}", prefix_a.display())));
        let b = read(&PathBuf::from(format!("{}-{suffix}", prefix_b.display())));
        assert_eq!(a, b, "{suffix} must not depend on the thread cap");
    }

    let moments = read(&PathBuf::from(format!("{}-moments.csv", prefix_a.display())));
    assert_eq!(moments.lines().next().unwrap(), "t,axis,m1,m2,m3,m4");
    let km = read(&PathBuf::from(format!("{}-km.csv", prefix_a.display())));
    assert_eq!(km.lines().next().unwrap(), "order,center,value,error,masked");
}

#[test]
fn langevin_rejects_bad_invocations() {
    let out = nzlab().args(["langevin", "--paths", "0"]).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    let out = nzlab().args(["langevin", "--model", "bogus"]).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    let out = nzlab().args(["langevin", "--config", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn bad_thread_cap_is_a_usage_error() {
    let out = nzlab()
        .args(["verify", "--seed", "1"])
        .env("NZL_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    let out = nzlab()
        .args(["verify", "--seed", "1"])
        .env("NZL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn unwritable_output_exits_with_the_io_code() {
    let out = nzlab()
        .args(["zeta", "--s-grid", "0.5:0.5:1,0:30:0", "--out", "/nonexistent/dir/out.csv"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 4);
}
