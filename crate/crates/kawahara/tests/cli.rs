//! End-to-end checks of the `gkw` binary: flags, exit codes, file emission.

use std::path::PathBuf;
use std::process::{Command, Output};

fn gkw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gkw-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn soliton_check_residual_exits_zero() {
    let out = gkw(&["soliton", "--p", "3", "--check-residual"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["residual_l2"].as_f64().unwrap() < 1e-8);
    assert_eq!(doc["p"].as_f64().unwrap(), 3.0);
}

#[test]
fn unknown_flag_is_usage_error_and_writes_nothing() {
    let dir = tmpdir("usage");
    let path = dir.join("out.json");
    let out = gkw(&["soliton", "--p", "1", "--no-such-flag", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!path.exists(), "no files on usage errors");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn computation_failure_exits_two_with_payload() {
    // domain far too small for the profile to decay
    let out = gkw(&["soliton", "--p", "1", "--half-length", "6", "--num-points", "64"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).lines().last().unwrap())
            .expect("structured error payload");
    assert!(err["error"].as_str().unwrap().contains("half_length"));
}

#[test]
fn index_both_matches_table_and_is_deterministic() {
    let dir = tmpdir("index");
    let p1 = dir.join("a.json");
    let p2 = dir.join("b.json");
    for p in [&p1, &p2] {
        let out = gkw(&["index", "--p", "1", "--method", "both", "-o", p.to_str().unwrap()]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap(), "byte-identical reruns");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p1).unwrap()).unwrap();
    let j_half = doc["j_half"].as_f64().unwrap();
    assert!((j_half - (-10.0787)).abs() < 0.02 * 10.0787, "j_half = {j_half}");
    assert!(doc["method_agreement"].as_f64().unwrap() < 1e-3);
    assert_eq!(doc["method"].as_str().unwrap(), "both");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn index_scan_emits_csv() {
    let out = gkw(&["index", "--scan", "4:5:5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(lines[0], "p,j_half,j_full");
    assert_eq!(lines.len(), 6);
}

#[test]
fn index_critical_bisects() {
    let out = gkw(&["index", "--critical", "--tol", "5e-3"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pc = doc["p_crit"].as_f64().unwrap();
    assert!((pc - 4.84).abs() < 0.05, "p_crit = {pc}");
}

#[test]
fn spectrum_reports_lemma_verdicts() {
    let out = gkw(&["spectrum", "--p", "1", "--half-length", "40", "--num-points", "512"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["negative_count"].as_u64().unwrap(), 1);
    assert!(doc["kernel_alignment"].as_f64().unwrap() > 0.999);
    assert!((doc["essential_floor"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    // eigenfunctions stay out of the wire format
    assert!(doc.get("eigenfunctions").is_none());
}

#[test]
fn albert_emits_verdicts() {
    let out = gkw(&["albert", "--p", "2", "--omega-max", "50", "--samples", "500"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["positivity_ok"].as_bool().unwrap());
    assert!(doc["logconcavity_ok"].as_bool().unwrap());
    assert!(doc["worst_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn groundstate_json_and_mu_scan() {
    let out = gkw(&["groundstate", "--p", "1", "--mu", "1e-2", "--num-points", "512"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let alpha = doc["alpha"].as_f64().unwrap();
    assert!((1.0..=1.05).contains(&alpha), "alpha = {alpha}");
    assert!(doc["phi_residual_l2"].as_f64().unwrap() < 1e-7);

    let out = gkw(&[
        "groundstate", "--p", "1", "--mu-scan", "1e-1:1e-3:3", "--num-points", "512", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("mu,alpha,i_value,h1_distance_to_gkdv"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn groundstate_p4_needs_override() {
    let out = gkw(&["groundstate", "--p", "4", "--mu", "1e-2", "--num-points", "512"]);
    assert_eq!(out.status.code(), Some(2));
    let out = gkw(&[
        "groundstate", "--p", "4", "--mu", "1e-2", "--num-points", "512", "--allow-supercritical",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the covered"));
}

#[test]
fn evolve_emits_trace_csv() {
    let out = gkw(&[
        "evolve", "--p", "1", "--branch", "explicit", "--param", "0.2130177514792899",
        "--delta", "1e-3", "--horizon", "2", "--dt", "5e-3", "--sample-every", "1",
        "--format", "csv",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,distance,shift,energy,mass");
    assert_eq!(lines.len(), 4); // t = 0, 1, 2
}

#[test]
fn continue_emits_branch_csv() {
    let c1 = "0.2130177514792899";
    let out = gkw(&["continue", "--p", "1", "--c-from", c1, "--c-to", "0.23", "--steps", "2"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "c,residual,coercivity_margin,gamma");
    assert_eq!(lines.len(), 4); // seed + 2 steps
    for line in &lines[1..] {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(cols[1] < 1e-9, "residual column");
        assert!(cols[2] > 0.0, "coercivity margin");
    }
}

#[test]
fn env_grid_override_applies() {
    let out = Command::new(env!("CARGO_BIN_EXE_gkw"))
        .args(["spectrum", "--p", "1"])
        .env("GKW_HALF_LENGTH", "35")
        .env("GKW_NUM_POINTS", "256")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // 256-point grid: still one negative eigenvalue
    assert_eq!(doc["negative_count"].as_u64().unwrap(), 1);
}
