//! End-to-end tests of the `wg-stokes` binary: flag handling, exit codes,
//! and the CSV/VTK/JSON output contracts.

mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wg-stokes"))
}

fn out_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wg-stokes-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.code().is_some(),
        "binary was killed by a signal: {:?}",
        out.status
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

#[test]
fn convergence_writes_csv_and_prints_table() {
    let csv = out_path("ex1.csv");
    let out = run(&[
        "convergence",
        "--problem",
        "ex1",
        "--levels",
        "4:8",
        "--tol",
        "1e-8",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("problem ex1"), "table header: {table}");
    assert!(table.contains("|||e|||"), "column header: {table}");

    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,err_triple,rate,err_l2u,rate,err_l2p,rate");
    assert_eq!(lines.len(), 4, "header + 2 levels + fit: {text}");
    assert!(lines[3].starts_with("fit,,"), "fit row: {}", lines[3]);
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 7, "column count in {line:?}");
    }
    // First data row carries no rates.
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!((first[2], first[4], first[6]), ("", "", ""));
}

#[test]
fn convergence_csv_is_byte_identical_across_runs() {
    let args = |p: &PathBuf| {
        vec![
            "convergence".to_string(),
            "--problem".into(),
            "ex1".into(),
            "--levels".into(),
            "4:8".into(),
            "--tol".into(),
            "1e-8".into(),
            "--output".into(),
            p.to_str().unwrap().into(),
        ]
    };
    let a = out_path("rep_a.csv");
    let b = out_path("rep_b.csv");
    assert_eq!(run_owned(&args(&a)).status.code(), Some(0));
    assert_eq!(run_owned(&args(&b)).status.code(), Some(0));
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "repeated runs must emit identical bytes"
    );
}

fn run_owned(args: &[String]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn divfree_csv_omits_pressure_without_recovery() {
    let csv = out_path("df.csv");
    let out = run(&[
        "convergence",
        "--problem",
        "ex1",
        "--algorithm",
        "divfree",
        "--levels",
        "4:8",
        "--tol",
        "1e-8",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,err_triple,rate,err_l2u,rate");
    for line in &lines {
        assert_eq!(line.split(',').count(), 5, "column count in {line:?}");
    }

    let csv2 = out_path("df_p.csv");
    let out = run(&[
        "convergence",
        "--problem",
        "ex1",
        "--algorithm",
        "divfree",
        "--levels",
        "4:8",
        "--tol",
        "1e-8",
        "--recover-pressure",
        "--output",
        csv2.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&csv2).unwrap();
    assert!(
        text.starts_with("h,err_triple,rate,err_l2u,rate,err_l2p,rate"),
        "--recover-pressure restores the pressure columns: {text}"
    );
}

#[test]
fn solve_cavity_emits_wellformed_vtk_with_zero_mean_pressure() {
    let vtk_path = out_path("ex6.vtk");
    let out = run(&[
        "solve",
        "--problem",
        "ex6",
        "--n",
        "32",
        "--tol",
        "1e-9",
        "--output",
        vtk_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let summary: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(summary["mesh"]["triangles"], 2048);
    assert_eq!(summary["solver"]["converged"], true);

    let vtk = common::parse_vtk(&std::fs::read_to_string(&vtk_path).unwrap());
    assert_eq!(vtk.cells.len(), 2048);
    assert!(vtk.cell_types.iter().all(|&t| t == 5), "all triangles");
    assert!(vtk.velocity.iter().all(|v| v[2] == 0.0), "planar velocity");

    let mut mean = 0.0;
    let mut area = 0.0;
    for t in 0..vtk.cells.len() {
        let a = vtk.cell_area(t);
        assert!(a > 0.0, "ccw cells");
        mean += a * vtk.pressure[t];
        area += a;
    }
    assert!((area - 1.0).abs() <= 1e-12, "cavity has unit area, got {area}");
    assert!(mean.abs() <= 1e-12, "pressure mean {mean:.3e}");
}

#[test]
fn solve_step_channel_pressure_drops_downstream() {
    let vtk_path = out_path("ex5.vtk");
    let out = run(&[
        "solve",
        "--problem",
        "ex5",
        "--n",
        "8",
        "--tol",
        "1e-8",
        "--output",
        vtk_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let vtk = common::parse_vtk(&std::fs::read_to_string(&vtk_path).unwrap());

    // Area-weighted mean pressure over the upstream and downstream thirds
    // of the channel (x in (-2, 8)).
    let mut means = [0.0, 0.0];
    let mut areas = [0.0, 0.0];
    for t in 0..vtk.cells.len() {
        let [x, _] = vtk.cell_centroid(t);
        let a = vtk.cell_area(t);
        let third = if x < -2.0 + 10.0 / 3.0 {
            0
        } else if x > 8.0 - 10.0 / 3.0 {
            1
        } else {
            continue;
        };
        means[third] += a * vtk.pressure[t];
        areas[third] += a;
    }
    let inlet = means[0] / areas[0];
    let outlet = means[1] / areas[1];
    assert!(
        inlet > outlet,
        "pressure must drop along the channel: inlet {inlet:.4e} <= outlet {outlet:.4e}"
    );
}

#[test]
fn verify_passes_and_fault_injection_fails() {
    let out = run(&["verify", "--sizes", "2,4", "--triangles", "40"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.matches(": PASS").count(), 4, "four suites: {text}");
    assert!(!text.contains("FAIL"));

    let out = run(&[
        "verify",
        "--sizes",
        "2,4",
        "--triangles",
        "40",
        "--inject-fault",
        "divfree-sign",
    ]);
    assert_eq!(out.status.code(), Some(1), "fault must fail the run");
    let text = stdout(&out);
    assert!(text.contains("suite divfree: FAIL"), "fault surfaces: {text}");
}

#[test]
fn config_errors_exit_two() {
    // Unknown problem id.
    let out = run(&["convergence", "--problem", "ex9", "--levels", "4:8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown problem"));

    // Divfree needs homogeneous boundary data.
    let out = run(&["solve", "--problem", "ex6", "--algorithm", "divfree"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("homogeneous"));

    // Imported-mesh domains have no structured family.
    let out = run(&["convergence", "--problem", "ex2", "--levels", "4:8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no structured mesh family"));

    // --levels and --mesh conflict.
    let out = run(&[
        "convergence",
        "--problem",
        "ex1",
        "--levels",
        "4:8",
        "--mesh",
        "whatever.node",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mutually exclusive"));

    // ex3 needs a positive Reynolds number.
    let out = run(&["convergence", "--problem", "ex3", "--Re", "-1", "--levels", "4:8"]);
    assert_eq!(out.status.code(), Some(2));

    // Malformed level range.
    let out = run(&["convergence", "--problem", "ex1", "--levels", "8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("4:128"), "hint in message: {}", stderr(&out));
}

#[test]
fn tolerance_env_var_is_used_and_flag_wins() {
    // An absurd env tolerance makes the solve fail to converge -> exit 1.
    let csv = out_path("env_tol.csv");
    let out = bin()
        .args(["convergence", "--problem", "ex1", "--levels", "4:8"])
        .args(["--output", csv.to_str().unwrap()])
        .env("WG_STOKES_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "bad env value is a config error");

    // The flag overrides the env var: run succeeds despite the bad-looking
    // env tolerance being legal but absurdly tight for the iteration cap.
    let out = bin()
        .args(["convergence", "--problem", "ex1", "--levels", "4:8", "--tol", "1e-8"])
        .args(["--output", csv.to_str().unwrap()])
        .env("WG_STOKES_TOL", "1e-300")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "flag beats env");
}

#[test]
fn bundled_mesh_study_runs_via_refine() {
    let csv = out_path("ex2.csv");
    let out = run(&[
        "convergence",
        "--problem",
        "ex2",
        "--refine",
        "1",
        "--tol",
        "1e-8",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4, "header + base + 1 refinement + fit");
}
