use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn cgflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgflow")).args(args).output().expect("failed to spawn cgflow")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is not JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run(sc: &str, dir: &Path, extra: &[&str]) -> Output {
    let sc = scenario(sc);
    let mut args = vec!["integrate", "--scenario", sc.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    cgflow(&args)
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn flat_circle_closes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("flat_circle.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("report.json"));
    let closure = report["flat_circle"]["closure_error"].as_f64().unwrap();
    assert!(closure < 1e-7, "closure error {closure}");
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn taub_nut_drift_table() {
    let dir = tempfile::tempdir().unwrap();
    let report = json_stdout(&run("taub_nut.json", dir.path(), &[]));
    for name in ["K", "L", "H", "W"] {
        let d = report["drift"][name].as_f64().unwrap_or_else(|| panic!("missing drift for {name}"));
        assert!(d < 1e-8, "{name} drifted by {d}");
    }
    assert_eq!(report["within_tolerance"], Value::Bool(true));
}

#[test]
fn horocircle_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let report = json_stdout(&run("half_plane_horocircle.json", dir.path(), &[]));
    let hp = &report["half_plane"];
    assert_eq!(hp["horocircle"], Value::Bool(true));
    assert_eq!(hp["observed"]["regime"], "horocircle");
}

#[test]
fn exported_trajectories_reproduce_the_report() {
    for format in ["csv", "json"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run("taub_nut.json", dir.path(), &["--format", format]);
        assert!(out.status.success());
        let traj = dir.path().join(format!("trajectory.{format}"));
        let again = json_stdout(&cgflow(&["invariants", "--trajectory", traj.to_str().unwrap()]));
        assert_eq!(again, read_json(&dir.path().join("report.json")), "{format} round trip");
    }
}

#[test]
fn closed_forms_agree_with_integration() {
    for (sc, kind) in [
        ("cp2_circle.json", "cp2-const-r"),
        ("eh_orbit.json", "eh-orbit"),
        ("taub_nut.json", "tn-quadrature"),
        ("flat_circle.json", "flat"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(sc);
        let out = cgflow(&[
            "compare",
            "--scenario",
            sc.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--closed-form",
            kind,
        ]);
        let v = json_stdout(&out);
        let dev = v["max_deviation"].as_f64().unwrap();
        assert!(dev < 1e-6, "{kind}: deviation {dev}");
    }
}

#[test]
fn inapplicable_pairing_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("flat_circle.json");
    let out = cgflow(&[
        "compare",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--closed-form",
        "cp2-const-r",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cp2_classification() {
    let v = json_stdout(&cgflow(&["cp2-classify", "--tau", "0.5", "--a", "0.5"]));
    assert_eq!(v["roots"].as_array().unwrap().len(), 1);
    assert!((v["roots"][0].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let v = json_stdout(&cgflow(&["cp2-classify", "--tau", "0", "--a", "0.25"]));
    let roots: Vec<f64> = v["roots"].as_array().unwrap().iter().map(|r| r.as_f64().unwrap()).collect();
    assert_eq!(roots.len(), 3);
    for (r, want) in roots.iter().zip([1.5, 1.5, 4.0]) {
        assert!((r - want).abs() < 1e-9, "{roots:?}");
    }

    let v = json_stdout(&cgflow(&["cp2-classify", "--tau", "0.99", "--a", "10"]));
    assert_eq!(v["checks"]["gamma2_below_one"], Value::Bool(true));
    assert!(v["checks"]["tau_error"].as_f64().unwrap() < 1e-9);
    assert!(v["checks"]["a_error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn malformed_scenario_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), r#"{"model": {"model": "flat4"}, "initial": "#);
    let out = cgflow(&["integrate", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let sc = write_scenario(dir.path(), r#"{"model": {"model": "flat4"}, "bogus": 1}"#);
    let out = cgflow(&["integrate", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn starting_outside_the_chart_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        r#"{"model": {"model": "half_plane"},
            "initial": {"flow": "lorentz", "point": [0.0, -1.0], "u": [1.0, 0.0], "c": [0.0, 0.0, 1.0]}}"#,
    );
    let out = cgflow(&["integrate", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn drift_above_tolerance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        r#"{"model": {"model": "taub_nut", "params": {"m": 1.0}},
            "initial": {"flow": "lorentz", "point": [2.5, 1.2, 0.3, 0.0], "u": [0.6, 0.0, 0.48, 0.64],
                        "c": [0.0, 0.0, 0.7], "frame": true},
            "span": [0.0, 30.0],
            "integrator": {"rel_tol": 1e-4, "abs_tol": 1e-6, "samples": 61},
            "drift_tolerance": 1e-14}"#,
    );
    let out = cgflow(&["integrate", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn killing_and_gh_checks() {
    let v = json_stdout(&cgflow(&["killing-check", "--model", "cp2", "--field", "psi", "--points", "6"]));
    assert!(v["criterion_max"].as_f64().unwrap() < 1e-12);
    assert!(v["killing_residual"].as_f64().unwrap() < 1e-8);

    let v = json_stdout(&cgflow(&["gh-check", "--model", "taub_nut:1", "--points", "6"]));
    for key in ["killing", "triholomorphic", "monopole", "self_dual_part"] {
        assert!(v[key].as_f64().unwrap() < 1e-8, "{key}: {}", v[key]);
    }
    assert!(v["moment_map"]["residual"].as_f64().unwrap() < 1e-8);
}
