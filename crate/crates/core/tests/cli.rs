//! Command-line behavior: exit codes, output layout and configuration hashing.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE: &str = r#"
[surface]
n = 2
delta = -1.0
rho0 = 0.8
perturbation = [{ basis = "harmonic", l = 3, m = 0, amplitude = 0.04 }]

[experiment]
r = 1
seed = 3

[quadrature]
quad_order = 12
quad_order_check = 24
fit_order = 8
hausdorff_order = 8

[calibration]
samples = 10000
"#;

fn starpinch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starpinch")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &[&str], config: &Path, out: &Path) -> Output {
    let mut args = cmd.to_vec();
    args.extend(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    starpinch(&args)
}

fn header_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key}: ")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .to_string()
}

#[test]
fn report_succeeds_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let out = run(&["report"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("o/report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["header"]["command"], "report");
    assert_eq!(v["header"]["seed"], 3);
    assert_eq!(v["header"]["config_hash"].as_str().unwrap().len(), 64);
    // inward normal
    assert_eq!(v["body"]["support_sign"], -1);
    assert_eq!(v["body"]["mean_curvatures"].as_array().unwrap().len(), 2);
}

#[test]
fn geodesic_sphere_reports_vanishing_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &BASE.replace("amplitude = 0.04", "amplitude = 0.0"));
    let out = run(&["report"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(v["body"]["eps_identically_zero"], true);
}

#[test]
fn not_starshaped_exits_with_hypothesis_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = BASE
        .replace("delta = -1.0", "delta = 0.0")
        .replace("l = 3, m = 0, amplitude = 0.04", "l = 2, m = 0, amplitude = 3.0");
    let cfg = write_config(dir.path(), "c.toml", &text);
    for cmd in ["report", "pinch"] {
        let out = run(&[cmd], &cfg, &dir.path().join("o"));
        assert_eq!(out.status.code(), Some(1), "{cmd}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("not starshaped") && err.contains("node"), "{err}");
    }
}

#[test]
fn non_convex_surface_fails_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let text = BASE
        .replace("delta = -1.0", "delta = 0.0")
        .replace("l = 3, m = 0, amplitude = 0.04", "l = 4, m = 2, amplitude = 0.2");
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = run(&["report"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn configuration_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write_config(dir.path(), "k.toml", &BASE.replace("seed = 3", "seed = 3\nsede = 4"));
    let out = run(&["report"], &bad_key, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sede") && err.contains("line"), "{err}");

    let bad_order = write_config(dir.path(), "q.toml", &BASE.replace("quad_order_check = 24", "quad_order_check = 20"));
    let out = run(&["pinch"], &bad_order, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("quadrature.quad_order_check"));

    let cfg = write_config(dir.path(), "c.toml", BASE);
    let out = run(&["scaling"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3), "missing amplitudes");
    let out = run(&["scaling", "--amplitudes", "0.01,0.02"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3), "increasing amplitudes");

    assert_eq!(starpinch(&["pinch"]).status.code(), Some(3), "missing --config");
    assert_eq!(starpinch(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(
        starpinch(&["calibrate", "--n", "3", "--r", "1", "--samples", "99"]).status.code(),
        Some(3)
    );
    assert_eq!(
        starpinch(&["calibrate", "--n", "3", "--r", "3", "--out", dir.path().to_str().unwrap()]).status.code(),
        Some(3)
    );
    assert_eq!(starpinch(&["--help"]).status.code(), Some(0));
}

#[test]
fn identities_pass_and_flipped_sign_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let out = run(&["identities", "--order-sweep"], &cfg, &dir.path().join("a"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("a/identities.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "name,value,tolerance,refinement_error,pass"));
    assert!(csv.lines().any(|l| l.starts_with("hsiung_minkowski_k1,") && l.ends_with(",true")));
    let sweep = std::fs::read_to_string(dir.path().join("a/identities_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().filter(|l| l.starts_with("32,")).count(), 3);

    let out = run(&["identities", "--flip-sign"], &cfg, &dir.path().join("b"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hsiung_minkowski") && err.contains("flipped"), "{err}");
    let flipped = std::fs::read_to_string(dir.path().join("b/identities.csv")).unwrap();
    assert_ne!(header_value(&csv, "config_hash"), header_value(&flipped, "config_hash"));
}

#[test]
fn pinch_and_scaling_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let out = run(&["pinch"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/pinch.json")).unwrap()).unwrap();
    let body = &v["body"];
    assert!(body["dH"].as_f64().unwrap() > 0.0);
    assert_eq!(body["gate"]["structural_pass"], true);
    assert!(body["constants"]["K1"].as_f64().unwrap() > 0.0);
    assert!(v["header"]["constants_provenance"]["c_n"].as_str().unwrap().starts_with("calibrated"));

    let out = run(&["scaling", "--amplitudes", "0.04,0.02,0.01"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/scaling.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# command: scaling"));
    let col = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    assert_eq!(lines[col], "amplitude,eps_l1,eps_linf,tau_l2,tau_lnp1,R0,B_sup,rho0,dH,bound,applicable");
    assert_eq!(lines[col + 1..].iter().filter(|l| !l.starts_with('#')).count(), 3);
    assert!(lines.iter().any(|l| l.starts_with("# regression ln dH")));
}

#[test]
fn hash_ignores_output_dir_and_tracks_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    run(&["report"], &cfg, &dir.path().join("a"));
    run(&["report"], &cfg, &dir.path().join("b"));
    let a = std::fs::read(dir.path().join("a/report.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(a, b);

    let out = run(&["report", "--seed", "8", "--quad-order", "16"], &cfg, &dir.path().join("c"));
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c/report.json")).unwrap()).unwrap();
    let w: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["header"]["seed"], 8);
    assert_eq!(v["body"]["quad_order"], 16);
    assert_eq!(v["body"]["quad_order_check"], 32);
    assert_ne!(v["header"]["config_hash"], w["header"]["config_hash"]);
}

#[test]
fn calibration_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = starpinch(&[
        "calibrate", "--n", "2", "--r", "1", "--samples", "10000", "--seed", "5", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("calibration.toml")).unwrap();
    assert!(text.starts_with("# command: calibrate"));
    let cal = starpinch::symfun::Calibration::from_toml(&text).unwrap();
    assert_eq!((cal.n, cal.r, cal.seed, cal.samples), (2, 1, 5, 10_000));

    let cfg = write_config(
        dir.path(),
        "c.toml",
        &BASE.replace("[calibration]\nsamples = 10000", "[calibration]\nfile = \"calibration.toml\""),
    );
    let out = run(&["pinch"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/pinch.json")).unwrap()).unwrap();
    assert_eq!(v["body"]["constants"]["c_n"].as_f64().unwrap(), cal.c_n);

    // a calibration for other (n, r) is a configuration error
    let out = starpinch(&[
        "calibrate", "--n", "3", "--r", "2", "--samples", "10000", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["pinch"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3));
}
