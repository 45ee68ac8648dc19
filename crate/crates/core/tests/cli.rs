use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use wodzicki::algebra::{Deformation, TorusElement};
use wodzicki::config::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wodzicki"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn compute(path: &Path, extra: &[&str]) -> Output {
    bin().arg("compute").arg("--config").arg(path).args(extra).output().unwrap()
}

fn value(out: &Output) -> (Complex64, serde_json::Value) {
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let v = &json["value"];
    (Complex64::new(v["re"].as_f64().unwrap(), v["im"].as_f64().unwrap()), json)
}

#[test]
fn compute_nc2_metric_matches_trace_formula() {
    let out = compute(&config("nc2_metric.toml"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (got, json) = value(&out);

    let d = Deformation::two_torus(0.7071067811865476);
    let cos = |k: &[i32], a: f64| {
        let e = TorusElement::monomial(&d, k);
        (&e + &e.adjoint()).scale_real(a)
    };
    let h = &(&TorusElement::one(&d) + &cos(&[1, 0], 0.1)) + &cos(&[0, 1], 0.05);
    let vw = Complex64::new(0.3, 0.0) + Complex64::new(0.5, 0.0) * Complex64::new(-1.0, 0.2);
    let want = h.pow(4).trace() * PI * vw;
    assert!((got - want).norm() < 1e-9 * want.norm(), "{got} vs {want}");

    // Defaults are spelled out in the report.
    let cfg = &json["meta"]["config"];
    assert!(cfg["settings"]["inversion_tol"].is_number());
    assert_eq!(cfg["functional"]["ordering"], "right");
}

#[test]
fn compute_einstein_vanishes_on_nc2() {
    let out = compute(&config("nc2_einstein.toml"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(value(&out).0.norm() < 1e-12);
}

#[test]
fn depth_and_tolerance_flags_reach_the_report() {
    let out = compute(&config("nc2_metric.toml"), &["--depth", "4", "--tol", "1e-13"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, json) = value(&out);
    assert_eq!(json["meta"]["depth"], 4);
    assert_eq!(json["meta"]["config"]["settings"]["inversion_tol"], 1e-13);
}

#[test]
fn every_shipped_config_parses_and_runs() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = RunConfig::from_toml(&text).unwrap();
        let report = cfg.execute().unwrap();
        assert!(report.value.re.is_finite() && report.value.im.is_finite(), "{}", path.display());
    }
}

#[test]
fn non_skew_theta_is_a_config_error() {
    let text = std::fs::read_to_string(config("nc2_metric.toml"))
        .unwrap()
        .replace("theta = 0.7071067811865476", "theta = [[0.0, 0.5], [0.5, 0.0]]");
    let out = compute(&scratch("bad_theta.toml", &text), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_fields_and_missing_files_are_config_errors() {
    let text = std::fs::read_to_string(config("nc2_metric.toml")).unwrap().replace("[functional]", "[functional]\nspeed = 3");
    assert_eq!(compute(&scratch("unknown_field.toml", &text), &[]).status.code(), Some(2));
    assert_eq!(compute(Path::new("/nonexistent/run.toml"), &[]).status.code(), Some(2));
}

#[test]
fn factor_with_zero_in_spectrum_is_a_numerical_error() {
    // h = cos x₁ vanishes on a line.
    let text = r#"
dimension = 2
theta = 0.7071067811865476

[operator]
kind = "conformal-laplacian"
factor = [{ k = [1, 0], re = 0.5 }, { k = [-1, 0], re = 0.5 }]

[functional]
kind = "metric"

[v]
components = [[{ k = [0, 0], re = 1.0 }], []]

[w]
components = [[{ k = [0, 0], re = 1.0 }], []]
"#;
    let out = compute(&scratch("singular.toml", text), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stderr.is_empty());
}

#[test]
fn verify_exit_codes() {
    let out = bin().args(["verify", "nc2-metric"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS  1 nc2-metric"));

    let out = bin().args(["verify", "nc2-einstein-vanishing", "--json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json[0]["suite"], "nc2-einstein-vanishing");
    assert!(json[0]["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));

    assert_eq!(bin().args(["verify", "no-such-suite"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn failing_suite_exits_nonzero() {
    let out = bin().args(["verify", "nc4-laplacian"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("FAIL  3 nc4-laplacian"));
}
