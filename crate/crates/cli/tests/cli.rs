//! End-to-end checks of scenario parsing, validation, the run pipeline, and
//! the reproducibility contract.

use cbs_cli::config::ScenarioConfig;
use cbs_cli::scenario::run_scenario;
use std::path::Path;
use std::process::Command;

const BASE: &str = r#"
[medium]
model = "schroedinger"
dispersion = "quadratic"

[medium.geometry]
kind = "ball"
radius = 1.0

[medium.covariance]
kind = "gaussian"
amplitude = 0.5
scale = 1.0

[source]
k = [0.0, 0.0, 1.0]

[run]
paths = 20000
seed = 7
workers = 1

[[target]]
kind = "sigma_histogram"
bands = 4
sectors = 4

[[target]]
kind = "peak"
kappas = [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]

[[target]]
kind = "diffusion_compare"
kappa_ell = [0.0, 0.5, 1.0]
"#;

fn parse(text: &str) -> Result<ScenarioConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

#[test]
fn base_scenario_parses_and_validates() {
    let cfg = parse(BASE).unwrap();
    let v = cfg.validate().unwrap();
    assert_eq!(v.targets.len(), 3);
    assert!(v.warnings.is_empty());
}

#[test]
fn unknown_keys_are_rejected_with_location() {
    let text = BASE.replace("seed = 7", "seed = 7\nbogus_knob = 1");
    let err = parse(&text).unwrap_err();
    assert!(err.contains("bogus_knob"), "{err}");
    // The TOML error carries a line/column span.
    assert!(err.contains("line"), "{err}");
}

#[test]
fn duplicate_keys_are_rejected_with_line() {
    let text = BASE.replace("seed = 7", "seed = 7\nseed = 9");
    let err = parse(&text).unwrap_err();
    assert!(err.contains("duplicate"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn misspelled_enum_value_is_rejected() {
    let text = BASE.replace("\"gaussian\"", "\"gausian\"");
    let err = parse(&text).unwrap_err();
    assert!(err.contains("gausian") || err.contains("unknown variant"), "{err}");
}

#[test]
fn all_validation_errors_are_reported_together() {
    let text = BASE
        .replace("radius = 1.0", "radius = -1.0")
        .replace("paths = 20000", "paths = 0")
        .replace("amplitude = 0.5", "amplitude = -0.5");
    let cfg = parse(&text).unwrap();
    let err = format!("{}", cfg.validate().unwrap_err());
    assert!(err.contains("radius"), "{err}");
    assert!(err.contains("paths"), "{err}");
    assert!(err.contains("amplitude"), "{err}");
}

#[test]
fn non_transverse_kappa_is_an_error() {
    let text = BASE.replace("[0.5, 0.0, 0.0]", "[0.5, 0.0, 0.1]");
    let cfg = parse(&text).unwrap();
    let err = format!("{}", cfg.validate().unwrap_err());
    assert!(err.contains("transverse"), "{err}");
}

#[test]
fn nearly_transverse_kappa_is_projected_with_a_warning() {
    let text = BASE.replace("[0.5, 0.0, 0.0]", "[0.5, 0.0, 1.0e-11]");
    let cfg = parse(&text).unwrap();
    let v = cfg.validate().unwrap();
    assert_eq!(v.warnings.len(), 1);
    assert!(v.warnings[0].contains("projected"), "{}", v.warnings[0]);
}

#[test]
fn off_shell_nee_direction_is_an_error() {
    let text = format!(
        "{BASE}\n[[target]]\nkind = \"sigma_nee\"\ndirections = [[2.0, 0.0, 0.0]]\n"
    );
    let cfg = parse(&text).unwrap();
    let err = format!("{}", cfg.validate().unwrap_err());
    assert!(err.contains("shell"), "{err}");
}

#[test]
fn wave_model_requires_linear_dispersion() {
    let text = BASE.replace("\"schroedinger\"", "\"wave\"");
    let cfg = parse(&text).unwrap();
    let err = format!("{}", cfg.validate().unwrap_err());
    assert!(err.contains("linear"), "{err}");
}

fn run_into(text: &str, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let cfg = parse(text).unwrap();
    let v = cfg.validate().unwrap();
    let (_, files) = run_scenario(&v, text, dir).unwrap();
    let mut out: Vec<(String, Vec<u8>)> = files
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn run_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let files = run_into(BASE, dir.path());
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["00_sigma_histogram.csv", "01_peak.csv", "02_diffusion_compare.csv"]);
    assert!(dir.path().join("manifest.json").exists());
    // Every CSV has a header and at least one data row.
    for (name, bytes) in &files {
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.lines().count() >= 2, "{name} has no data rows");
    }
}

#[test]
fn manifest_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    run_into(BASE, dir.path());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["paths"], 20000);
    assert_eq!(manifest["batch_size"], 16384);
    assert_eq!(manifest["n_batches"], 2);
    assert_eq!(manifest["targets"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    // Monte Carlo targets carry path statistics, deterministic ones do not.
    assert!(manifest["targets"][0]["stats"]["n_paths"] == 20000);
    assert!(manifest["targets"][2].get("stats").is_none());
}

#[test]
fn reruns_are_byte_identical() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    assert_eq!(run_into(BASE, d1.path()), run_into(BASE, d2.path()));
}

#[test]
fn worker_count_does_not_change_the_bytes() {
    // paths = 20000 spans two batches, so splitting across workers is real.
    let reference = {
        let d = tempfile::tempdir().unwrap();
        run_into(BASE, d.path())
    };
    for workers in [4, 8] {
        let text = BASE.replace("workers = 1", &format!("workers = {workers}"));
        let d = tempfile::tempdir().unwrap();
        assert_eq!(
            run_into(&text, d.path()),
            reference,
            "output changed with {workers} workers"
        );
    }
}

#[test]
fn changing_the_seed_changes_monte_carlo_output() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let a = run_into(BASE, d1.path());
    let b = run_into(&BASE.replace("seed = 7", "seed = 8"), d2.path());
    assert_ne!(a[0], b[0], "histogram should depend on the seed");
    // The deterministic quadrature target must not.
    assert_eq!(a[2], b[2]);
}

fn cbs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cbs"))
}

#[test]
fn binary_exit_codes() {
    // Missing scenario file: i/o failure.
    let out = cbs().args(["run", "/nonexistent/scenario.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, BASE.replace("radius = 1.0", "radius = -1.0")).unwrap();
    let out = cbs().args(["run"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius"));

    let good = dir.path().join("good.toml");
    std::fs::write(&good, BASE.replace("paths = 20000", "paths = 1000")).unwrap();
    let out_dir = dir.path().join("out");
    let out = cbs().args(["run"]).arg(&good).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn out_dir_env_var_is_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, BASE.replace("paths = 20000", "paths = 1000")).unwrap();
    let out_dir = dir.path().join("from_env");
    let out = cbs()
        .args(["run"])
        .arg(&cfg)
        .env("CBS_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn cli_flag_overrides_take_effect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, BASE).unwrap();
    let out_dir = dir.path().join("out");
    let out = cbs()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--seed", "99", "--paths", "1000", "--workers", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["paths"], 1000);
    assert_eq!(manifest["workers"], 2);
}
