use std::path::{Path, PathBuf};
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_paradiff");

const ENERGY: &str = r#"
experiment = "energy-monitor"

[grid]
dim = 1
cutoff = 8

[model]
density = "flagship"
sobolev = 4.0

[[initial.modes]]
k = [1]
re = 0.1

[time]
horizon = 0.02
dt = 0.001

[diagonalize]
every = 5
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("energy.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn selftest_prints_suite_counts() {
    let out = Command::new(BIN).args(["selftest", "--seed", "4"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    for suite in ["torus_spectral", "symbol_algebra", "paradiff", "nls_model", "diagonalize", "evolve"] {
        assert!(v["suites"][suite]["passed"].as_u64().unwrap() >= 1, "{suite}");
    }
}

#[test]
fn run_then_emit_plots() {
    let dir = scratch("cli_run");
    let cfg = write_config(&dir, ENERGY);
    let out_dir = dir.join("out");
    let st = Command::new(BIN)
        .args(["--jobs", "2", "run"])
        .arg(&cfg)
        .arg("--output")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(st.success());
    for f in ["energy.csv", "diagnostics.csv", "run.csv", "iterates.csv", "summary.json", "manifest.json", "timing.json"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["config"].as_str().unwrap().contains("energy-monitor"));
    assert!(manifest.get("unix_time").is_none());

    let st = Command::new(BIN).arg("emit-plots").arg(&out_dir).status().unwrap();
    assert!(st.success());
    let energy = std::fs::read(out_dir.join("energy.csv")).unwrap();
    assert_eq!(std::fs::read(out_dir.join("plot_energy.csv")).unwrap(), energy);
    let tidy = std::fs::read_to_string(out_dir.join("plot_run.csv")).unwrap();
    assert!(tidy.starts_with("series,t,value\n"));
    assert!(tidy.contains("hamiltonian_drift,"));
}

#[test]
fn output_root_env_and_overrides() {
    let dir = scratch("cli_env");
    let cfg = write_config(&dir, ENERGY);
    let root = dir.join("root");
    let out = Command::new(BIN)
        .env("PARADIFF_OUTPUT_ROOT", &root)
        .arg("run")
        .arg(&cfg)
        .args(["--override", "experiment=\"picard\"", "--override", "time.dt=0.002"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = root.join("energy");
    assert!(run_dir.join("iterates.csv").exists());
    assert!(!run_dir.join("energy.csv").exists());
    let iterates = std::fs::read_to_string(run_dir.join("iterates.csv")).unwrap();
    assert!(iterates.starts_with("n,delta_norm,sup_norm,contraction_ratio\n"));
}

#[test]
fn bad_config_names_the_field() {
    let dir = scratch("cli_bad");
    let cfg = write_config(&dir, ENERGY);
    let out = Command::new(BIN).arg("run").arg(&cfg).args(["--override", "model.epsilon=0.3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.epsilon") && err.contains("(0, 1/4)"), "{err}");

    let out = Command::new(BIN).arg("run").arg(dir.join("missing.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
