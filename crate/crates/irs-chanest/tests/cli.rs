//! End-to-end CLI behavior: config loading, overrides, exit codes, output
//! files, and the summary round-trip.

use std::fs;
use std::path::Path;

use irs_chanest::cli::{run, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, OUT_DIR_ENV};

/// A config small enough for fast end-to-end runs.
const SMALL_TOML: &str = r#"
n_samples = 400
trials = 300
energy_grid = [1.0, 4.0]
length_grid = [1, 4]
hist_n1 = [2, 6]
hist_bins = 16

[params]
n1 = 6
n2 = 3
"#;

fn write_small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL_TOML).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn all_happy_path_writes_datasets_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("out");
    let code = run([
        "irs-chanest",
        "all",
        "--config",
        &cfg,
        "--seed",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    for name in [
        "hist_fit_link1_n1_2.csv",
        "hist_fit_link1_n1_6.csv",
        "mse_vs_energy_link1.csv",
        "mse_vs_length_link1.csv",
        "summary.json",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
}

#[test]
fn summary_json_round_trips_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("out");
    let code = run([
        "irs-chanest",
        "all",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);

    let names = [
        "hist_fit_link1_n1_2.csv",
        "hist_fit_link1_n1_6.csv",
        "mse_vs_energy_link1.csv",
        "mse_vs_length_link1.csv",
    ];
    let before: Vec<Vec<u8>> = names
        .iter()
        .map(|n| fs::read(out.join(n)).unwrap())
        .collect();

    // rerunning from the summary alone reproduces every dataset byte for byte
    let summary = out.join("summary.json");
    let code = run(["irs-chanest", "all", "--config", summary.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    for (name, b) in names.iter().zip(before) {
        assert_eq!(
            fs::read(out.join(name)).unwrap(),
            b,
            "{name} changed after summary round-trip"
        );
    }
}

#[test]
fn bad_link_is_usage_error() {
    let code = run(["irs-chanest", "mse-energy", "--config", "defaults", "--link", "4"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "trials = 10\nunknown_key = 1\n").unwrap();
    let code = run(["irs-chanest", "all", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn invalid_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "energy_grid = [4.0, 1.0]\n").unwrap();
    let code = run(["irs-chanest", "mse-energy", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);

    let code = run(["irs-chanest", "hist-fit", "--config", "defaults", "--n1", "0"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn missing_config_file_is_usage_error() {
    let code = run(["irs-chanest", "all", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn hist_fit_honors_n1_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("hist");
    let code = run([
        "irs-chanest",
        "hist-fit",
        "--config",
        &cfg,
        "--n1",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.join("hist_fit_link1_n1_9.csv").exists());
}

#[test]
fn link_override_selects_pipeline_link() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("l2");
    let code = run([
        "irs-chanest",
        "mse-length",
        "--config",
        &cfg,
        "--link",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.join("mse_vs_length_link2.csv").exists());
}

#[test]
fn env_var_supplies_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("from_env");
    std::env::set_var(OUT_DIR_ENV, &out);
    let code = run(["irs-chanest", "hist-fit", "--config", &cfg]);
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(code, EXIT_OK);
    assert!(out.join("hist_fit_link1_n1_6.csv").exists());
}

#[test]
fn fisher_mode_flag_is_recorded_in_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("fm");
    let code = run([
        "irs-chanest",
        "hist-fit",
        "--config",
        &cfg,
        "--fisher-mode",
        "complex",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let body = fs::read_to_string(out.join("hist_fit_link1_n1_6.csv")).unwrap();
    assert!(body.contains("# fisher_mode: complex"));

    let code = run([
        "irs-chanest",
        "hist-fit",
        "--config",
        &cfg,
        "--fisher-mode",
        "sideways",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, b"x").unwrap();
    let code = run([
        "irs-chanest",
        "all",
        "--config",
        &cfg,
        "--out",
        blocker.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_RUNTIME);
}

#[test]
fn validate_passes_end_to_end() {
    let code = run(["irs-chanest", "validate", "--seed", "0"]);
    assert_eq!(code, EXIT_OK);
}
