use std::fs;
use std::path::Path;
use std::process::Command;

use ion_nmpm_cli::commands::{self, fig1_panels, sweep_rows};
use ion_nmpm_cli::config::Output;
use ion_nmpm_cli::{RunConfig, CSV_HEADER};

fn small(dir: &Path) -> RunConfig {
    RunConfig {
        fock_cutoff: 64,
        alpha: 2.0,
        tau_max: 4.0,
        tau_steps: 41,
        out_dir: dir.to_path_buf(),
        sweep_lambda: vec![0.1, 0.3],
        sweep_eta: vec![0.1],
        sweep_alpha: vec![1.5, 2.0],
        ..RunConfig::default()
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ion-nmpm"))
}

#[test]
fn config_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let path = dir.path().join("run.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
}

#[test]
fn fig1_writes_one_csv_and_svg_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let written = commands::fig1(&cfg).unwrap();
    assert_eq!(written.len(), 2 * cfg.fig1_lambdas.len());
    for label in ["0.1", "0.2", "0.3", "0.4"] {
        let csv = fs::read_to_string(dir.path().join(format!("fig1_lambda{label}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), cfg.tau_steps);
        let svg = fs::read_to_string(dir.path().join(format!("fig1_lambda{label}.svg"))).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        for name in ["perturbative", "small-rotation", "exact"] {
            assert!(svg.contains(&format!(">{name}</text>")), "{name} missing from legend");
        }
    }
}

#[test]
fn csv_output_is_bit_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        commands::fig1(&small(d.path())).unwrap();
        commands::sweep(&small(d.path())).unwrap();
    }
    for f in ["fig1_lambda0.3.csv", "fig1_lambda0.3.svg", "sweep.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_row_count_matches_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { sweep_tau: vec![0.5, 1.0, 2.0], ..small(dir.path()) };
    commands::sweep(&cfg).unwrap();
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let expected = cfg.sweep_lambda.len() * cfg.sweep_eta.len() * cfg.sweep_alpha.len() * cfg.sweep_tau.len();
    assert_eq!(csv.lines().count(), expected + 1);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(',')), "no row should carry an error");
}

#[test]
fn singleton_sweep_matches_fig1_point() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(dir.path());
    let panels = fig1_panels(&RunConfig { fig1_lambdas: vec![0.2], ..base.clone() }).unwrap();
    let row = panels[0].rows[17];
    let cfg = RunConfig {
        sweep_lambda: vec![0.2],
        sweep_eta: vec![base.eta],
        sweep_alpha: vec![base.alpha],
        sweep_tau: vec![row.tau],
        ..base
    };
    let rows = sweep_rows(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let swept = rows[0].result.as_ref().unwrap();
    assert_eq!(swept.csv_fields(), row.csv_fields());
}

#[test]
fn sweep_reports_failing_points_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { sweep_alpha: vec![2.0, 40.0], sweep_tau: vec![1.0], ..small(dir.path()) };
    let rows = sweep_rows(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().filter(|r| r.alpha == 40.0).all(|r| r.result.is_err()));
    assert!(rows.iter().filter(|r| r.alpha == 2.0).all(|r| r.result.is_ok()));
}

#[test]
fn evolve_fock_state_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        initial: ion_nmpm_cli::config::InitialKind::FockExcited,
        initial_n: 1,
        fock_cutoff: 32,
        outputs: [Output::Csv, Output::DeviationReport].into_iter().collect(),
        ..small(dir.path())
    };
    commands::evolve(&cfg).unwrap();
    let csv = fs::read_to_string(dir.path().join("evolve.csv")).unwrap();
    assert_eq!(csv.lines().count(), cfg.tau_steps + 1);
    assert!(dir.path().join("deviation_report.csv").exists());
    assert!(!dir.path().join("evolve.svg").exists());
}

#[test]
fn binary_applies_flags_over_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "lambda = 0.3\neta = 0.05\n").unwrap();
    let out = bin().args(["--config", path.to_str().unwrap(), "--eta", "0.2", "--print-config"]).output().unwrap();
    assert!(out.status.success());
    let cfg = RunConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!((cfg.lambda, cfg.eta), (0.3, 0.2));
}

#[test]
fn binary_rejects_invalid_input_with_status_2() {
    let out = bin().args(["fig1", "--order", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("order"));
}

#[test]
fn binary_validate_passes_hard_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["validate", "--out-dir", dir.path().to_str().unwrap()]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("0 hard failures"));
    assert!(dir.path().join("deviation_report.csv").exists());
}
