use std::fs;
use std::process::Command;

use genrec::config::{FluxName, Overrides, RawConfig};
use genrec::output::{csv_string, norms_from_csv, CONFIG_FILE, CSV_FILE, SUMMARY_FILE};
use genrec::{run_experiment, simulate};
use genrec_core::diagnostics::{default_fit_window, fit_decay_rate_with_floor, TimeSeriesRecord};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_genrec"))
}

fn small(test: u8, flux: FluxName, out: &str) -> genrec::RunConfig {
    let o = Overrides {
        test: Some(test),
        flux: Some(flux),
        nx: Some(21),
        half_nv: Some(4),
        t_final: Some(5.0),
        snapshots: Some(vec![0.0, 1.0, 5.0]),
        output_dir: Some(out.into()),
        ..Overrides::default()
    };
    RawConfig::default().resolve(&o).unwrap()
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap_or_else(|| panic!("{key} missing")).to_string()
}

#[test]
fn summary_rate_is_the_fit_of_the_written_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(1, FluxName::LaxFriedrichs, &dir.path().display().to_string());
    let summary = run_experiment(&cfg).unwrap();
    let csv = fs::read_to_string(dir.path().join(CSV_FILE)).unwrap();
    let series = norms_from_csv(&csv).unwrap();
    let window = default_fit_window(&series, cfg.time.t_final, cfg.diagnostics.fit_floor);
    let fit = fit_decay_rate_with_floor(&series, window, cfg.diagnostics.fit_floor).unwrap();
    assert_eq!(summary.fit.clone().unwrap(), fit);
    let text = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary_value(&text, "kappa_fit").parse::<f64>().unwrap(), fit.kappa);
    assert_eq!(summary_value(&text, "status"), "completed");
    let snaps = fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("snapshot_")).count();
    assert_eq!(snaps, 3);
}

#[test]
fn nonlinear_runs_are_deterministic() {
    let a = simulate(&small(4, FluxName::Upwind, "unused")).unwrap();
    let b = simulate(&small(4, FluxName::Upwind, "unused")).unwrap();
    assert!(a.failure.is_none());
    assert_eq!(csv_string(&a.series), csv_string(&b.series));
    assert_eq!(a.snapshots, b.snapshots);
}

#[test]
fn printed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = bin()
        .args(["--test", "2", "--flux", "upwind", "--nx", "11", "--nv", "3", "--tfinal", "2", "--snapshots", "0,2", "--out"])
        .arg(&first)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("kappa_fit="));

    let written = fs::read_to_string(first.join(CONFIG_FILE)).unwrap();
    let cfg_path = dir.path().join("cfg.toml");
    fs::write(&cfg_path, &written).unwrap();
    let printed = bin().arg("--config").arg(&cfg_path).arg("--print-config").output().unwrap();
    assert!(printed.status.success());
    assert_eq!(String::from_utf8(printed.stdout).unwrap(), written);

    let second = dir.path().join("second");
    let rerun = bin().arg("--config").arg(&cfg_path).arg("--out").arg(&second).output().unwrap();
    assert!(rerun.status.success());
    assert_eq!(fs::read(first.join(CSV_FILE)).unwrap(), fs::read(second.join(CSV_FILE)).unwrap());
}

#[test]
fn invalid_input_is_rejected() {
    let even = bin().args(["--test", "1", "--nx", "10", "--print-config"]).output().unwrap();
    assert_eq!(even.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&even.stderr).contains("nx"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "test = 1\nunknown_key = 3\n").unwrap();
    let bad = bin().arg("--config").arg(&path).arg("--print-config").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_norms_round_trip(values in proptest::collection::vec((0.0f64..1e3, 1e-300f64..1e300), 1..40)) {
        let series: Vec<TimeSeriesRecord> = values
            .iter()
            .map(|&(t, n)| TimeSeriesRecord {
                t,
                weighted_norm: n,
                density_norms: (n, n),
                entropy: None,
                mass_difference: 0.0,
                bounds_pass: true,
                dt_used: 0.1,
                newton_iterations: Some(2),
            })
            .collect();
        let back = norms_from_csv(&csv_string(&series)).unwrap();
        prop_assert_eq!(back, values);
    }
}
