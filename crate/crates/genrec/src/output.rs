//! File outputs: time-series CSV, snapshots, run summary, effective config
//! and an optional plotting script.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use genrec_core::diagnostics::{default_fit_window, fit_decay_rate_with_floor, DecayFit, TimeSeriesRecord};
use genrec_core::GridSpec;

use crate::config::RunConfig;
use crate::run::{simulate, RunReport, Snapshot};
use crate::RunError;

pub const CSV_HEADER: &str = "t,weighted_norm,rho_f_l2,rho_g_l2,entropy,mass_difference,bounds_pass,dt_used,newton_iters";

pub const CSV_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CONFIG_FILE: &str = "config.toml";
pub const PLOT_FILE: &str = "plot.py";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_string(series: &[TimeSeriesRecord]) -> String {
    let mut out = String::with_capacity(200 * (series.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in series {
        let entropy = r.entropy.map(num).unwrap_or_default();
        let iters = r.newton_iterations.map(|n| n.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(r.t),
            num(r.weighted_norm),
            num(r.density_norms.0),
            num(r.density_norms.1),
            entropy,
            num(r.mass_difference),
            u8::from(r.bounds_pass),
            num(r.dt_used),
            iters
        )
        .expect("write to string");
    }
    out
}

/// `(t, weighted_norm)` pairs read back from a CSV produced by [`csv_string`].
pub fn norms_from_csv(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err("unexpected CSV header".into());
    }
    lines
        .map(|line| {
            let mut cols = line.split(',');
            let mut next = || -> Result<f64, String> {
                cols.next().ok_or("short row")?.parse::<f64>().map_err(|e| e.to_string())
            };
            Ok((next()?, next()?))
        })
        .collect()
}

pub fn snapshot_string(snap: &Snapshot, grid: &GridSpec) -> String {
    let (nx, nv) = (grid.nx(), grid.nv());
    let mut out = String::with_capacity(100 * nx * nv);
    writeln!(out, "# t={}", num(snap.t)).expect("write to string");
    writeln!(out, "# N={} L={}", nx, grid.half_nv()).expect("write to string");
    for i in 0..nx {
        for k in 0..nv {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                i,
                grid.label_of(k),
                num(grid.x_centers()[i]),
                num(grid.v_centers()[k]),
                num(snap.state.f.get(i, k)),
                num(snap.state.g.get(i, k))
            )
            .expect("write to string");
        }
    }
    out
}

pub fn snapshot_file_name(index: usize, t: f64) -> String {
    format!("snapshot_{index:03}_t{t:.4}.csv")
}

/// Machine-readable run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub fit: Result<DecayFit, String>,
    pub fit_window: (f64, f64),
    pub initial_norm: f64,
    pub final_norm: f64,
    pub final_time: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub max_mass_drift: f64,
    pub bounds_violations: usize,
    pub f_ratio: (f64, f64),
    pub g_ratio: (f64, f64),
    pub rho_inf: f64,
    pub ledger_kappa: f64,
    pub delta: f64,
    pub wall_clock_seconds: f64,
    pub status: String,
}

impl RunSummary {
    /// Summary of `report`, with the decay fit computed from the emitted CSV.
    pub fn from_report(report: &RunReport, csv: &str, wall_clock_seconds: f64) -> Self {
        let floor = report.config.diagnostics.fit_floor;
        let (fit, window) = match norms_from_csv(csv) {
            Ok(series) => {
                let window = default_fit_window(&series, report.config.time.t_final, floor);
                (fit_decay_rate_with_floor(&series, window, floor).map_err(|e| e.to_string()), window)
            }
            Err(e) => (Err(e), (0.0, 0.0)),
        };
        let fold = |sel: fn(&genrec_core::nonlinear::BoundsReport) -> (f64, f64)| {
            report.bounds.iter().map(sel).fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)))
        };
        RunSummary {
            fit,
            fit_window: window,
            initial_norm: report.series.first().map_or(f64::NAN, |r| r.weighted_norm),
            final_norm: report.series.last().map_or(f64::NAN, |r| r.weighted_norm),
            final_time: report.final_time(),
            steps: report.checks.len(),
            rejected_steps: report.checks.iter().map(|c| c.rejected_dts.len()).sum(),
            max_mass_drift: report.max_mass_drift(),
            bounds_violations: report.bounds.iter().filter(|b| !b.pass).count(),
            f_ratio: fold(|b| (b.f_ratio_min, b.f_ratio_max)),
            g_ratio: fold(|b| (b.g_ratio_min, b.g_ratio_max)),
            rho_inf: report.rho_inf,
            ledger_kappa: report.ledger.kappa,
            delta: report.ledger.delta,
            wall_clock_seconds,
            status: report.failure.clone().map_or_else(|| "completed".into(), |f| format!("failed: {f}")),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").expect("write to string");
        kv("status", self.status.clone());
        match &self.fit {
            Ok(fit) => {
                kv("kappa_fit", num(fit.kappa));
                kv("r_squared", num(fit.r_squared));
                kv("prefactor", num(fit.prefactor));
                kv("fit_points", fit.points.to_string());
            }
            Err(e) => kv("fit_error", e.clone()),
        }
        kv("fit_window_start", num(self.fit_window.0));
        kv("fit_window_end", num(self.fit_window.1));
        kv("initial_norm", num(self.initial_norm));
        kv("final_norm", num(self.final_norm));
        kv("final_time", num(self.final_time));
        kv("steps", self.steps.to_string());
        kv("rejected_steps", self.rejected_steps.to_string());
        kv("max_mass_drift", num(self.max_mass_drift));
        kv("bounds_violations", self.bounds_violations.to_string());
        kv("f_ratio_min", num(self.f_ratio.0));
        kv("f_ratio_max", num(self.f_ratio.1));
        kv("g_ratio_min", num(self.g_ratio.0));
        kv("g_ratio_max", num(self.g_ratio.1));
        kv("rho_inf", num(self.rho_inf));
        kv("ledger_kappa", num(self.ledger_kappa));
        kv("delta", num(self.delta));
        kv("wall_clock_seconds", format!("{:.3}", self.wall_clock_seconds));
        out
    }
}

fn plot_script() -> &'static str {
    r#"import sys
import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else "timeseries.csv")
fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4))
a.semilogy(df["t"], df["weighted_norm"])
a.set_xlabel("t")
a.set_ylabel("weighted norm")
b.semilogy(df["t"], df["rho_f_l2"], label="rho_f")
b.semilogy(df["t"], df["rho_g_l2"], label="rho_g")
b.set_xlabel("t")
b.legend()
fig.tight_layout()
fig.savefig("timeseries.png", dpi=150)
"#
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| RunError::Io { path, source })
}

/// Writes every output of `report` into `dir` and returns the summary.
pub fn emit_outputs(report: &RunReport, dir: &Path, wall_clock_seconds: f64) -> Result<RunSummary, RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.into(), source })?;
    write(dir, CONFIG_FILE, &report.config.to_toml())?;
    let csv = csv_string(&report.series);
    write(dir, CSV_FILE, &csv)?;
    for (q, snap) in report.snapshots.iter().enumerate() {
        write(dir, &snapshot_file_name(q, snap.t), &snapshot_string(snap, &report.grid))?;
    }
    if report.config.emit_plot_script {
        write(dir, PLOT_FILE, plot_script())?;
    }
    let summary = RunSummary::from_report(report, &csv, wall_clock_seconds);
    write(dir, SUMMARY_FILE, &summary.to_text())?;
    Ok(summary)
}

/// Simulates `cfg` and writes its outputs to `cfg.output_dir`. Partial
/// outputs are written before an aborted run is reported as an error.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let report = simulate(cfg)?;
    let summary = emit_outputs(&report, &PathBuf::from(&cfg.output_dir), start.elapsed().as_secs_f64())?;
    match &report.failure {
        Some(f) => Err(RunError::Aborted(f.clone())),
        None => Ok(summary),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use genrec_core::state::build_equilibrium;
    use genrec_core::profile::ProfileKind;

    fn rec(t: f64) -> TimeSeriesRecord {
        TimeSeriesRecord {
            t,
            weighted_norm: (-t).exp(),
            density_norms: (0.1, 0.2),
            entropy: if t > 0.0 { Some(0.5) } else { None },
            mass_difference: 1.0 / 3.0,
            bounds_pass: t > 0.5,
            dt_used: 0.1,
            newton_iterations: None,
        }
    }

    #[test]
    fn csv_layout() {
        let text = csv_string(&[rec(0.0), rec(0.1), rec(1.0)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), 9);
        assert_eq!(lines[1].split(',').nth(4), Some(""));
        assert!(lines[1].ends_with(','));
        assert!(lines[2].contains("3.3333333333333331e-1"));
        let back = norms_from_csv(&text).unwrap();
        assert_eq!(back[2], (1.0, (-1.0f64).exp()));
    }

    #[test]
    fn equilibrium_snapshot_rows_repeat() {
        let grid = GridSpec::new(1.0, 3, 2, 2.0).unwrap();
        let c = ProfileKind::Gaussian.discretize(&grid).unwrap();
        let eq = build_equilibrium(1.4, &c, &c, &grid).unwrap();
        let text = snapshot_string(&Snapshot { t: 0.0, state: eq.f_inf }, &grid);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# t=0.0000000000000000e0");
        assert_eq!(lines[1], "# N=3 L=2");
        assert_eq!(lines.len(), 2 + 3 * 4);
        let block = |i: usize| -> Vec<String> {
            lines[2 + 4 * i..6 + 4 * i].iter().map(|l| l.split(',').skip(3).collect::<Vec<_>>().join(",")).collect()
        };
        assert_eq!(block(0), block(1));
        assert_eq!(block(0), block(2));
        assert!(lines[2].starts_with("0,-1,"));
    }
}
