//! Run configuration: per-test presets, a partial TOML layer on top of them,
//! command-line overrides and validation.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use genrec_core::flux::default_lambda;
use genrec_core::profile::ProfileKind;
use genrec_core::GridSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {field}: {message}")]
    Validation { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FluxName {
    LaxFriedrichs,
    Centered,
    Upwind,
}

/// Initial data presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    /// Gaussian bumps centred at `pi/2` (tests 1 and 2).
    Bump,
    /// `chi_M v^4 (1 + cos 2x)` against a modulated bump (test 3).
    Smooth,
    /// Seeded uniform random values in `(0, 1)` (test 4).
    Random,
    /// `rho chi1 (1 + 0.15 a)`, `chi2 / rho (1 + 0.15 b)` with `|a|, |b| <= 1`.
    NearEquilibrium,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Nonlinear => "nonlinear",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub torus_length: f64,
    pub nx: usize,
    /// `L`: the velocity grid has `2L` cells.
    pub half_nv: usize,
    pub v_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub kind: FluxName,
    /// Lax–Friedrichs diffusion; resolved to `max(v*/2, dx/(2 dt_initial))`
    /// when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    /// `gaussian`, `heavytail`, `oscillating` or `file:<path>` (one sample per
    /// velocity cell, one per line).
    pub chi1: String,
    pub chi2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt_initial: f64,
    pub dt_max: f64,
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSettings {
    pub tol_residual: f64,
    pub max_iterations: usize,
    pub mass_drift_tol: f64,
    /// Accepted steps within this many iterations double the step.
    pub iteration_budget: usize,
    pub dt_min: f64,
    /// Evaluate the collision term on envelope-clamped states.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub delta_fraction: f64,
    /// Envelope half-widths `gamma1 = gamma2 = envelope_fraction * rho_inf`.
    pub envelope_fraction: f64,
    pub fit_floor: f64,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub test: u8,
    pub model: Model,
    pub initial: InitialData,
    pub seed: u64,
    pub output_dir: String,
    pub emit_plot_script: bool,
    pub grid: GridConfig,
    pub flux: FluxConfig,
    pub profiles: ProfileConfig,
    pub time: TimeConfig,
    pub newton: NewtonSettings,
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    torus_length: Option<f64>,
    nx: Option<usize>,
    half_nv: Option<usize>,
    v_star: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlux {
    kind: Option<FluxName>,
    lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfiles {
    chi1: Option<String>,
    chi2: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt_initial: Option<f64>,
    dt_max: Option<f64>,
    t_final: Option<f64>,
    snapshot_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNewton {
    tol_residual: Option<f64>,
    max_iterations: Option<usize>,
    mass_drift_tol: Option<f64>,
    iteration_budget: Option<usize>,
    dt_min: Option<f64>,
    truncated: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    delta_fraction: Option<f64>,
    envelope_fraction: Option<f64>,
    fit_floor: Option<f64>,
}

/// A configuration file: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    test: Option<u8>,
    model: Option<Model>,
    initial: Option<InitialData>,
    seed: Option<u64>,
    output_dir: Option<String>,
    emit_plot_script: Option<bool>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    flux: RawFlux,
    #[serde(default)]
    profiles: RawProfiles,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    newton: RawNewton,
    #[serde(default)]
    diagnostics: RawDiagnostics,
}

/// Command-line overrides, applied after the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub test: Option<u8>,
    pub flux: Option<FluxName>,
    pub model: Option<Model>,
    pub nx: Option<usize>,
    pub half_nv: Option<usize>,
    pub v_star: Option<f64>,
    pub dt: Option<f64>,
    pub dt_max: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub snapshots: Option<Vec<f64>>,
    pub emit_plot_script: bool,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = Some(v);
                }
            };
        }
        set!(self.test, o.test);
        set!(self.flux.kind, o.flux);
        set!(self.model, o.model);
        set!(self.grid.nx, o.nx);
        set!(self.grid.half_nv, o.half_nv);
        set!(self.grid.v_star, o.v_star);
        set!(self.time.dt_initial, o.dt);
        set!(self.time.dt_max, o.dt_max);
        set!(self.time.t_final, o.t_final);
        set!(self.seed, o.seed);
        set!(self.output_dir, o.output_dir);
        set!(self.time.snapshot_times, o.snapshots);
        if o.emit_plot_script {
            self.emit_plot_script = Some(true);
        }
    }

    /// Fills unset keys from the preset of `test` (default 1) and validates.
    pub fn resolve(self, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
        let mut raw = self;
        raw.apply(overrides);
        let test = raw.test.unwrap_or(1);
        let p = preset(test)?;
        let model = raw.model.unwrap_or(p.model);
        let grid = GridConfig {
            torus_length: raw.grid.torus_length.unwrap_or(p.grid.torus_length),
            nx: raw.grid.nx.unwrap_or(p.grid.nx),
            half_nv: raw.grid.half_nv.unwrap_or(p.grid.half_nv),
            v_star: raw.grid.v_star.unwrap_or(p.grid.v_star),
        };
        let dt_initial = raw.time.dt_initial.unwrap_or(match model {
            Model::Linear => 0.1,
            Model::Nonlinear => 1e-3,
        });
        let dt_max = raw.time.dt_max.unwrap_or(match model {
            Model::Linear => dt_initial,
            Model::Nonlinear => 0.3_f64.max(dt_initial),
        });
        let snapshot_times = raw.time.snapshot_times.unwrap_or(p.time.snapshot_times);
        let t_final = raw
            .time
            .t_final
            .unwrap_or_else(|| snapshot_times.iter().copied().fold(0.0, f64::max));
        let kind = raw.flux.kind.unwrap_or(p.flux.kind);
        let mut cfg = RunConfig {
            test,
            model,
            initial: raw.initial.unwrap_or(p.initial),
            seed: raw.seed.unwrap_or(p.seed),
            output_dir: raw.output_dir.unwrap_or_else(|| format!("runs/test{test}-{}-{}", model, flux_label(kind))),
            emit_plot_script: raw.emit_plot_script.unwrap_or(false),
            grid,
            flux: FluxConfig { kind, lambda: raw.flux.lambda },
            profiles: ProfileConfig {
                chi1: raw.profiles.chi1.unwrap_or(p.profiles.chi1),
                chi2: raw.profiles.chi2.unwrap_or(p.profiles.chi2),
            },
            time: TimeConfig { dt_initial, dt_max, t_final, snapshot_times },
            newton: NewtonSettings {
                tol_residual: raw.newton.tol_residual.unwrap_or(p.newton.tol_residual),
                max_iterations: raw.newton.max_iterations.unwrap_or(p.newton.max_iterations),
                mass_drift_tol: raw.newton.mass_drift_tol.unwrap_or(p.newton.mass_drift_tol),
                iteration_budget: raw.newton.iteration_budget.unwrap_or(p.newton.iteration_budget),
                dt_min: raw.newton.dt_min.unwrap_or(p.newton.dt_min.min(dt_initial)),
                truncated: raw.newton.truncated.unwrap_or(p.newton.truncated),
            },
            diagnostics: DiagnosticsConfig {
                delta_fraction: raw.diagnostics.delta_fraction.unwrap_or(p.diagnostics.delta_fraction),
                envelope_fraction: raw.diagnostics.envelope_fraction.unwrap_or(p.diagnostics.envelope_fraction),
                fit_floor: raw.diagnostics.fit_floor.unwrap_or(p.diagnostics.fit_floor),
            },
        };
        cfg.validate()?;
        if cfg.flux.kind == FluxName::LaxFriedrichs && cfg.flux.lambda.is_none() {
            cfg.flux.lambda = Some(default_lambda(&cfg.grid_spec()?, cfg.time.dt_initial));
        }
        Ok(cfg)
    }
}

pub fn flux_label(kind: FluxName) -> &'static str {
    match kind {
        FluxName::LaxFriedrichs => "lax-friedrichs",
        FluxName::Centered => "centered",
        FluxName::Upwind => "upwind",
    }
}

/// Defaults of the four reference experiments.
pub fn preset(test: u8) -> Result<RunConfig, ConfigError> {
    let (model, initial, chi1, chi2, snapshots): (_, _, _, _, &[f64]) = match test {
        1 => (Model::Linear, InitialData::Bump, "heavytail", "heavytail", &[0.0, 0.8, 1.2, 1.6, 2.5, 50.0]),
        2 => (Model::Linear, InitialData::Bump, "heavytail", "oscillating", &[0.0, 0.8, 1.2, 1.6, 2.5, 50.0]),
        3 => (Model::Nonlinear, InitialData::Smooth, "gaussian", "gaussian", &[0.0, 0.83, 2.25, 3.35, 9.67, 100.0]),
        4 => (Model::Nonlinear, InitialData::Random, "heavytail", "oscillating", &[0.0, 0.16, 0.38, 0.77, 1.66, 49.9]),
        _ => return Err(invalid("test", format!("must be 1, 2, 3 or 4 (got {test})"))),
    };
    let (dt, dt_max) = match model {
        Model::Linear => (0.1, 0.1),
        Model::Nonlinear => (1e-3, 0.3),
    };
    Ok(RunConfig {
        test,
        model,
        initial,
        seed: 0,
        output_dir: format!("runs/test{test}"),
        emit_plot_script: false,
        grid: GridConfig { torus_length: PI, nx: 101, half_nv: 16, v_star: 12.0 },
        flux: FluxConfig { kind: FluxName::LaxFriedrichs, lambda: None },
        profiles: ProfileConfig { chi1: chi1.into(), chi2: chi2.into() },
        time: TimeConfig {
            dt_initial: dt,
            dt_max,
            t_final: snapshots.iter().copied().fold(0.0, f64::max),
            snapshot_times: snapshots.to_vec(),
        },
        newton: NewtonSettings {
            tol_residual: 1e-10,
            max_iterations: 12,
            mass_drift_tol: 1e-10,
            iteration_budget: 5,
            dt_min: 1e-8,
            truncated: false,
        },
        diagnostics: DiagnosticsConfig {
            delta_fraction: genrec_core::ledger::DEFAULT_DELTA_FRACTION,
            envelope_fraction: 0.2,
            fit_floor: genrec_core::diagnostics::DEFAULT_FLOOR,
        },
    })
}

/// Parsed profile name.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    Builtin(ProfileKind),
    File(PathBuf),
}

pub fn parse_profile(name: &str) -> Option<ProfileSource> {
    match name {
        "gaussian" => Some(ProfileSource::Builtin(ProfileKind::Gaussian)),
        "heavytail" => Some(ProfileSource::Builtin(ProfileKind::HeavyTailed)),
        "oscillating" => Some(ProfileSource::Builtin(ProfileKind::Oscillating)),
        _ => name.strip_prefix("file:").filter(|p| !p.is_empty()).map(|p| ProfileSource::File(p.into())),
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite (got {v})")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=4).contains(&self.test) {
            return Err(invalid("test", format!("must be 1, 2, 3 or 4 (got {})", self.test)));
        }
        let g = &self.grid;
        positive("grid.torus_length", g.torus_length)?;
        positive("grid.v_star", g.v_star)?;
        if g.nx < 3 || g.nx % 2 == 0 {
            return Err(invalid("grid.nx", format!("N must be odd and at least 3 (got {})", g.nx)));
        }
        if g.half_nv == 0 {
            return Err(invalid("grid.half_nv", "L must be at least 1"));
        }
        if let Some(l) = self.flux.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid("flux.lambda", format!("must be non-negative (got {l})")));
            }
        }
        for name in [&self.profiles.chi1, &self.profiles.chi2] {
            if parse_profile(name).is_none() {
                return Err(invalid("profiles", format!("unknown profile {name:?}")));
            }
        }
        let t = &self.time;
        positive("time.dt_initial", t.dt_initial)?;
        positive("time.dt_max", t.dt_max)?;
        if t.dt_max < t.dt_initial {
            return Err(invalid("time.dt_max", "must not be below dt_initial"));
        }
        if !(t.t_final >= 0.0 && t.t_final.is_finite()) {
            return Err(invalid("time.t_final", format!("must be non-negative (got {})", t.t_final)));
        }
        if let Some(&s) = t.snapshot_times.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(invalid("time.snapshot_times", format!("invalid time {s}")));
        }
        let n = &self.newton;
        positive("newton.tol_residual", n.tol_residual)?;
        positive("newton.mass_drift_tol", n.mass_drift_tol)?;
        positive("newton.dt_min", n.dt_min)?;
        if n.max_iterations == 0 {
            return Err(invalid("newton.max_iterations", "must be at least 1"));
        }
        if n.dt_min > t.dt_initial {
            return Err(invalid("newton.dt_min", "must not exceed dt_initial"));
        }
        let d = &self.diagnostics;
        if !(d.delta_fraction > 0.0 && d.delta_fraction < 1.0) {
            return Err(invalid("diagnostics.delta_fraction", format!("must lie in (0, 1) (got {})", d.delta_fraction)));
        }
        if !(d.envelope_fraction > 0.0 && d.envelope_fraction < 1.0) {
            return Err(invalid(
                "diagnostics.envelope_fraction",
                format!("must lie in (0, 1) (got {})", d.envelope_fraction),
            ));
        }
        positive("diagnostics.fit_floor", d.fit_floor)?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        let g = &self.grid;
        GridSpec::new(g.torus_length, g.nx, g.half_nv, g.v_star).map_err(|e| invalid("grid", e.to_string()))
    }

    /// The effective configuration as TOML; reloading it gives back `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        RawConfig::parse(text)?.resolve(&Overrides::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_test_one() {
        let cfg = RawConfig::parse("").unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(cfg.test, 1);
        assert_eq!(cfg.model, Model::Linear);
        assert_eq!((cfg.grid.nx, cfg.grid.half_nv, cfg.grid.v_star), (101, 16, 12.0));
        assert_eq!(cfg.grid.torus_length, PI);
        assert_eq!(cfg.time.dt_initial, 0.1);
        assert_eq!(cfg.time.t_final, 50.0);
        assert_eq!(cfg.profiles.chi1, "heavytail");
        assert_eq!(cfg.profiles.chi2, "heavytail");
        assert_eq!(cfg.flux.lambda, Some(6.0));
    }

    #[test]
    fn presets() {
        let o = |t| Overrides { test: Some(t), ..Overrides::default() };
        let c3 = RawConfig::default().resolve(&o(3)).unwrap();
        assert_eq!((c3.model, c3.initial, c3.time.dt_initial, c3.time.dt_max), (Model::Nonlinear, InitialData::Smooth, 1e-3, 0.3));
        assert_eq!(c3.time.t_final, 100.0);
        let c4 = RawConfig::default().resolve(&o(4)).unwrap();
        assert_eq!(c4.profiles.chi2, "oscillating");
        assert_eq!(c4.time.t_final, 49.9);
        assert!(RawConfig::default().resolve(&o(5)).is_err());
    }

    #[test]
    fn validation_errors_name_the_field() {
        let err = RawConfig::parse("[grid]\nnx = 100").unwrap().resolve(&Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { field: "grid.nx", .. }), "{err}");
        assert!(err.to_string().contains("N must be odd"));
        let err = RawConfig::parse("[time]\ndt_initial = -1.0").unwrap().resolve(&Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { field: "time.dt_initial", .. }));
        assert!(matches!(RawConfig::parse("bogus = 1"), Err(ConfigError::Parse(_))));
        assert!(matches!(RawConfig::parse("[grid]\nwidth = 1"), Err(ConfigError::Parse(_))));
        let err = RawConfig::parse("[profiles]\nchi1 = \"cauchy\"").unwrap().resolve(&Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { field: "profiles", .. }));
    }

    #[test]
    fn overrides_win() {
        let raw = RawConfig::parse("[grid]\nnx = 51\n[flux]\nkind = \"upwind\"").unwrap();
        let o = Overrides { nx: Some(11), flux: Some(FluxName::Centered), dt: Some(0.05), ..Overrides::default() };
        let cfg = raw.resolve(&o).unwrap();
        assert_eq!(cfg.grid.nx, 11);
        assert_eq!(cfg.flux.kind, FluxName::Centered);
        assert_eq!(cfg.flux.lambda, None);
        assert_eq!(cfg.time.dt_initial, 0.05);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        for t in 1..=4 {
            let cfg = RawConfig::default().resolve(&Overrides { test: Some(t), ..Overrides::default() }).unwrap();
            let text = cfg.to_toml();
            let again = RunConfig::from_toml(&text).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.to_toml(), text);
        }
    }

    #[test]
    fn profile_names() {
        assert_eq!(parse_profile("gaussian"), Some(ProfileSource::Builtin(ProfileKind::Gaussian)));
        assert_eq!(parse_profile("file:chi.txt"), Some(ProfileSource::File("chi.txt".into())));
        assert_eq!(parse_profile("file:"), None);
    }
}
