//! Time integration of a configured experiment and per-step certification
//! checks. No file IO happens here.

use genrec_core::diagnostics::{
    entropy_dissipation_slack, modified_entropy, phi_gradient_bound, phi_increment_bound, PoissonSolver,
    PotentialState, TimeSeriesRecord,
};
use genrec_core::ledger::{constants_ledger, ConstantsLedger};
use genrec_core::linear::{assemble_linear_operator, step_linear, verify_moment_schemes};
use genrec_core::nonlinear::{
    adaptive_advance, check_maximum_principle, nonlinear_moment_residuals, AdaptiveController, BoundsEnvelope,
    BoundsReport, CollisionMode, NewtonConfig, NonlinearProblem,
};
use genrec_core::state::{build_equilibrium, macroscopic_densities, mass_difference, rho_inf_star};
use genrec_core::{EquilibriumData, FluxKind, GridSpec, SpeciesPair, VelocityProfile};

use crate::config::{FluxName, Model, RunConfig};
use crate::initial::{initial_distributions, load_profile};
use crate::RunError;

/// Full distributions at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: SpeciesPair,
}

/// Certification quantities of one accepted step (`None` where a check does
/// not apply).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepChecks {
    /// `-(1/2 (||F1||^2 - ||F0||^2) + dt C_mc ||(I - Pi) F1||^2)`.
    pub coercivity_slack: Option<f64>,
    /// `-dt K_delta ||F1||^2 - (H1 - H0)`, between two full entropy records.
    pub entropy_slack: Option<f64>,
    /// `C_P C_u ||Pi F|| - ||D^c phi||`.
    pub phi_gradient_slack: Option<f64>,
    /// Right minus left side of the potential increment estimate.
    pub phi_increment_slack: Option<f64>,
    /// Max-norm residuals of the `u` and `J` moment equations.
    pub moment_residuals: Option<(f64, f64)>,
    pub newton_residual: Option<f64>,
    pub rejected_dts: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: RunConfig,
    pub grid: GridSpec,
    pub rho_inf: f64,
    pub initial_mass_difference: f64,
    pub ledger: ConstantsLedger,
    pub series: Vec<TimeSeriesRecord>,
    /// `checks[n]` belongs to `series[n + 1]`.
    pub checks: Vec<StepChecks>,
    pub bounds: Vec<BoundsReport>,
    pub snapshots: Vec<Snapshot>,
    /// Set when the run stopped before `t_final`.
    pub failure: Option<String>,
}

impl RunReport {
    pub fn max_mass_drift(&self) -> f64 {
        let scale = self.initial_mass_difference.abs().max(1.0);
        self.series
            .iter()
            .map(|r| (r.mass_difference - self.initial_mass_difference).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn final_time(&self) -> f64 {
        self.series.last().map_or(0.0, |r| r.t)
    }
}

fn flux_kind(cfg: &RunConfig) -> FluxKind {
    match cfg.flux.kind {
        FluxName::LaxFriedrichs => FluxKind::LaxFriedrichs { lambda: cfg.flux.lambda.unwrap_or(0.0) },
        FluxName::Centered => FluxKind::Centered,
        FluxName::Upwind => FluxKind::Upwind,
    }
}

/// Diffusion parameter entering the constants ledger; the upwind flux is a
/// Lax–Friedrichs flux with velocity-dependent diffusion `|v|/2 <= v*/2`.
fn ledger_lambda(cfg: &RunConfig, grid: &GridSpec) -> f64 {
    match cfg.flux.kind {
        FluxName::LaxFriedrichs => cfg.flux.lambda.unwrap_or(0.0),
        FluxName::Centered => 0.0,
        FluxName::Upwind => 0.5 * grid.v_star(),
    }
}

/// Diffusion of the moment equations, when they hold in closed form.
fn moment_lambda(cfg: &RunConfig) -> Option<f64> {
    match cfg.flux.kind {
        FluxName::LaxFriedrichs => cfg.flux.lambda,
        FluxName::Centered => Some(0.0),
        FluxName::Upwind => None,
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    grid: &'a GridSpec,
    chi1: &'a VelocityProfile,
    chi2: &'a VelocityProfile,
    eq: EquilibriumData,
    env: BoundsEnvelope,
}

impl Context<'_> {
    /// Record of a full distribution `full` whose deviation from equilibrium is
    /// `pert`.
    fn record(
        &self,
        t: f64,
        full: &SpeciesPair,
        pert: &SpeciesPair,
        entropy: Option<f64>,
        dt_used: f64,
        newton: Option<usize>,
    ) -> (TimeSeriesRecord, BoundsReport) {
        let (rf, rg) = macroscopic_densities(pert, self.grid);
        let bounds = check_maximum_principle(full, &self.env, self.chi1, self.chi2);
        let rec = TimeSeriesRecord {
            t,
            weighted_norm: self.eq.norm(pert, self.grid),
            density_norms: (rf.l2_norm(self.grid), rg.l2_norm(self.grid)),
            entropy,
            mass_difference: mass_difference(full, self.grid),
            bounds_pass: bounds.pass,
            dt_used,
            newton_iterations: newton,
        };
        (rec, bounds)
    }

    /// Requested output times in `(t_prev, t]`.
    fn snapshot_due(&self, t_prev: f64, t: f64) -> impl Iterator<Item = f64> + '_ {
        let eps = |s: f64| 1e-9 * s.abs().max(1.0);
        let t_final = self.cfg.time.t_final;
        self.cfg
            .time
            .snapshot_times
            .iter()
            .copied()
            .filter(move |&s| s <= t_final + eps(s) && s > t_prev + eps(s) && s <= t + eps(s))
    }
}

/// Runs the configured experiment. Solver failures stop the integration and
/// are reported in [`RunReport::failure`]; setup errors are returned.
pub fn simulate(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let chi1 = load_profile(&cfg.profiles.chi1, &grid)?;
    let chi2 = load_profile(&cfg.profiles.chi2, &grid)?;
    let initial = initial_distributions(cfg, &grid, &chi1, &chi2);
    let rho = rho_inf_star(&initial, &grid);
    let eq = build_equilibrium(rho, &chi1, &chi2, &grid)?;
    let ledger = constants_ledger(
        &chi1,
        &chi2,
        rho,
        &grid,
        ledger_lambda(cfg, &grid),
        cfg.time.dt_max,
        cfg.diagnostics.delta_fraction,
    )?;
    let gamma = cfg.diagnostics.envelope_fraction * rho;
    let env = BoundsEnvelope::new(rho, gamma, gamma)?;
    let ctx = Context { cfg, grid: &grid, chi1: &chi1, chi2: &chi2, eq, env };
    let mut report = RunReport {
        config: cfg.clone(),
        grid: grid.clone(),
        rho_inf: rho,
        initial_mass_difference: mass_difference(&initial, &grid),
        ledger,
        series: Vec::new(),
        checks: Vec::new(),
        bounds: Vec::new(),
        snapshots: Vec::new(),
        failure: None,
    };
    if cfg.time.snapshot_times.contains(&0.0) {
        report.snapshots.push(Snapshot { t: 0.0, state: initial.clone() });
    }
    match cfg.model {
        Model::Linear => run_linear(&ctx, initial, &mut report)?,
        Model::Nonlinear => run_nonlinear(&ctx, initial, &mut report),
    }
    Ok(report)
}

fn run_linear(ctx: &Context<'_>, initial: SpeciesPair, report: &mut RunReport) -> Result<(), RunError> {
    let (cfg, grid, eq) = (ctx.cfg, ctx.grid, &ctx.eq);
    let ledger = report.ledger.clone();
    let dt = cfg.time.dt_initial;
    let flux = flux_kind(cfg);
    let solver = PoissonSolver::new(grid)?;
    let mut state = eq.perturbation(&initial);
    let mut pot = PotentialState::initial(&state, &solver, grid)?;
    let entropy = |s: &SpeciesPair, p: &PotentialState| modified_entropy(s, p, ledger.delta, dt, &ledger, grid, eq);
    let mut h = entropy(&state, &pot)?;
    let (rec, b) = ctx.record(0.0, &initial, &state, Some(h), 0.0, None);
    report.series.push(rec);
    report.bounds.push(b);

    let steps = (cfg.time.t_final / dt - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(());
    }
    let op = match assemble_linear_operator(grid, eq, dt, flux) {
        Ok(op) => op,
        Err(e) => {
            report.failure = Some(format!("t=0: {e}"));
            return Ok(());
        }
    };
    let mut t_prev = 0.0;
    for n in 1..=steps {
        let t = n as f64 * dt;
        let next = match step_linear(&state, &op, grid) {
            Ok(s) if s.is_finite() => s,
            Ok(_) => {
                report.failure = Some(format!("t={t}: non-finite state"));
                return Ok(());
            }
            Err(e) => {
                report.failure = Some(format!("t={t}: {e}"));
                return Ok(());
            }
        };
        let next_pot = pot.advance(&next, &solver, grid)?;
        let h_next = entropy(&next, &next_pot)?;
        let (n0, n1) = (eq.norm(&state, grid), eq.norm(&next, grid));
        let perp = eq.norm(&eq.project_complement(&next, grid), grid);
        let (g_lhs, g_rhs) = phi_gradient_bound(&next, &next_pot, &ledger, grid, eq);
        let mut checks = StepChecks {
            coercivity_slack: Some(-(0.5 * (n1 * n1 - n0 * n0) + dt * ledger.c_mc * perp * perp)),
            entropy_slack: (!pot.is_partial()).then(|| entropy_dissipation_slack(h, h_next, dt, ledger.k_delta, n1)),
            phi_gradient_slack: Some(g_rhs - g_lhs),
            ..StepChecks::default()
        };
        if let Some(lambda) = moment_lambda(cfg) {
            checks.phi_increment_slack =
                phi_increment_bound(&next, &next_pot, dt, &ledger, grid, eq).map(|(lhs, rhs)| rhs - lhs);
            checks.moment_residuals = Some(verify_moment_schemes(&state, &next, grid, eq.rho, eq.d0, dt, lambda));
        }
        let full = eq.reconstruct(&next);
        let (rec, b) = ctx.record(t, &full, &next, Some(h_next), dt, None);
        report.series.push(rec);
        report.bounds.push(b);
        report.checks.push(checks);
        if ctx.snapshot_due(t_prev, t).next().is_some() {
            report.snapshots.push(Snapshot { t, state: full.clone() });
        }
        state = next;
        pot = next_pot;
        h = h_next;
        t_prev = t;
    }
    Ok(())
}

fn run_nonlinear(ctx: &Context<'_>, initial: SpeciesPair, report: &mut RunReport) {
    let (cfg, grid, eq) = (ctx.cfg, ctx.grid, &ctx.eq);
    let flux = flux_kind(cfg);
    let problem = NonlinearProblem {
        grid,
        chi1: ctx.chi1,
        chi2: ctx.chi2,
        flux,
        mode: if cfg.newton.truncated { CollisionMode::Truncated(ctx.env) } else { CollisionMode::Plain },
    };
    let newton = NewtonConfig {
        tol_residual: cfg.newton.tol_residual,
        max_iterations: cfg.newton.max_iterations,
        mass_diff_drift_tol: cfg.newton.mass_drift_tol,
        polish: true,
    };
    let mut ctrl = AdaptiveController {
        dt_current: cfg.time.dt_initial,
        dt_min: cfg.newton.dt_min,
        dt_max: cfg.time.dt_max,
        growth_factor: 2.0,
        shrink_factor: 0.5,
        accept_iteration_budget: cfg.newton.iteration_budget,
    };
    let (rec, b) = ctx.record(0.0, &initial, &eq.perturbation(&initial), None, 0.0, None);
    report.series.push(rec);
    report.bounds.push(b);

    let t_final = cfg.time.t_final;
    let mut stops: Vec<f64> = cfg.time.snapshot_times.iter().copied().filter(|&s| s > 0.0 && s < t_final).collect();
    stops.push(t_final);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut state = initial;
    let mut t = 0.0_f64;
    for &stop in &stops {
        while t < stop - 1e-12 * stop.max(1.0) {
            let remaining = stop - t;
            let out = match adaptive_advance(&state, &mut ctrl, &newton, &problem, Some(remaining)) {
                Ok(out) => out,
                Err(e) => {
                    report.failure = Some(format!("t={t}: {e}"));
                    return;
                }
            };
            let landed = out.dt_used >= remaining;
            let t_next = if landed { stop } else { t + out.dt_used };
            let mut checks = StepChecks {
                newton_residual: Some(out.residual),
                rejected_dts: out.rejected.clone(),
                ..StepChecks::default()
            };
            if let Some(lambda) = moment_lambda(cfg) {
                checks.moment_residuals =
                    Some(nonlinear_moment_residuals(&state, &out.state, eq, grid, out.dt_used, lambda));
            }
            let (rec, b) = ctx.record(t_next, &out.state, &eq.perturbation(&out.state), None, out.dt_used, Some(out.iterations));
            report.series.push(rec);
            report.bounds.push(b);
            report.checks.push(checks);
            if !out.state.is_finite() {
                report.failure = Some(format!("t={t_next}: non-finite state"));
                return;
            }
            state = out.state;
            t = t_next;
        }
        if stop > 0.0 && cfg.time.snapshot_times.contains(&stop) {
            report.snapshots.push(Snapshot { t, state: state.clone() });
        }
    }
}
