//! Implicit Euler scheme for the full nonlinear system, solved by Newton's
//! method with the exact Jacobian, plus adaptive time stepping, the truncated
//! variant and maximum-principle checks.

use alloc::vec::Vec;

use crate::flux::FluxKind;
use crate::grid::{GridSpec, PhaseField, SpatialField};
use crate::linalg::KineticMatrix;
use crate::linear::moment_residuals;
use crate::profile::VelocityProfile;
use crate::state::{macroscopic_densities, mass_difference, moments_ujs, species_difference, EquilibriumData, SpeciesPair};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Max-norm target for the scheme residual.
    pub tol_residual: f64,
    pub max_iterations: usize,
    /// Allowed relative change of the mass difference over one step.
    pub mass_diff_drift_tol: f64,
    /// After convergence, take one more Newton step if it lowers the residual.
    pub polish: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol_residual: 1e-10, max_iterations: 12, mass_diff_drift_tol: 1e-10, polish: true }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter("Newton tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("Newton needs at least one iteration"));
        }
        if !(self.mass_diff_drift_tol > 0.0) {
            return Err(Error::InvalidParameter("mass drift tolerance must be positive"));
        }
        Ok(())
    }
}

/// Cellwise bounds `(rho - gamma1) chi1 <= f <= (rho + gamma2) chi1` and
/// `chi2 / (rho + gamma2) <= g <= chi2 / (rho - gamma1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsEnvelope {
    pub rho: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl BoundsEnvelope {
    pub fn new(rho: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::NonPositiveRho(rho));
        }
        if !(gamma1 > 0.0 && gamma1 < rho && gamma2 > 0.0) {
            return Err(Error::InvalidParameter("envelope needs 0 < gamma1 < rho and gamma2 > 0"));
        }
        Ok(Self { rho, gamma1, gamma2 })
    }

    /// Bounds on `f / chi1`.
    pub fn f_ratio_bounds(&self) -> (f64, f64) {
        (self.rho - self.gamma1, self.rho + self.gamma2)
    }

    /// Bounds on `g / chi2`.
    pub fn g_ratio_bounds(&self) -> (f64, f64) {
        (1.0 / (self.rho + self.gamma2), 1.0 / (self.rho - self.gamma1))
    }
}

/// How the collision term is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollisionMode {
    Plain,
    /// Collision term evaluated on envelope-clamped states.
    Truncated(BoundsEnvelope),
}

/// Everything that stays fixed across the steps of a nonlinear run.
#[derive(Debug, Clone, Copy)]
pub struct NonlinearProblem<'a> {
    pub grid: &'a GridSpec,
    pub chi1: &'a VelocityProfile,
    pub chi2: &'a VelocityProfile,
    pub flux: FluxKind,
    pub mode: CollisionMode,
}

/// Clamps a pair into the envelope cellwise.
pub fn truncate_state(state: &SpeciesPair, env: &BoundsEnvelope, chi1: &VelocityProfile, chi2: &VelocityProfile) -> SpeciesPair {
    let (flo, fhi) = env.f_ratio_bounds();
    let (glo, ghi) = env.g_ratio_bounds();
    let clamp = |h: &PhaseField, chi: &VelocityProfile, lo: f64, hi: f64| {
        let nv = h.nv();
        let mut out = h.clone();
        for (q, v) in out.values.iter_mut().enumerate() {
            let c = chi.at(q % nv);
            *v = v.clamp(lo * c, hi * c);
        }
        out
    };
    SpeciesPair { f: clamp(&state.f, chi1, flo, fhi), g: clamp(&state.g, chi2, glo, ghi) }
}

/// Collision input (possibly clamped) and the derivative of the clamp.
fn collision_input(state: &SpeciesPair, p: &NonlinearProblem<'_>) -> (SpeciesPair, Option<SpeciesPair>) {
    match p.mode {
        CollisionMode::Plain => (state.clone(), None),
        CollisionMode::Truncated(env) => {
            let t = truncate_state(state, &env, p.chi1, p.chi2);
            let mask = |a: &PhaseField, b: &PhaseField| a.zip_with(b, |x, y| if x == y { 1.0 } else { 0.0 });
            let m = SpeciesPair { f: mask(&state.f, &t.f), g: mask(&state.g, &t.g) };
            (t, Some(m))
        }
    }
}

/// Per-cell residual of the nonlinear scheme:
/// `(F - F^n)/dt + T F - (chi1 - rho_g f, chi2 - rho_f g)`.
pub fn residual_nonlinear(next: &SpeciesPair, prev: &SpeciesPair, dt: f64, p: &NonlinearProblem<'_>) -> SpeciesPair {
    let grid = p.grid;
    let (nx, nv) = (grid.nx(), grid.nv());
    let v = grid.v_centers();
    let (c, _) = collision_input(next, p);
    let (rf, rg) = macroscopic_densities(&c, grid);
    let species = |h: &PhaseField, h0: &PhaseField, hc: &PhaseField, chi: &VelocityProfile, other: &SpatialField| {
        let mut out = PhaseField::zeros(grid);
        for i in 0..nx {
            let (im, ip) = (grid.wrap(i, -1), grid.wrap(i, 1));
            for k in 0..nv {
                let (lo, d, up) = p.flux.stencil(v[k], grid.dx());
                let transport = lo * h.get(im, k) + d * h.get(i, k) + up * h.get(ip, k);
                let collision = chi.at(k) - other.values[i] * hc.get(i, k);
                out.set(i, k, (h.get(i, k) - h0.get(i, k)) / dt + transport - collision);
            }
        }
        out
    };
    SpeciesPair {
        f: species(&next.f, &prev.f, &c.f, p.chi1, &rg),
        g: species(&next.g, &prev.g, &c.g, p.chi2, &rf),
    }
}

/// Exact Jacobian of [`residual_nonlinear`] with respect to the new state.
pub fn jacobian(state: &SpeciesPair, dt: f64, p: &NonlinearProblem<'_>) -> KineticMatrix {
    let grid = p.grid;
    let (nx, nv) = (grid.nx(), grid.nv());
    let (c, mask) = collision_input(state, p);
    let (rf, rg) = macroscopic_densities(&c, grid);
    let mut m = KineticMatrix::zeros(nx, nv);
    for s in 0..2 {
        let (hc, other) = if s == 0 { (&c.f, &rg) } else { (&c.g, &rf) };
        for i in 0..nx {
            for k in 0..nv {
                let r = m.index(s, i, k);
                let (lo, d, up) = p.flux.stencil(grid.v_centers()[k], grid.dx());
                let own = mask.as_ref().map_or(1.0, |mk| if s == 0 { mk.f.get(i, k) } else { mk.g.get(i, k) });
                m.lo[r] = lo;
                m.up[r] = up;
                m.diag[r] = 1.0 / dt + d + other.values[i] * own;
                m.density[r] = grid.dv() * hc.get(i, k);
                if let Some(mk) = &mask {
                    m.weight[r] = if s == 0 { mk.f.get(i, k) } else { mk.g.get(i, k) };
                }
            }
        }
    }
    m
}

/// Relative mass-difference drift `|M1 - M0| / max(1, |M0|)`.
pub fn mass_drift(before: &SpeciesPair, after: &SpeciesPair, grid: &GridSpec) -> f64 {
    let m0 = mass_difference(before, grid);
    let m1 = mass_difference(after, grid);
    (m1 - m0).abs() / m0.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub state: SpeciesPair,
    /// Newton updates taken before the tolerance was met (polish excluded).
    pub iterations: usize,
    pub residual: f64,
    pub mass_drift: f64,
}

/// Solves one implicit step starting from `F^n` as initial guess.
pub fn newton_solve(prev: &SpeciesPair, dt: f64, p: &NonlinearProblem<'_>, cfg: &NewtonConfig) -> Result<NewtonOutcome> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    if !prev.same_shape(p.grid) {
        return Err(Error::DimensionMismatch("state does not match the grid"));
    }
    let grid = p.grid;
    let mut x = prev.clone();
    let mut r = residual_nonlinear(&x, prev, dt, p);
    let mut rn = r.max_abs();
    let first = rn;
    let mut iterations = 0;
    loop {
        if !rn.is_finite() || rn > 1e8 * first.max(1.0) {
            return Err(Error::NewtonDiverged { iterations, residual: rn });
        }
        if rn <= cfg.tol_residual {
            break;
        }
        if iterations == cfg.max_iterations {
            return Err(Error::NewtonDiverged { iterations, residual: rn });
        }
        x = newton_update(&x, &r, dt, p)?;
        r = residual_nonlinear(&x, prev, dt, p);
        rn = r.max_abs();
        iterations += 1;
    }
    if cfg.polish && rn > 0.0 {
        if let Ok(y) = newton_update(&x, &r, dt, p) {
            let ry = residual_nonlinear(&y, prev, dt, p).max_abs();
            if ry < rn {
                x = y;
                rn = ry;
            }
        }
    }
    let drift = mass_drift(prev, &x, grid);
    if drift > cfg.mass_diff_drift_tol {
        return Err(Error::MassDrift { drift });
    }
    Ok(NewtonOutcome { state: x, iterations, residual: rn, mass_drift: drift })
}

fn newton_update(x: &SpeciesPair, r: &SpeciesPair, dt: f64, p: &NonlinearProblem<'_>) -> Result<SpeciesPair> {
    let lu = jacobian(x, dt, p).factor()?;
    let dx = lu.solve(&r.to_stacked())?;
    let dx = SpeciesPair::from_stacked(p.grid, &dx)?;
    Ok(x.axpy(-1.0, &dx))
}

/// Step-size controller: grow after cheap accepted steps, shrink after
/// failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveController {
    pub dt_current: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub growth_factor: f64,
    pub shrink_factor: f64,
    /// Steps converging within this many Newton iterations grow `dt`.
    pub accept_iteration_budget: usize,
}

impl AdaptiveController {
    pub fn new(dt_initial: f64, dt_max: f64) -> Result<Self> {
        let c = Self {
            dt_current: dt_initial,
            dt_min: 1e-8_f64.min(dt_initial),
            dt_max,
            growth_factor: 2.0,
            shrink_factor: 0.5,
            accept_iteration_budget: 5,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_current && self.dt_current <= self.dt_max) {
            return Err(Error::InvalidParameter("controller needs 0 < dt_min <= dt <= dt_max"));
        }
        if !(self.growth_factor > 1.0 && self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(Error::InvalidParameter("controller needs growth > 1 > shrink > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvanceOutcome {
    pub state: SpeciesPair,
    pub dt_used: f64,
    pub iterations: usize,
    pub residual: f64,
    pub mass_drift: f64,
    /// Step sizes tried and rejected before the accepted one.
    pub rejected: Vec<f64>,
}

/// One accepted step of at most `dt_cap` (used to land on output times).
pub fn adaptive_advance(
    prev: &SpeciesPair,
    ctrl: &mut AdaptiveController,
    cfg: &NewtonConfig,
    p: &NonlinearProblem<'_>,
    dt_cap: Option<f64>,
) -> Result<AdvanceOutcome> {
    ctrl.validate()?;
    let mut rejected = Vec::new();
    loop {
        let dt = dt_cap.map_or(ctrl.dt_current, |c| ctrl.dt_current.min(c));
        let clipped = dt < ctrl.dt_current;
        match newton_solve(prev, dt, p, cfg) {
            Ok(out) => {
                if !clipped && out.iterations <= ctrl.accept_iteration_budget {
                    ctrl.dt_current = (ctrl.dt_current * ctrl.growth_factor).min(ctrl.dt_max);
                }
                return Ok(AdvanceOutcome {
                    state: out.state,
                    dt_used: dt,
                    iterations: out.iterations,
                    residual: out.residual,
                    mass_drift: out.mass_drift,
                    rejected,
                });
            }
            Err(Error::NewtonDiverged { .. } | Error::MassDrift { .. } | Error::SolveFailure | Error::SingularOperator { .. }) => {
                rejected.push(dt);
                let next = dt * ctrl.shrink_factor;
                if next < ctrl.dt_min {
                    return Err(Error::StepFailed { dt_min: ctrl.dt_min });
                }
                ctrl.dt_current = next;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Extreme values of `f / chi1` and `g / chi2` and whether they respect an
/// envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub f_ratio_min: f64,
    pub f_ratio_max: f64,
    pub g_ratio_min: f64,
    pub g_ratio_max: f64,
    pub pass: bool,
}

/// Relative slack granted to the envelope comparison for rounding.
const BOUNDS_SLACK: f64 = 1e-12;

pub fn check_maximum_principle(
    state: &SpeciesPair,
    env: &BoundsEnvelope,
    chi1: &VelocityProfile,
    chi2: &VelocityProfile,
) -> BoundsReport {
    let ratios = |h: &PhaseField, chi: &VelocityProfile| {
        let nv = h.nv();
        h.values.iter().enumerate().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (q, &v)| {
            let r = v / chi.at(q % nv);
            (lo.min(r), hi.max(r))
        })
    };
    let (fmin, fmax) = ratios(&state.f, chi1);
    let (gmin, gmax) = ratios(&state.g, chi2);
    let (flo, fhi) = env.f_ratio_bounds();
    let (glo, ghi) = env.g_ratio_bounds();
    let pass = fmin >= flo * (1.0 - BOUNDS_SLACK)
        && fmax <= fhi * (1.0 + BOUNDS_SLACK)
        && gmin >= glo * (1.0 - BOUNDS_SLACK)
        && gmax <= ghi * (1.0 + BOUNDS_SLACK);
    BoundsReport { f_ratio_min: fmin, f_ratio_max: fmax, g_ratio_min: gmin, g_ratio_max: gmax, pass }
}

/// Residuals of the moment equations satisfied by `h~ = f~ - g~` with
/// `F~ = F - F_inf`, including the quadratic source term, between two
/// consecutive states of a Lax–Friedrichs (or centered) nonlinear step.
pub fn nonlinear_moment_residuals(
    prev: &SpeciesPair,
    next: &SpeciesPair,
    eq: &EquilibriumData,
    grid: &GridSpec,
    dt: f64,
    lambda: f64,
) -> (f64, f64) {
    let rho = eq.rho;
    let (p0, p1) = (eq.perturbation(prev), eq.perturbation(next));
    let (u0, j0, _) = moments_ujs(&species_difference(&p0), grid, eq.d0);
    let (u1, j1, s1) = moments_ujs(&species_difference(&p1), grid, eq.d0);
    let (_, jf, _) = moments_ujs(&p1.f, grid, eq.d0);
    let (_, jg, _) = moments_ujs(&p1.g, grid, eq.d0);
    let (rf, rg) = macroscopic_densities(next, grid);
    let source = SpatialField::from_fn(grid, |i| {
        -(jf.values[i] / rho - rho * jg.values[i])
            - ((rg.values[i] - 1.0 / rho) * jf.values[i] - (rf.values[i] - rho) * jg.values[i])
    });
    moment_residuals(&(u0, j0), &(u1, j1, s1), &source, grid, eq.d0, dt, lambda)
}
