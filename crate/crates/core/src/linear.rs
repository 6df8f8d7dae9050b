//! Implicit Euler scheme for the system linearized around `F_inf`.
//!
//! The unknown is the perturbation `F = (f, g)`; one step solves
//! `(I + dt T - dt L) F^{n+1} = F^n` where `T` is the flux divergence and `L`
//! the linearized collision operator.

use crate::flux::{flux_divergence, FluxKind};
use crate::grid::{discrete_gradient, second_difference, GradientKind, GridSpec, PhaseField, SpatialField};
use crate::linalg::{KineticLu, KineticMatrix};
use crate::state::{moments_ujs, species_difference, EquilibriumData, SpeciesPair};
use crate::{Error, Result};

/// Factorized `I + dt T - dt L` for one `(grid, equilibrium, dt, flux)`.
#[derive(Debug, Clone)]
pub struct ImplicitOperator {
    dt: f64,
    flux: FluxKind,
    nx: usize,
    nv: usize,
    lu: KineticLu,
}

/// Matrix of `I + dt T - dt L` in species-major stacking.
pub fn linear_matrix(grid: &GridSpec, eq: &EquilibriumData, dt: f64, flux: FluxKind) -> Result<KineticMatrix> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    if eq.chi1.values().len() != grid.nv() {
        return Err(Error::DimensionMismatch("equilibrium built on a different grid"));
    }
    let (nx, nv) = (grid.nx(), grid.nv());
    let rho = eq.rho;
    let dv = grid.dv();
    let mut m = KineticMatrix::zeros(nx, nv);
    for s in 0..2 {
        for i in 0..nx {
            for k in 0..nv {
                let r = m.index(s, i, k);
                let (lo, d, up) = flux.stencil(grid.v_centers()[k], grid.dx());
                let (relax, density) = if s == 0 {
                    (1.0 / rho, rho * eq.chi1.at(k) * dv)
                } else {
                    (rho, eq.chi2.at(k) * dv / rho)
                };
                m.lo[r] = dt * lo;
                m.up[r] = dt * up;
                m.diag[r] = 1.0 + dt * (d + relax);
                m.density[r] = dt * density;
            }
        }
    }
    Ok(m)
}

pub fn assemble_linear_operator(
    grid: &GridSpec,
    eq: &EquilibriumData,
    dt: f64,
    flux: FluxKind,
) -> Result<ImplicitOperator> {
    let lu = linear_matrix(grid, eq, dt, flux)?.factor()?;
    Ok(ImplicitOperator { dt, flux, nx: grid.nx(), nv: grid.nv(), lu })
}

impl ImplicitOperator {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn flux(&self) -> FluxKind {
        self.flux
    }

    pub fn matrix(&self) -> &KineticMatrix {
        self.lu.matrix()
    }

    fn check(&self, state: &SpeciesPair) -> Result<()> {
        if state.f.nx() != self.nx || state.f.nv() != self.nv || state.g.nx() != self.nx || state.g.nv() != self.nv {
            return Err(Error::DimensionMismatch("state does not match the operator grid"));
        }
        Ok(())
    }

    /// Matrix-free application `(I + dt T - dt L) F`.
    pub fn apply(&self, state: &SpeciesPair, grid: &GridSpec) -> Result<SpeciesPair> {
        self.check(state)?;
        SpeciesPair::from_stacked(grid, &self.matrix().apply(&state.to_stacked()))
    }
}

/// Direct stencil evaluation of `F + dt (T F - L F)`.
pub fn scheme_lhs(state: &SpeciesPair, grid: &GridSpec, eq: &EquilibriumData, dt: f64, flux: FluxKind) -> SpeciesPair {
    let l = eq.collision_linear(state, grid);
    let tf = flux_divergence(&state.f, flux, grid);
    let tg = flux_divergence(&state.g, flux, grid);
    SpeciesPair {
        f: PhaseField::from_fn(grid, |i, k| state.f.get(i, k) + dt * (tf.get(i, k) - l.f.get(i, k))),
        g: PhaseField::from_fn(grid, |i, k| state.g.get(i, k) + dt * (tg.get(i, k) - l.g.get(i, k))),
    }
}

/// Residual `(F^{n+1} - F^n) / dt + T F^{n+1} - L F^{n+1}` of the scheme.
pub fn linear_residual(
    next: &SpeciesPair,
    prev: &SpeciesPair,
    grid: &GridSpec,
    eq: &EquilibriumData,
    dt: f64,
    flux: FluxKind,
) -> SpeciesPair {
    scheme_lhs(next, grid, eq, dt, flux).axpy(-1.0, prev).scale(1.0 / dt)
}

/// One implicit step.
pub fn step_linear(state: &SpeciesPair, op: &ImplicitOperator, grid: &GridSpec) -> Result<SpeciesPair> {
    op.check(state)?;
    let x = op.lu.solve(&state.to_stacked())?;
    SpeciesPair::from_stacked(grid, &x)
}

/// Max-norm residuals of the discrete `u`- and `J`-moment equations between
/// two consecutive states of a Lax–Friedrichs (or centered, `lambda = 0`)
/// linear step.
pub fn verify_moment_schemes(
    prev: &SpeciesPair,
    next: &SpeciesPair,
    grid: &GridSpec,
    rho: f64,
    d0: f64,
    dt: f64,
    lambda: f64,
) -> (f64, f64) {
    let (u0, j0, _) = moments_ujs(&species_difference(prev), grid, d0);
    let (u1, j1, s1) = moments_ujs(&species_difference(next), grid, d0);
    let (_, jf, _) = moments_ujs(&next.f, grid, d0);
    let (_, jg, _) = moments_ujs(&next.g, grid, d0);
    let source = SpatialField::from_fn(grid, |i| -(jf.values[i] / rho - rho * jg.values[i]));
    moment_residuals(&(u0, j0), &(u1, j1, s1), &source, grid, d0, dt, lambda)
}

/// Residuals of
/// `(u1 - u0)/dt + Dc J1 - (lambda dx / 2) Lap u1 = 0` and
/// `(J1 - J0)/dt + Dc S1 + D0 Dc u1 - (lambda dx / 2) Lap J1 = source`.
pub(crate) fn moment_residuals(
    before: &(SpatialField, SpatialField),
    after: &(SpatialField, SpatialField, SpatialField),
    source: &SpatialField,
    grid: &GridSpec,
    d0: f64,
    dt: f64,
    lambda: f64,
) -> (f64, f64) {
    let (u0, j0) = before;
    let (u1, j1, s1) = after;
    let dc = |f: &SpatialField| discrete_gradient(f, GradientKind::Centered, grid);
    let diff = 0.5 * lambda * grid.dx();
    let (dj, ds, du) = (dc(j1), dc(s1), dc(u1));
    let (lu, lj) = (second_difference(u1, grid), second_difference(j1, grid));
    let mut ru = 0.0_f64;
    let mut rj = 0.0_f64;
    for i in 0..grid.nx() {
        let a = (u1.values[i] - u0.values[i]) / dt + dj.values[i] - diff * lu.values[i];
        let b = (j1.values[i] - j0.values[i]) / dt + ds.values[i] + d0 * du.values[i] - diff * lj.values[i]
            - source.values[i];
        ru = ru.max(a.abs());
        rj = rj.max(b.abs());
    }
    (ru, rj)
}

/// `<T F, F>_Delta`: the quadratic form of the transport operator.
pub fn transport_form(state: &SpeciesPair, grid: &GridSpec, eq: &EquilibriumData, flux: FluxKind) -> f64 {
    let t = SpeciesPair { f: flux_divergence(&state.f, flux, grid), g: flux_divergence(&state.g, flux, grid) };
    eq.inner(&t, state, grid)
}

/// Numerical dissipation of the Lax–Friedrichs flux,
/// `lambda dx sum dx dv ((D+ f)^2 / (rho chi1) + (D+ g)^2 rho / chi2)`,
/// which equals the difference of the Lax–Friedrichs and centered transport
/// forms.
pub fn lax_friedrichs_dissipation(state: &SpeciesPair, grid: &GridSpec, eq: &EquilibriumData, lambda: f64) -> f64 {
    let forward = |h: &PhaseField| {
        PhaseField::from_fn(grid, |i, k| (h.get(grid.wrap(i, 1), k) - h.get(i, k)) / grid.dx())
    };
    let d = SpeciesPair { f: forward(&state.f), g: forward(&state.g) };
    lambda * grid.dx() * eq.inner(&d, &d, grid)
}
