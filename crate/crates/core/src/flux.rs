//! Numerical fluxes for the free-transport term `v d_x`.

use crate::grid::{GridSpec, PhaseField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxKind {
    /// Centered flux plus `lambda`-scaled numerical diffusion.
    LaxFriedrichs { lambda: f64 },
    Centered,
    Upwind,
}

impl FluxKind {
    /// Diffusion parameter of the flux (zero for the centered flux).
    pub fn lambda(self) -> f64 {
        match self {
            Self::LaxFriedrichs { lambda } => lambda,
            _ => 0.0,
        }
    }

    /// Interface flux `F_{i+1/2}` divided by `dv`, given the two adjacent
    /// cell values.
    #[inline]
    pub fn interface(self, v: f64, left: f64, right: f64) -> f64 {
        match self {
            Self::LaxFriedrichs { lambda } => 0.5 * v * (right + left) - lambda * (right - left),
            Self::Centered => 0.5 * v * (right + left),
            Self::Upwind => v.max(0.0) * left - (-v).max(0.0) * right,
        }
    }

    /// Stencil `(lo, diag, up)` of the flux divergence at velocity `v`:
    /// `div_i = lo f_{i-1} + diag f_i + up f_{i+1}`.
    pub fn stencil(self, v: f64, dx: f64) -> (f64, f64, f64) {
        match self {
            Self::LaxFriedrichs { lambda } => {
                (-0.5 * v / dx - lambda / dx, 2.0 * lambda / dx, 0.5 * v / dx - lambda / dx)
            }
            Self::Centered => (-0.5 * v / dx, 0.0, 0.5 * v / dx),
            Self::Upwind => {
                let (vp, vm) = (v.max(0.0), (-v).max(0.0));
                (-vp / dx, (vp + vm) / dx, -vm / dx)
            }
        }
    }
}

/// `lambda = max(v* / 2, dx / (2 dt))`: the smallest diffusion for which the
/// Lax–Friedrichs flux is monotone at step `dt`.
pub fn default_lambda(grid: &GridSpec, dt: f64) -> f64 {
    (0.5 * grid.v_star()).max(grid.dx() / (2.0 * dt))
}

/// `(F_{i+1/2,k} - F_{i-1/2,k}) / (dx dv)` for every cell.
pub fn flux_divergence(field: &PhaseField, flux: FluxKind, grid: &GridSpec) -> PhaseField {
    let v = grid.v_centers();
    let dx = grid.dx();
    PhaseField::from_fn(grid, |i, k| {
        let (im, ip) = (grid.wrap(i, -1), grid.wrap(i, 1));
        let (fm, f0, fp) = (field.get(im, k), field.get(i, k), field.get(ip, k));
        (flux.interface(v[k], f0, fp) - flux.interface(v[k], fm, f0)) / dx
    })
}
