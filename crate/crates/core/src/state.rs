//! Species pairs, the discrete equilibrium and the weighted geometry around it.

use crate::grid::{GridSpec, PhaseField, SpatialField};
use crate::profile::VelocityProfile;
use crate::sum::pairwise_by;
use crate::{Error, Result};

/// The scheme state `(f, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesPair {
    pub f: PhaseField,
    pub g: PhaseField,
}

impl SpeciesPair {
    pub fn new(f: PhaseField, g: PhaseField) -> Result<Self> {
        if f.nx() != g.nx() || f.nv() != g.nv() {
            return Err(Error::DimensionMismatch("species fields differ in shape"));
        }
        Ok(Self { f, g })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { f: PhaseField::zeros(grid), g: PhaseField::zeros(grid) }
    }

    pub fn same_shape(&self, grid: &GridSpec) -> bool {
        self.f.same_shape(grid) && self.g.same_shape(grid)
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.g.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.f.max_abs().max(self.g.max_abs())
    }

    /// `self + scale * other`
    pub fn axpy(&self, scale: f64, other: &Self) -> Self {
        Self {
            f: self.f.zip_with(&other.f, |a, b| a + scale * b),
            g: self.g.zip_with(&other.g, |a, b| a + scale * b),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { f: self.f.map(|a| s * a), g: self.g.map(|a| s * a) }
    }

    /// Species-major stacking: all of `f`, then all of `g`.
    pub fn to_stacked(&self) -> alloc::vec::Vec<f64> {
        let mut out = self.f.values.clone();
        out.extend_from_slice(&self.g.values);
        out
    }

    pub fn from_stacked(grid: &GridSpec, x: &[f64]) -> Result<Self> {
        let n = grid.phase_len();
        if x.len() != 2 * n {
            return Err(Error::DimensionMismatch("stacked state length"));
        }
        Ok(Self {
            f: PhaseField::from_values(grid, x[..n].to_vec())?,
            g: PhaseField::from_values(grid, x[n..].to_vec())?,
        })
    }
}

/// `sum_ij dx dv (f_ij - g_ij)`
pub fn mass_difference(state: &SpeciesPair, grid: &GridSpec) -> f64 {
    let (f, g) = (&state.f.values, &state.g.values);
    grid.dx() * grid.dv() * pairwise_by(f.len(), |q| f[q] - g[q])
}

/// Positive root of `|T| (rho - 1/rho) = m0`.
pub fn rho_from_mass_difference(m0: f64, torus_length: f64) -> f64 {
    let disc = libm::sqrt(m0 * m0 + 4.0 * torus_length * torus_length);
    if m0 >= 0.0 {
        (m0 + disc) / (2.0 * torus_length)
    } else {
        // Same root, rewritten to avoid cancellation.
        2.0 * torus_length / (disc - m0)
    }
}

/// Equilibrium density fixed by the initial mass difference.
pub fn rho_inf_star(initial: &SpeciesPair, grid: &GridSpec) -> f64 {
    rho_from_mass_difference(mass_difference(initial, grid), grid.torus_length())
}

/// Per-cell densities `(rho_f, rho_g)`.
pub fn macroscopic_densities(state: &SpeciesPair, grid: &GridSpec) -> (SpatialField, SpatialField) {
    (velocity_sum(&state.f, grid, |_| 1.0), velocity_sum(&state.g, grid, |_| 1.0))
}

/// `sum_k dv w(k) h_ik` for every spatial cell.
pub fn velocity_sum(h: &PhaseField, grid: &GridSpec, w: impl Fn(usize) -> f64) -> SpatialField {
    let dv = grid.dv();
    SpatialField::from_fn(grid, |i| {
        let row = h.row(i);
        dv * pairwise_by(row.len(), |k| w(k) * row[k])
    })
}

/// Moments `(u, J, S)` of `h`: mass, flux and `v^2 - D0` weighted moment.
pub fn moments_ujs(h: &PhaseField, grid: &GridSpec, d0: f64) -> (SpatialField, SpatialField, SpatialField) {
    let v = grid.v_centers();
    (
        velocity_sum(h, grid, |_| 1.0),
        velocity_sum(h, grid, |k| v[k]),
        velocity_sum(h, grid, |k| v[k] * v[k] - d0),
    )
}

/// `h = f - g`
pub fn species_difference(state: &SpeciesPair) -> PhaseField {
    state.f.zip_with(&state.g, |a, b| a - b)
}

/// `sum dx dv (f1 f2 / (chi1 rho) + g1 g2 rho / chi2)`
pub fn weighted_inner(
    a: &SpeciesPair,
    b: &SpeciesPair,
    chi1: &VelocityProfile,
    chi2: &VelocityProfile,
    rho: f64,
    grid: &GridSpec,
) -> f64 {
    let nv = grid.nv();
    let n = grid.phase_len();
    let (c1, c2) = (chi1.values(), chi2.values());
    let (af, bf, ag, bg) = (&a.f.values, &b.f.values, &a.g.values, &b.g.values);
    let s = pairwise_by(2 * n, |q| {
        if q < n {
            af[q] * bf[q] / (c1[q % nv] * rho)
        } else {
            let q = q - n;
            ag[q] * bg[q] * rho / c2[q % nv]
        }
    });
    grid.dx() * grid.dv() * s
}

/// The discrete equilibrium `F_inf = (rho chi1, chi2 / rho)` and the
/// profiles it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumData {
    pub rho: f64,
    pub chi1: VelocityProfile,
    pub chi2: VelocityProfile,
    pub f_inf: SpeciesPair,
    /// `(rho^2 D1 + D2) / (rho^2 + 1)`
    pub d0: f64,
}

pub fn build_equilibrium(
    rho: f64,
    chi1: &VelocityProfile,
    chi2: &VelocityProfile,
    grid: &GridSpec,
) -> Result<EquilibriumData> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveRho(rho));
    }
    if chi1.values().len() != grid.nv() || chi2.values().len() != grid.nv() {
        return Err(Error::DimensionMismatch("profile length differs from 2L"));
    }
    let f = PhaseField::from_fn(grid, |_, k| rho * chi1.at(k));
    let g = PhaseField::from_fn(grid, |_, k| chi2.at(k) / rho);
    let r2 = rho * rho;
    let d0 = (r2 * chi1.second_moment() + chi2.second_moment()) / (r2 + 1.0);
    Ok(EquilibriumData { rho, chi1: chi1.clone(), chi2: chi2.clone(), f_inf: SpeciesPair { f, g }, d0 })
}

impl EquilibriumData {
    pub fn inner(&self, a: &SpeciesPair, b: &SpeciesPair, grid: &GridSpec) -> f64 {
        weighted_inner(a, b, &self.chi1, &self.chi2, self.rho, grid)
    }

    pub fn norm(&self, a: &SpeciesPair, grid: &GridSpec) -> f64 {
        libm::sqrt(self.inner(a, a, grid).max(0.0))
    }

    /// Orthogonal projection onto the kernel of the linearized collision
    /// operator.
    pub fn project_pi(&self, state: &SpeciesPair, grid: &GridSpec) -> SpeciesPair {
        let (rf, rg) = macroscopic_densities(state, grid);
        let r2 = self.rho * self.rho;
        let c = |i: usize| (rf.values[i] - rg.values[i]) / (r2 + 1.0);
        SpeciesPair {
            f: PhaseField::from_fn(grid, |i, k| c(i) * r2 * self.chi1.at(k)),
            g: PhaseField::from_fn(grid, |i, k| -c(i) * self.chi2.at(k)),
        }
    }

    /// `(I - Pi) F`
    pub fn project_complement(&self, state: &SpeciesPair, grid: &GridSpec) -> SpeciesPair {
        state.axpy(-1.0, &self.project_pi(state, grid))
    }

    /// Linearized collision operator around `F_inf`.
    pub fn collision_linear(&self, state: &SpeciesPair, grid: &GridSpec) -> SpeciesPair {
        let (rf, rg) = macroscopic_densities(state, grid);
        let rho = self.rho;
        SpeciesPair {
            f: PhaseField::from_fn(grid, |i, k| {
                -rho * self.chi1.at(k) * rg.values[i] - state.f.get(i, k) / rho
            }),
            g: PhaseField::from_fn(grid, |i, k| {
                -self.chi2.at(k) * rf.values[i] / rho - rho * state.g.get(i, k)
            }),
        }
    }

    /// `F - F_inf`
    pub fn perturbation(&self, state: &SpeciesPair) -> SpeciesPair {
        state.axpy(-1.0, &self.f_inf)
    }

    /// `F_inf + G`
    pub fn reconstruct(&self, perturbation: &SpeciesPair) -> SpeciesPair {
        self.f_inf.axpy(1.0, perturbation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProfileKind;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn setup(rho: f64) -> (GridSpec, EquilibriumData) {
        let grid = GridSpec::new(PI, 5, 3, 4.0).unwrap();
        let c1 = ProfileKind::HeavyTailed.discretize(&grid).unwrap();
        let c2 = ProfileKind::Oscillating.discretize(&grid).unwrap();
        let eq = build_equilibrium(rho, &c1, &c2, &grid).unwrap();
        (grid, eq)
    }

    fn pair_from(grid: &GridSpec, vals: &[f64]) -> SpeciesPair {
        SpeciesPair::from_stacked(grid, vals).unwrap()
    }

    fn state_strategy() -> impl Strategy<Value = (f64, alloc::vec::Vec<f64>)> {
        (0.3f64..3.0, proptest::collection::vec(-1.0f64..1.0, 2 * 5 * 6))
    }

    #[test]
    fn rho_inf_star_roots() {
        assert_eq!(rho_from_mass_difference(0.0, PI), 1.0);
        assert!((rho_from_mass_difference(1.5 * PI, PI) - 2.0).abs() < 1e-15);
        assert!((rho_from_mass_difference(-1.5 * PI, PI) - 0.5).abs() < 1e-15);
        for m0 in [-50.0, -1.0, 0.3, 7.0, 1e3] {
            let r = rho_from_mass_difference(m0, 2.0);
            assert!(r > 0.0);
            assert!((2.0 * (r - 1.0 / r) - m0).abs() <= 1e-12 * (1.0 + m0.abs()));
        }
    }

    #[test]
    fn equilibrium_mass_difference() {
        let (grid, eq) = setup(2.0);
        assert!((mass_difference(&eq.f_inf, &grid) - 1.5 * PI).abs() < 1e-12);
        assert!((rho_inf_star(&eq.f_inf, &grid) - 2.0).abs() < 1e-13);
        let (rf, rg) = macroscopic_densities(&eq.f_inf, &grid);
        for i in 0..grid.nx() {
            assert!((rf.values[i] - 2.0).abs() < 1e-14);
            assert!((rg.values[i] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn equilibrium_d0() {
        let (grid, eq) = setup(2.0);
        let (d1, d2) = (eq.chi1.second_moment(), eq.chi2.second_moment());
        assert!((eq.d0 - (4.0 * d1 + d2) / 5.0).abs() < 1e-15);
        assert!(d1.min(d2) <= eq.d0 && eq.d0 <= d1.max(d2));

        let c = eq.chi1.clone();
        let sym = build_equilibrium(1.0, &c, &c, &grid).unwrap();
        assert_eq!(sym.f_inf.f, sym.f_inf.g);
        assert_eq!(sym.d0, c.second_moment());
        assert!(matches!(build_equilibrium(0.0, &c, &c, &grid), Err(Error::NonPositiveRho(_))));
    }

    #[test]
    fn mass_difference_of_equal_species() {
        let grid = GridSpec::new(1.0, 3, 2, 1.0).unwrap();
        let f = PhaseField::from_fn(&grid, |i, k| (i * 7 + k) as f64 * 0.37);
        let pair = SpeciesPair::new(f.clone(), f).unwrap();
        assert_eq!(mass_difference(&pair, &grid), 0.0);
    }

    #[test]
    fn kernel_of_collision() {
        let (grid, eq) = setup(1.7);
        let r2 = eq.rho * eq.rho;
        let c = [0.3, -1.2, 2.0, 0.0, 0.5];
        let f = PhaseField::from_fn(&grid, |i, k| r2 * eq.chi1.at(k) * c[i]);
        let g = PhaseField::from_fn(&grid, |i, k| -eq.chi2.at(k) * c[i]);
        let state = SpeciesPair::new(f, g).unwrap();
        assert!(eq.collision_linear(&state, &grid).max_abs() < 1e-12);
        let p = eq.project_pi(&state, &grid);
        assert!(p.axpy(-1.0, &state).max_abs() < 1e-13);
    }

    #[test]
    fn moments_of_symmetric_data() {
        let (grid, eq) = setup(1.0);
        let h = PhaseField::from_fn(&grid, |_, k| eq.chi1.at(k));
        let (_, j, _) = moments_ujs(&h, &grid, eq.d0);
        assert!(j.values.iter().all(|&v| v.abs() < 1e-16));

        let c = eq.chi1.clone();
        let sym = build_equilibrium(1.0, &c, &c, &grid).unwrap();
        let h = species_difference(&sym.f_inf);
        let (u, j, s) = moments_ujs(&h, &grid, sym.d0);
        for m in [u, j, s] {
            assert!(m.values.iter().all(|&v| v == 0.0));
        }
    }

    fn c_u(rho: f64) -> f64 {
        libm::sqrt((rho * rho + 1.0) / rho)
    }

    proptest! {
        #[test]
        fn projector_properties((rho, vals) in state_strategy(), vals2 in proptest::collection::vec(-1.0f64..1.0, 60)) {
            let (grid, eq) = setup(rho);
            let a = pair_from(&grid, &vals);
            let b = pair_from(&grid, &vals2);
            let pa = eq.project_pi(&a, &grid);
            let tol = 1e-11;

            let ppa = eq.project_pi(&pa, &grid);
            prop_assert!(ppa.axpy(-1.0, &pa).max_abs() <= tol * pa.max_abs().max(1e-300));

            let scale = eq.norm(&a, &grid) * eq.norm(&b, &grid);
            let lhs = eq.inner(&pa, &b, &grid);
            let rhs = eq.inner(&a, &eq.project_pi(&b, &grid), &grid);
            prop_assert!((lhs - rhs).abs() <= tol * scale);

            let orth = eq.inner(&pa, &eq.project_complement(&a, &grid), &grid);
            prop_assert!(orth.abs() <= tol * eq.norm(&a, &grid).powi(2));

            let (u, _, _) = moments_ujs(&species_difference(&a), &grid, eq.d0);
            let expected = c_u(rho) * eq.norm(&pa, &grid);
            prop_assert!((u.l2_norm(&grid) - expected).abs() <= tol * expected.max(1e-300));
        }

        #[test]
        fn bilinearity((rho, vals) in state_strategy(), vals2 in proptest::collection::vec(-1.0f64..1.0, 60), vals3 in proptest::collection::vec(-1.0f64..1.0, 60), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let (grid, eq) = setup(rho);
            let (x, y, z) = (pair_from(&grid, &vals), pair_from(&grid, &vals2), pair_from(&grid, &vals3));
            let lhs = eq.inner(&x.scale(a).axpy(b, &y), &z, &grid);
            let rhs = a * eq.inner(&x, &z, &grid) + b * eq.inner(&y, &z, &grid);
            let scale = (a.abs() * eq.norm(&x, &grid) + b.abs() * eq.norm(&y, &grid)) * eq.norm(&z, &grid);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
        }

        #[test]
        fn microscopic_coercivity((rho, vals) in state_strategy()) {
            let (grid, eq) = setup(rho);
            let a = pair_from(&grid, &vals);
            let la = eq.collision_linear(&a, &grid);
            let lhs = eq.inner(&la, &a, &grid);
            let c_mc = rho.min(1.0 / rho);
            let comp = eq.norm(&eq.project_complement(&a, &grid), &grid);
            let scale = eq.norm(&a, &grid).powi(2) * (rho + 1.0 / rho);
            prop_assert!(lhs <= 1e-12 * scale);
            prop_assert!(lhs <= -c_mc * comp * comp + 1e-12 * scale);
        }
    }
}
