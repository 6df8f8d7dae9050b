//! Hypocoercivity constants of the discrete linearized problem.
//!
//! The velocity-moment bounds are instantiated with the actual discrete
//! moments of the supplied profiles.

use crate::grid::{poincare_constant, GridSpec};
use crate::profile::VelocityProfile;
use crate::sum::pairwise_by;
use crate::{Error, Result};

/// Default fraction of the admissible ceiling used for `delta`.
pub const DEFAULT_DELTA_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsLedger {
    /// Microscopic coercivity `min(rho, 1/rho)`.
    pub c_mc: f64,
    pub c_u: f64,
    pub c_j1: f64,
    pub c_s: f64,
    pub c_j2: f64,
    pub c_p: f64,
    pub lambda: f64,
    pub d0: f64,
    /// `C_S C_u + C_J2 C_P C_u + 4 lambda C_J1 C_u`
    pub c_tilde: f64,
    pub alpha1: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    pub delta_3: f64,
    pub delta: f64,
    pub k_delta: f64,
    pub c_delta_upper: f64,
    pub c_delta_lower: f64,
    pub dt_max: f64,
    pub kappa: f64,
}

/// `sum_k dv (v_k^2 - d0)^2 chi_k`
fn centered_fourth(chi: &VelocityProfile, d0: f64, grid: &GridSpec) -> f64 {
    let v = grid.v_centers();
    grid.dv()
        * pairwise_by(chi.values().len(), |k| {
            let w = v[k] * v[k] - d0;
            w * w * chi.at(k)
        })
}

pub fn constants_ledger(
    chi1: &VelocityProfile,
    chi2: &VelocityProfile,
    rho: f64,
    grid: &GridSpec,
    lambda: f64,
    dt_max: f64,
    delta_fraction: f64,
) -> Result<ConstantsLedger> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveRho(rho));
    }
    if !(delta_fraction > 0.0 && delta_fraction < 1.0) {
        return Err(Error::InvalidDeltaFraction(delta_fraction));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter("lambda must be non-negative"));
    }
    if !(dt_max > 0.0 && dt_max.is_finite()) {
        return Err(Error::InvalidParameter("dt_max must be positive"));
    }

    let r2 = rho * rho;
    let (d1, d2) = (chi1.second_moment(), chi2.second_moment());
    let (q1, q2) = (chi1.fourth_moment(), chi2.fourth_moment());
    let d0 = (r2 * d1 + d2) / (r2 + 1.0);

    let c_mc = rho.min(1.0 / rho);
    let c_u = libm::sqrt((r2 + 1.0) / rho);
    let c_j1 = libm::sqrt(2.0 * (rho * d1).max(d2 / rho));

    // With actual moments Q - 2 D0 D + D0^2 is the centered fourth moment and
    // cannot be negative; the conservative bound is kept for rounding edge
    // cases.
    let mut s1 = q1 - 2.0 * d0 * d1 + d0 * d0;
    let mut s2 = q2 - 2.0 * d0 * d2 + d0 * d0;
    if s1 < 0.0 || s2 < 0.0 {
        let (lo, hi) = (d1.min(d2), d1.max(d2));
        s1 = (q1 - 2.0 * lo * d1 + hi * hi).max(centered_fourth(chi1, d0, grid));
        s2 = (q2 - 2.0 * lo * d2 + hi * hi).max(centered_fourth(chi2, d0, grid));
    }
    let c_s = libm::sqrt(2.0 * (rho * s1).max(s2 / rho));
    let c_j2 = rho.max(1.0 / rho) * c_j1;
    let c_p = poincare_constant(grid)?;

    let c_tilde = c_s * c_u + c_j2 * c_p * c_u + 4.0 * lambda * c_j1 * c_u;
    let delta_1 = c_mc / (c_j1 * c_j1);
    let delta_2 = c_mc * d0 * c_u * c_u / (c_tilde * c_tilde + c_j1 * c_j1 * d0 * c_u * c_u);
    let delta_3 = 1.0 / (2.0 * c_j1 * c_u * c_p);
    let delta = delta_fraction * delta_1.min(delta_2).min(delta_3);

    let alpha1 = c_j1 * c_j1 + 4.0 * (lambda * c_u) * (lambda * c_u);
    let k_delta = 0.5 * (c_mc - delta * c_j1 * c_j1).min(delta * d0 * c_u * c_u);
    let c_delta_upper = 0.5 + delta * c_j1 * c_u * c_p + delta * alpha1 * dt_max;
    let c_delta_lower = 0.5 - delta * c_j1 * c_u * c_p;
    let kappa = k_delta / c_delta_upper;

    Ok(ConstantsLedger {
        c_mc,
        c_u,
        c_j1,
        c_s,
        c_j2,
        c_p,
        lambda,
        d0,
        c_tilde,
        alpha1,
        delta_1,
        delta_2,
        delta_3,
        delta,
        k_delta,
        c_delta_upper,
        c_delta_lower,
        dt_max,
        kappa,
    })
}

impl ConstantsLedger {
    /// Admissible ceiling `min(delta_1, delta_2, delta_3)`.
    pub fn delta_ceiling(&self) -> f64 {
        self.delta_1.min(self.delta_2).min(self.delta_3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialField;
    use crate::profile::ProfileKind;
    use crate::state::{build_equilibrium, moments_ujs, species_difference, SpeciesPair};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    const KINDS: [ProfileKind; 3] = [ProfileKind::Gaussian, ProfileKind::HeavyTailed, ProfileKind::Oscillating];

    #[test]
    fn symmetric_point() {
        let grid = GridSpec::new(PI, 11, 4, 6.0).unwrap();
        let chi = ProfileKind::Gaussian.discretize(&grid).unwrap();
        let l = constants_ledger(&chi, &chi, 1.0, &grid, 3.0, 0.3, 0.9).unwrap();
        assert_eq!(l.c_mc, 1.0);
        assert!((l.c_u - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l.c_j2, l.c_j1);
    }

    #[test]
    fn reference_grid_positivity() {
        let grid = GridSpec::new(PI, 101, 16, 12.0).unwrap();
        for a in KINDS {
            for b in KINDS {
                let c1 = a.discretize(&grid).unwrap();
                let c2 = b.discretize(&grid).unwrap();
                for rho in [0.4, 1.0, 2.5] {
                    let l = constants_ledger(&c1, &c2, rho, &grid, 6.0, 0.3, DEFAULT_DELTA_FRACTION).unwrap();
                    for c in [
                        l.c_mc, l.c_u, l.c_j1, l.c_s, l.c_j2, l.c_p, l.c_tilde, l.alpha1, l.delta_1,
                        l.delta_2, l.delta_3, l.delta, l.k_delta, l.c_delta_upper, l.c_delta_lower, l.kappa,
                    ] {
                        assert!(c > 0.0 && c.is_finite());
                    }
                    assert!(l.delta < l.delta_ceiling());
                }
            }
        }
    }

    #[test]
    fn near_ceiling_still_positive() {
        let grid = GridSpec::new(PI, 31, 8, 12.0).unwrap();
        let c1 = ProfileKind::HeavyTailed.discretize(&grid).unwrap();
        let c2 = ProfileKind::Oscillating.discretize(&grid).unwrap();
        let l = constants_ledger(&c1, &c2, 1.3, &grid, 6.0, 0.3, 0.99).unwrap();
        assert!(l.k_delta > 0.0 && l.c_delta_lower > 0.0);
    }

    #[test]
    fn rejects_bad_fraction() {
        let grid = GridSpec::new(PI, 3, 1, 1.0).unwrap();
        let c = ProfileKind::Gaussian.discretize(&grid).unwrap();
        for frac in [0.0, 1.0, -0.2, 1.5] {
            assert_eq!(
                constants_ledger(&c, &c, 1.0, &grid, 1.0, 0.3, frac),
                Err(Error::InvalidDeltaFraction(frac))
            );
        }
    }

    proptest! {
        #[test]
        fn moment_estimates(
            rho in 0.3f64..3.0,
            a in 0usize..3,
            b in 0usize..3,
            vals in proptest::collection::vec(-1.0f64..1.0, 2 * 7 * 8),
        ) {
            let grid = GridSpec::new(2.0, 7, 4, 5.0).unwrap();
            let c1 = KINDS[a].discretize(&grid).unwrap();
            let c2 = KINDS[b].discretize(&grid).unwrap();
            let eq = build_equilibrium(rho, &c1, &c2, &grid).unwrap();
            let l = constants_ledger(&c1, &c2, rho, &grid, 1.0, 0.3, 0.9).unwrap();
            let state = SpeciesPair::from_stacked(&grid, &vals).unwrap();
            let comp = eq.norm(&eq.project_complement(&state, &grid), &grid);
            let full = eq.norm(&state, &grid);
            let slack = 1.0 + 1e-12;

            let (_, j, s) = moments_ujs(&species_difference(&state), &grid, eq.d0);
            prop_assert!(j.l2_norm(&grid) <= l.c_j1 * full * slack);
            prop_assert!(j.l2_norm(&grid) <= l.c_j1 * comp * slack);
            prop_assert!(s.l2_norm(&grid) <= l.c_s * comp * slack);

            let jf = moments_ujs(&state.f, &grid, 0.0).1;
            let jg = moments_ujs(&state.g, &grid, 0.0).1;
            let mixed = jf.axpy(-rho * rho, &jg);
            let mixed = SpatialField::new(mixed.values.iter().map(|x| x / rho).collect());
            prop_assert!(mixed.l2_norm(&grid) <= l.c_j2 * comp * slack);
        }
    }
}
