//! Discrete velocity profiles (equilibrium shapes) and their moments.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::grid::GridSpec;
use crate::sum::pairwise_by;
use crate::{Error, Result};

/// Relative tolerance used when checking that mirror samples agree.
const SYMMETRY_TOL: f64 = 1e-13;

/// Normalized cell values `chi_k` on the velocity midpoints together with
/// their second and fourth moments.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    values: Vec<f64>,
    second_moment: f64,
    fourth_moment: f64,
}

impl VelocityProfile {
    /// Normalized cell values, indexed by storage velocity index.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// `sum_k dv v_k^2 chi_k`
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// `sum_k dv v_k^4 chi_k`
    pub fn fourth_moment(&self) -> f64 {
        self.fourth_moment
    }

    pub fn mass(&self, grid: &GridSpec) -> f64 {
        self.moment(grid, 0)
    }

    /// `sum_k dv v_k^p chi_k`
    ///
    /// Mirror pairs are combined before summation, so odd moments vanish
    /// exactly.
    pub fn moment(&self, grid: &GridSpec, p: i32) -> f64 {
        let v = grid.v_centers();
        let vals = &self.values;
        half_sum(grid, |k, m| libm::pow(v[k], p as f64) * vals[k] + libm::pow(v[m], p as f64) * vals[m])
    }
}

/// Samples `profile` on the velocity midpoints, checks positivity and mirror
/// symmetry, and normalizes to unit discrete mass.
///
/// With `symmetrize` set, mirror pairs are averaged instead of compared.
pub fn discretize_profile(
    profile: impl Fn(f64) -> f64,
    grid: &GridSpec,
    symmetrize: bool,
) -> Result<VelocityProfile> {
    let v = grid.v_centers();
    let mut samples: Vec<f64> = v.iter().map(|&vk| profile(vk)).collect();
    for (index, &value) in samples.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveSample { index, value });
        }
    }

    let half = grid.half_nv();
    for k in half..grid.nv() {
        let m = grid.mirror(k);
        let (a, b) = (samples[k], samples[m]);
        if symmetrize {
            let avg = 0.5 * (a + b);
            samples[k] = avg;
            samples[m] = avg;
        } else if (a - b).abs() > SYMMETRY_TOL * a.max(b) {
            return Err(Error::AsymmetricProfile { index: k });
        } else {
            samples[m] = a;
        }
    }

    let mass = half_sum(grid, |k, m| samples[k] + samples[m]);
    let values: Vec<f64> = samples.iter().map(|s| s / mass).collect();
    let second_moment = half_sum(grid, |k, _| 2.0 * v[k] * v[k] * values[k]);
    let fourth_moment = half_sum(grid, |k, _| {
        let v2 = v[k] * v[k];
        2.0 * v2 * v2 * values[k]
    });
    Ok(VelocityProfile { values, second_moment, fourth_moment })
}

/// `dv * sum_{k >= L} term(k, mirror(k))`
fn half_sum(grid: &GridSpec, term: impl Fn(usize, usize) -> f64) -> f64 {
    let half = grid.half_nv();
    grid.dv() * pairwise_by(half, |q| term(half + q, grid.mirror(half + q)))
}

/// Maxwellian `exp(-v^2/2) / sqrt(2 pi)`.
pub fn gaussian(v: f64) -> f64 {
    libm::exp(-0.5 * v * v) / libm::sqrt(2.0 * PI)
}

/// `1 / (1 + v^4)`
pub fn heavy_tailed(v: f64) -> f64 {
    let v2 = v * v;
    1.0 / (1.0 + v2 * v2)
}

/// `(cos(pi v) + 1.1) / (1 + v^6)`
pub fn oscillating(v: f64) -> f64 {
    let v2 = v * v;
    (libm::cos(PI * v) + 1.1) / (1.0 + v2 * v2 * v2)
}

/// The three built-in equilibrium shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Gaussian,
    HeavyTailed,
    Oscillating,
}

impl ProfileKind {
    pub fn eval(self, v: f64) -> f64 {
        match self {
            Self::Gaussian => gaussian(v),
            Self::HeavyTailed => heavy_tailed(v),
            Self::Oscillating => oscillating(v),
        }
    }

    pub fn discretize(self, grid: &GridSpec) -> Result<VelocityProfile> {
        discretize_profile(|v| self.eval(v), grid, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_grid() -> GridSpec {
        GridSpec::new(PI, 101, 16, 12.0).unwrap()
    }

    #[test]
    fn builtin_profiles_satisfy_invariants() {
        for grid in [reference_grid(), GridSpec::new(1.0, 3, 1, 1.0).unwrap(), GridSpec::new(2.0, 7, 5, 4.0).unwrap()] {
            for kind in [ProfileKind::Gaussian, ProfileKind::HeavyTailed, ProfileKind::Oscillating] {
                let p = kind.discretize(&grid).unwrap();
                assert!(p.values().iter().all(|&c| c > 0.0));
                for k in 0..grid.nv() {
                    assert_eq!(p.at(k), p.at(grid.mirror(k)));
                }
                assert!((p.mass(&grid) - 1.0).abs() < 1e-14);
                assert_eq!(p.moment(&grid, 1), 0.0);
                assert!(p.second_moment() > 0.0 && p.fourth_moment() > 0.0);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_samples() {
        let g = GridSpec::new(1.0, 3, 2, 2.0).unwrap();
        let err = discretize_profile(|v| v * v - 0.5, &g, false).unwrap_err();
        assert!(matches!(err, Error::NonPositiveSample { .. }));
    }

    #[test]
    fn asymmetric_profiles() {
        let g = GridSpec::new(1.0, 3, 2, 2.0).unwrap();
        let skewed = |v: f64| gaussian(v) * (1.0 + 0.1 * v);
        assert!(matches!(
            discretize_profile(skewed, &g, false),
            Err(Error::AsymmetricProfile { .. })
        ));
        let p = discretize_profile(skewed, &g, true).unwrap();
        for k in 0..g.nv() {
            assert_eq!(p.at(k), p.at(g.mirror(k)));
        }
        assert_eq!(p.moment(&g, 1), 0.0);
    }

    #[test]
    fn oscillating_floor() {
        let mut v = -12.0;
        while v <= 12.0 {
            assert!(oscillating(v) > 0.0);
            v += 1e-3;
        }
    }
}
