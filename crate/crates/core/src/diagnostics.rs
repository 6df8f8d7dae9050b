//! Entropy instrumentation of the linearized scheme: discrete Poisson solve,
//! modified entropy, per-step estimates and exponential decay fits.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{discrete_gradient, GradientKind, GridSpec, SpatialField};
use crate::ledger::ConstantsLedger;
use crate::linalg::DenseLu;
use crate::state::{moments_ujs, species_difference, EquilibriumData, SpeciesPair};
use crate::sum::pairwise_by;
use crate::{Error, Result};

/// Compatibility tolerance on `sum dx u`, relative to `max(1, sum dx |u|)`.
const MEAN_TOL: f64 = 1e-10;

/// Default floor below which decay data is treated as rounding noise.
pub const DEFAULT_FLOOR: f64 = 1e-14;

/// The wide stencil `(D^c D^c phi)_i = (phi_{i+2} - 2 phi_i + phi_{i-2}) / (4 dx^2)`.
pub fn wide_second_difference(phi: &SpatialField, grid: &GridSpec) -> SpatialField {
    let c = 1.0 / (4.0 * grid.dx() * grid.dx());
    SpatialField::from_fn(grid, |i| {
        let i = i as isize;
        c * (phi.at(i + 2) - 2.0 * phi.at(i) + phi.at(i - 2))
    })
}

/// Factorized bordered system
///
/// ```text
/// [ D^c D^c   dx ] [phi]   [-u]
/// [ dx^T       0 ] [mu ] = [ 0]
/// ```
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    nx: usize,
    dx: f64,
    lu: DenseLu,
}

impl PoissonSolver {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        let n = grid.nx();
        if n % 2 == 0 {
            return Err(Error::EvenCellCount(n));
        }
        let (dx, m) = (grid.dx(), n + 1);
        let c = 1.0 / (4.0 * dx * dx);
        let mut a = vec![0.0; m * m];
        for i in 0..n {
            a[i * m + i] -= 2.0 * c;
            a[i * m + (i + 2) % n] += c;
            a[i * m + (i + n - 2) % n] += c;
            a[i * m + n] = dx;
            a[n * m + i] = dx;
        }
        let lu = DenseLu::factor(m, a).map_err(|_| Error::SingularOperator { block: 0 })?;
        Ok(Self { nx: n, dx, lu })
    }

    /// Mean-zero `phi` with `D^c D^c phi = -u`.
    pub fn solve(&self, u: &SpatialField) -> Result<SpatialField> {
        if u.len() != self.nx {
            return Err(Error::DimensionMismatch("Poisson right-hand side length"));
        }
        let mean = self.dx * pairwise_by(self.nx, |i| u.values[i]);
        let scale = self.dx * pairwise_by(self.nx, |i| u.values[i].abs());
        if !(mean.abs() <= MEAN_TOL * scale.max(1.0)) {
            return Err(Error::NonZeroMean(mean));
        }
        let shift = mean / (self.dx * self.nx as f64);
        let mut b: Vec<f64> = u.values.iter().map(|v| -(v - shift)).collect();
        b.push(0.0);
        self.lu.solve(&mut b);
        b.pop();
        Ok(SpatialField::new(b))
    }
}

pub fn solve_discrete_poisson(u: &SpatialField, grid: &GridSpec) -> Result<SpatialField> {
    PoissonSolver::new(grid)?.solve(u)
}

/// `max_i |(D^c D^c phi)_i + u_i|`
pub fn poisson_residual(phi: &SpatialField, u: &SpatialField, grid: &GridSpec) -> f64 {
    wide_second_difference(phi, grid).axpy(1.0, u).max_abs()
}

/// Potentials of the current and the previous step.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialState {
    pub phi_current: SpatialField,
    pub phi_previous: Option<SpatialField>,
}

impl PotentialState {
    /// Potential of `state` (the perturbation), without history.
    pub fn initial(state: &SpeciesPair, solver: &PoissonSolver, grid: &GridSpec) -> Result<Self> {
        Ok(Self { phi_current: potential_of(state, solver, grid)?, phi_previous: None })
    }

    /// Shifts the current potential into the history slot.
    pub fn advance(&self, state: &SpeciesPair, solver: &PoissonSolver, grid: &GridSpec) -> Result<Self> {
        Ok(Self { phi_current: potential_of(state, solver, grid)?, phi_previous: Some(self.phi_current.clone()) })
    }

    /// `true` before the second step, when the entropy lacks its time term.
    pub fn is_partial(&self) -> bool {
        self.phi_previous.is_none()
    }
}

fn potential_of(state: &SpeciesPair, solver: &PoissonSolver, grid: &GridSpec) -> Result<SpatialField> {
    let (u, _, _) = moments_ujs(&species_difference(state), grid, 0.0);
    solver.solve(&u)
}

/// `H = 1/2 ||F||^2 + delta <J_h, D^c phi^n> + delta/(2 dt) sum dx (D^c phi^n - D^c phi^{n-1})^2`,
/// the last term omitted when the potential has no history.
pub fn modified_entropy(
    state: &SpeciesPair,
    pot: &PotentialState,
    delta: f64,
    dt: f64,
    ledger: &ConstantsLedger,
    grid: &GridSpec,
    eq: &EquilibriumData,
) -> Result<f64> {
    let ceiling = ledger.delta_ceiling();
    if !(delta > 0.0 && delta < ceiling) {
        return Err(Error::DeltaOutOfRange { delta, ceiling });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    let norm = eq.norm(state, grid);
    let (_, j, _) = moments_ujs(&species_difference(state), grid, eq.d0);
    let dphi = discrete_gradient(&pot.phi_current, GradientKind::Centered, grid);
    let mut h = 0.5 * norm * norm + delta * j.inner(&dphi, grid);
    if let Some(prev) = &pot.phi_previous {
        let dprev = discrete_gradient(prev, GradientKind::Centered, grid);
        let diff = dphi.axpy(-1.0, &dprev);
        h += delta / (2.0 * dt) * diff.inner(&diff, grid);
    }
    Ok(h)
}

/// Both sides of `||D^c phi|| <= C_P C_u ||Pi F||`.
pub fn phi_gradient_bound(
    state: &SpeciesPair,
    pot: &PotentialState,
    ledger: &ConstantsLedger,
    grid: &GridSpec,
    eq: &EquilibriumData,
) -> (f64, f64) {
    let lhs = discrete_gradient(&pot.phi_current, GradientKind::Centered, grid).l2_norm(grid);
    let rhs = ledger.c_p * ledger.c_u * eq.norm(&eq.project_pi(state, grid), grid);
    (lhs, rhs)
}

/// Both sides of
/// `||D^c phi^{n+1} - D^c phi^n|| <= dt ||J_h^{n+1}|| + 2 dt lambda C_u ||Pi F^{n+1}||`,
/// or `None` without history.
pub fn phi_increment_bound(
    next: &SpeciesPair,
    pot: &PotentialState,
    dt: f64,
    ledger: &ConstantsLedger,
    grid: &GridSpec,
    eq: &EquilibriumData,
) -> Option<(f64, f64)> {
    let prev = pot.phi_previous.as_ref()?;
    let d1 = discrete_gradient(&pot.phi_current, GradientKind::Centered, grid);
    let d0 = discrete_gradient(prev, GradientKind::Centered, grid);
    let lhs = d1.axpy(-1.0, &d0).l2_norm(grid);
    let (_, j, _) = moments_ujs(&species_difference(next), grid, eq.d0);
    let rhs = dt * j.l2_norm(grid) + 2.0 * dt * ledger.lambda * ledger.c_u * eq.norm(&eq.project_pi(next, grid), grid);
    Some((lhs, rhs))
}

/// `-<L F, F> - C_mc ||(I - Pi) F||^2`; non-negative when microscopic
/// coercivity holds.
pub fn microscopic_coercivity_slack(state: &SpeciesPair, ledger: &ConstantsLedger, grid: &GridSpec, eq: &EquilibriumData) -> f64 {
    let lf = eq.collision_linear(state, grid);
    let perp = eq.norm(&eq.project_complement(state, grid), grid);
    -eq.inner(&lf, state, grid) - ledger.c_mc * perp * perp
}

/// `-dt K_delta ||F^{n+1}||^2 - (H^{n+1} - H^n)`; non-negative when the
/// entropy dissipates at the certified rate.
pub fn entropy_dissipation_slack(h_prev: f64, h_next: f64, dt: f64, k_delta: f64, norm_next: f64) -> f64 {
    -dt * k_delta * norm_next * norm_next - (h_next - h_prev)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Minus the slope of `ln value` against `t`.
    pub kappa: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of `value ~ prefactor * exp(-kappa t)` on the points with
/// `t_lo <= t <= t_hi`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    fit_decay_rate_with_floor(series, window, DEFAULT_FLOOR)
}

pub fn fit_decay_rate_with_floor(series: &[(f64, f64)], window: (f64, f64), floor: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= window.0 && t <= window.1).collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData(pts.len()));
    }
    if pts.iter().any(|&(_, v)| !(v > floor)) {
        return Err(Error::NonPositiveValues);
    }
    let n = pts.len();
    let ys: Vec<f64> = pts.iter().map(|&(_, v)| libm::log(v)).collect();
    let tm = pairwise_by(n, |q| pts[q].0) / n as f64;
    let ym = pairwise_by(n, |q| ys[q]) / n as f64;
    let stt = pairwise_by(n, |q| (pts[q].0 - tm) * (pts[q].0 - tm));
    let sty = pairwise_by(n, |q| (pts[q].0 - tm) * (ys[q] - ym));
    let syy = pairwise_by(n, |q| (ys[q] - ym) * (ys[q] - ym));
    if !(stt > 0.0) {
        return Err(Error::InsufficientData(1));
    }
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let sse = pairwise_by(n, |q| {
        let e = ys[q] - intercept - slope * pts[q].0;
        e * e
    });
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(DecayFit { kappa: -slope, prefactor: libm::exp(intercept), r_squared, points: n })
}

/// Default window: from 20% of the horizon to the first time the value drops
/// to `1e3 * floor` (or the horizon).
pub fn default_fit_window(series: &[(f64, f64)], horizon: f64, floor: f64) -> (f64, f64) {
    let t_lo = 0.2 * horizon;
    let t_hi = series
        .iter()
        .find(|&&(t, v)| t >= t_lo && v <= 1e3 * floor)
        .map_or(horizon, |&(t, _)| t);
    (t_lo, t_hi)
}

/// One row of a run's time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub weighted_norm: f64,
    pub density_norms: (f64, f64),
    pub entropy: Option<f64>,
    pub mass_difference: f64,
    pub bounds_pass: bool,
    pub dt_used: f64,
    pub newton_iterations: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseField;
    use crate::ledger::{constants_ledger, DEFAULT_DELTA_FRACTION};
    use crate::profile::ProfileKind;
    use crate::state::build_equilibrium;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn poisson_zero_and_cosine() {
        let grid = GridSpec::new(2.0 * PI, 11, 2, 5.0).unwrap();
        let solver = PoissonSolver::new(&grid).unwrap();
        assert_eq!(solver.solve(&SpatialField::zeros(&grid)).unwrap().max_abs(), 0.0);
        let n = grid.nx() as f64;
        for k in 1..5 {
            let u = SpatialField::from_fn(&grid, |i| libm::cos(2.0 * PI * k as f64 * grid.x_centers()[i] / grid.torus_length()));
            let phi = solver.solve(&u).unwrap();
            let s = libm::sin(2.0 * PI * k as f64 / n);
            let factor = (grid.dx() / s) * (grid.dx() / s);
            for i in 0..grid.nx() {
                assert!((phi.values[i] - factor * u.values[i]).abs() < 1e-11 * factor.max(1.0));
            }
        }
    }

    #[test]
    fn poisson_rejects_mean() {
        let grid = GridSpec::new(1.0, 5, 1, 1.0).unwrap();
        let u = SpatialField::from_fn(&grid, |_| 1.0);
        assert!(matches!(solve_discrete_poisson(&u, &grid), Err(Error::NonZeroMean(_))));
        assert!(PoissonSolver::new(&GridSpec::new(1.0, 3, 1, 1.0).unwrap()).is_ok());
    }

    proptest! {
        #[test]
        fn poisson_postconditions(h in 1usize..20, vals in proptest::collection::vec(-1.0f64..1.0, 41)) {
            let grid = GridSpec::new(3.0, 2 * h + 1, 1, 1.0).unwrap();
            let mut u = SpatialField::from_fn(&grid, |i| vals[i]);
            let m = u.integral(&grid) / grid.torus_length();
            u.values.iter_mut().for_each(|v| *v -= m);
            let phi = solve_discrete_poisson(&u, &grid).unwrap();
            prop_assert!(poisson_residual(&phi, &u, &grid) <= 1e-11);
            prop_assert!(phi.integral(&grid).abs() <= 1e-12);
        }
    }

    #[test]
    fn decay_fit_exact() {
        let series: Vec<(f64, f64)> = (0..20).map(|q| (0.5 * q as f64, 3.0 * libm::exp(-(q as f64)))).collect();
        let fit = fit_decay_rate(&series, (0.0, 100.0)).unwrap();
        assert!((fit.kappa - 2.0).abs() < 1e-10);
        assert!((fit.prefactor - 3.0).abs() < 1e-9);
        assert!(fit.r_squared >= 1.0 - 1e-12);

        let flat: Vec<(f64, f64)> = (0..8).map(|q| (q as f64, 0.7)).collect();
        assert_eq!(fit_decay_rate(&flat, (0.0, 10.0)).unwrap().kappa, 0.0);
        assert_eq!(fit_decay_rate(&flat, (0.0, 3.0)), Err(Error::InsufficientData(4)));
        let mut bad = flat.clone();
        bad[5].1 = 0.0;
        assert_eq!(fit_decay_rate(&bad, (0.0, 10.0)), Err(Error::NonPositiveValues));
    }

    #[test]
    fn default_window_stops_at_plateau() {
        let series: Vec<(f64, f64)> = (0..=100).map(|q| (q as f64, libm::exp(-(q as f64)).max(1e-16))).collect();
        let (lo, hi) = default_fit_window(&series, 100.0, DEFAULT_FLOOR);
        assert_eq!(lo, 20.0);
        assert_eq!(hi, 26.0);
        let fit = fit_decay_rate(&series, (lo, hi)).unwrap();
        assert!((fit.kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_basics() {
        let grid = GridSpec::new(PI, 9, 3, 6.0).unwrap();
        let c1 = ProfileKind::Gaussian.discretize(&grid).unwrap();
        let c2 = ProfileKind::HeavyTailed.discretize(&grid).unwrap();
        let eq = build_equilibrium(1.3, &c1, &c2, &grid).unwrap();
        let ledger = constants_ledger(&c1, &c2, 1.3, &grid, 3.0, 0.1, DEFAULT_DELTA_FRACTION).unwrap();
        let solver = PoissonSolver::new(&grid).unwrap();
        let zero = SpeciesPair::zeros(&grid);
        let pot = PotentialState::initial(&zero, &solver, &grid).unwrap();
        assert!(pot.is_partial());
        assert_eq!(modified_entropy(&zero, &pot, ledger.delta, 0.1, &ledger, &grid, &eq).unwrap(), 0.0);
        let err = modified_entropy(&zero, &pot, ledger.delta_ceiling(), 0.1, &ledger, &grid, &eq);
        assert!(matches!(err, Err(Error::DeltaOutOfRange { .. })));

        let x = grid.x_centers();
        let state = SpeciesPair {
            f: PhaseField::from_fn(&grid, |i, k| c1.at(k) * libm::cos(2.0 * x[i]) * (1.0 + grid.v_centers()[k])),
            g: PhaseField::from_fn(&grid, |i, k| c2.at(k) * libm::sin(2.0 * x[i])),
        };
        let pot = PotentialState::initial(&state, &solver, &grid).unwrap();
        let (lhs, rhs) = phi_gradient_bound(&state, &pot, &ledger, &grid, &eq);
        assert!(lhs > 0.0 && lhs <= rhs);
        let h = modified_entropy(&state, &pot, ledger.delta, 0.1, &ledger, &grid, &eq).unwrap();
        let n2 = eq.norm(&state, &grid).powi(2);
        assert!(ledger.c_delta_lower * n2 <= h && h <= ledger.c_delta_upper * n2);
        assert!(microscopic_coercivity_slack(&state, &ledger, &grid, &eq) >= -1e-12);
        let next = pot.advance(&state.scale(0.5), &solver, &grid).unwrap();
        assert!(!next.is_partial());
        assert_eq!(next.phi_previous.as_ref(), Some(&pot.phi_current));
    }
}
