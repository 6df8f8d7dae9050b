//! Initial data and velocity profiles.

use std::f64::consts::PI;

use genrec_core::grid::{GridSpec, PhaseField};
use genrec_core::profile::{discretize_profile, gaussian, VelocityProfile};
use genrec_core::SpeciesPair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_profile, InitialData, ProfileSource, RunConfig};
use crate::RunError;

/// Nodes and weights of the 4-point Gauss–Legendre rule on `[-1, 1]`.
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Tensor Gauss–Legendre average of `h` over phase-space cell `(i, k)`.
pub fn cell_average(grid: &GridSpec, i: usize, k: usize, h: impl Fn(f64, f64) -> f64) -> f64 {
    let (xc, vc) = (grid.x_centers()[i], grid.v_centers()[k]);
    let (hx, hv) = (0.5 * grid.dx(), 0.5 * grid.dv());
    let mut acc = 0.0;
    for (a, wa) in GL4 {
        for (b, wb) in GL4 {
            acc += wa * wb * h(xc + hx * a, vc + hv * b);
        }
    }
    0.25 * acc
}

fn averaged(grid: &GridSpec, h: impl Fn(f64, f64) -> f64) -> PhaseField {
    PhaseField::from_fn(grid, |i, k| cell_average(grid, i, k, &h))
}

fn bump(x: f64, v: f64) -> f64 {
    let dx = x - 0.5 * PI;
    (-(dx * dx + 0.5 * v * v) / 0.2).exp()
}

/// Full distributions `(f_I, g_I)` of a preset. `NearEquilibrium` needs the
/// profiles and uses `rho = 1.3`.
pub fn initial_distributions(
    cfg: &RunConfig,
    grid: &GridSpec,
    chi1: &VelocityProfile,
    chi2: &VelocityProfile,
) -> SpeciesPair {
    match cfg.initial {
        InitialData::Bump => SpeciesPair {
            f: averaged(grid, |x, v| bump(x, v) / 0.1),
            g: averaged(grid, |x, v| (1.0 + (4.0 * x).cos()) * bump(x, v)),
        },
        InitialData::Smooth => SpeciesPair {
            f: averaged(grid, |x, v| gaussian(v) * v.powi(4) * (1.0 + (2.0 * x).cos())),
            g: averaged(grid, |x, v| (1.0 + (4.0 * x).cos()) * bump(x, v)),
        },
        InitialData::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let n = grid.phase_len();
            let mut draw = || (0..n).map(|_| rng.random::<f64>()).collect::<Vec<f64>>();
            let f = draw();
            let g = draw();
            SpeciesPair {
                f: PhaseField::from_values(grid, f).expect("grid-sized"),
                g: PhaseField::from_values(grid, g).expect("grid-sized"),
            }
        }
        InitialData::NearEquilibrium => {
            let rho = NEAR_EQUILIBRIUM_RHO;
            let x = grid.x_centers();
            let v = grid.v_centers();
            let w = 2.0 * PI / grid.torus_length();
            SpeciesPair {
                f: PhaseField::from_fn(grid, |i, k| {
                    rho * chi1.at(k) * (1.0 + 0.15 * (w * x[i]).cos() * (0.5 * v[k]).cos())
                }),
                g: PhaseField::from_fn(grid, |i, k| chi2.at(k) / rho * (1.0 - 0.15 * (2.0 * w * x[i]).sin())),
            }
        }
    }
}

/// Equilibrium density the near-equilibrium preset is built around.
pub const NEAR_EQUILIBRIUM_RHO: f64 = 1.3;

pub fn load_profile(name: &str, grid: &GridSpec) -> Result<VelocityProfile, RunError> {
    match parse_profile(name) {
        Some(ProfileSource::Builtin(kind)) => Ok(kind.discretize(grid)?),
        Some(ProfileSource::File(path)) => {
            let text = std::fs::read_to_string(&path).map_err(|source| RunError::Io { path: path.clone(), source })?;
            let samples: Vec<f64> = text
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| RunError::Profile(format!("{}: {e}", path.display())))?;
            if samples.len() != grid.nv() {
                return Err(RunError::Profile(format!(
                    "{}: expected {} samples, found {}",
                    path.display(),
                    grid.nv(),
                    samples.len()
                )));
            }
            // Samples are indexed by velocity cell; the closure is only ever
            // called at cell centres.
            let v = grid.v_centers();
            let lookup = |vk: f64| {
                let k = v.iter().position(|&c| c == vk).expect("velocity centre");
                samples[k]
            };
            Ok(discretize_profile(lookup, grid, false)?)
        }
        None => Err(RunError::Profile(format!("unknown profile {name:?}"))),
    }
}
