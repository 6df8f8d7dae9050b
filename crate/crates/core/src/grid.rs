//! Uniform phase-space mesh on the torus, spatial/phase fields and the
//! discrete spatial difference operators.
//!
//! Velocity cells are stored with a contiguous 0-based index `k in 0..2L`.
//! The symmetric labelling `j in -L+1..=L` used in the analysis maps to it
//! through `k = j + L - 1`; the mirror cell `j -> -j + 1` is `k -> 2L - 1 - k`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::sum::pairwise_by;
use crate::{Error, Result};

/// Uniform discretization of `T x [-v*, v*]` with `N` spatial cells and `2L`
/// velocity cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    torus_length: f64,
    nx: usize,
    half_nv: usize,
    v_star: f64,
    dx: f64,
    dv: f64,
    x_centers: Vec<f64>,
    v_interfaces: Vec<f64>,
    v_centers: Vec<f64>,
}

impl GridSpec {
    /// Builds the grid. `nx` must be odd and at least 3.
    pub fn new(torus_length: f64, nx: usize, half_nv: usize, v_star: f64) -> Result<Self> {
        if !(torus_length > 0.0 && torus_length.is_finite()) {
            return Err(Error::InvalidGrid("torus length must be positive"));
        }
        if !(v_star > 0.0 && v_star.is_finite()) {
            return Err(Error::InvalidGrid("velocity cutoff must be positive"));
        }
        if half_nv == 0 {
            return Err(Error::InvalidGrid("L must be at least 1"));
        }
        if nx % 2 == 0 {
            return Err(Error::EvenCellCount(nx));
        }
        if nx < 3 {
            return Err(Error::InvalidGrid("N must be at least 3"));
        }

        let dx = torus_length / nx as f64;
        let dv = v_star / half_nv as f64;
        let x_centers = (0..nx).map(|i| (i as f64 + 0.5) * dx).collect();

        // Interfaces v_{k-1/2}, k = 0..=2L. The upper half is built first and
        // mirrored so that v_{j+1/2} = -v_{j-1/2} holds bit for bit.
        let nv = 2 * half_nv;
        let mut v_interfaces = vec![0.0; nv + 1];
        for k in half_nv..=nv {
            v_interfaces[k] = if k == nv { v_star } else { (k - half_nv) as f64 * dv };
        }
        for k in 0..half_nv {
            v_interfaces[k] = -v_interfaces[nv - k];
        }
        let v_centers = (0..nv)
            .map(|k| 0.5 * (v_interfaces[k] + v_interfaces[k + 1]))
            .collect();

        Ok(Self {
            torus_length,
            nx,
            half_nv,
            v_star,
            dx,
            dv,
            x_centers,
            v_interfaces,
            v_centers,
        })
    }

    pub fn torus_length(&self) -> f64 {
        self.torus_length
    }

    /// Number of spatial cells `N`.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of velocity cells on each side of `v = 0` (`L`).
    pub fn half_nv(&self) -> usize {
        self.half_nv
    }

    /// Number of velocity cells `2L`.
    pub fn nv(&self) -> usize {
        2 * self.half_nv
    }

    pub fn v_star(&self) -> f64 {
        self.v_star
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn x_centers(&self) -> &[f64] {
        &self.x_centers
    }

    pub fn v_centers(&self) -> &[f64] {
        &self.v_centers
    }

    /// The `2L + 1` velocity interfaces, from `-v*` to `v*`.
    pub fn v_interfaces(&self) -> &[f64] {
        &self.v_interfaces
    }

    /// Number of phase-space cells `N * 2L`.
    pub fn phase_len(&self) -> usize {
        self.nx * self.nv()
    }

    /// Mirror of velocity cell `k` with respect to `v = 0`.
    pub fn mirror(&self, k: usize) -> usize {
        self.nv() - 1 - k
    }

    /// Symmetric label `j in -L+1..=L` of storage index `k`.
    pub fn label_of(&self, k: usize) -> i64 {
        k as i64 - self.half_nv as i64 + 1
    }

    /// Storage index of the symmetric label `j`.
    pub fn index_of(&self, j: i64) -> Option<usize> {
        let k = j + self.half_nv as i64 - 1;
        (0..self.nv() as i64).contains(&k).then_some(k as usize)
    }

    /// Periodic spatial neighbour `i + offset`.
    pub fn wrap(&self, i: usize, offset: isize) -> usize {
        let n = self.nx as isize;
        (((i as isize + offset) % n + n) % n) as usize
    }
}

/// A macroscopic quantity: one value per spatial cell, indices periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    pub values: Vec<f64>,
}

impl SpatialField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { values: vec![0.0; grid.nx()] }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(usize) -> f64) -> Self {
        Self { values: (0..grid.nx()).map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a periodic index.
    pub fn at(&self, i: isize) -> f64 {
        let n = self.values.len() as isize;
        self.values[((i % n + n) % n) as usize]
    }

    /// Discrete integral `sum_i dx u_i`.
    pub fn integral(&self, grid: &GridSpec) -> f64 {
        grid.dx() * pairwise_by(self.len(), |i| self.values[i])
    }

    /// Discrete `L^2` scalar product `sum_i dx u_i w_i`.
    pub fn inner(&self, other: &Self, grid: &GridSpec) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        grid.dx() * pairwise_by(self.len(), |i| self.values[i] * other.values[i])
    }

    pub fn l2_norm(&self, grid: &GridSpec) -> f64 {
        libm::sqrt(self.inner(self, grid))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + scale * b)
                .collect(),
        }
    }
}

/// Cell averages on the control volumes `K_ij`, stored spatial-major
/// (`i * 2L + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    nx: usize,
    nv: usize,
    pub values: Vec<f64>,
}

impl PhaseField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self { nx: grid.nx(), nv: grid.nv(), values: vec![0.0; grid.phase_len()] }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(usize, usize) -> f64) -> Self {
        let nv = grid.nv();
        let values = (0..grid.phase_len()).map(|idx| f(idx / nv, idx % nv)).collect();
        Self { nx: grid.nx(), nv, values }
    }

    pub fn from_values(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.phase_len() {
            return Err(Error::DimensionMismatch("phase field length"));
        }
        Ok(Self { nx: grid.nx(), nv: grid.nv(), values })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.nv + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        self.values[i * self.nv + k] = value;
    }

    /// Velocity row of spatial cell `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.nv..(i + 1) * self.nv]
    }

    /// Spatial column for velocity cell `k`.
    pub fn column(&self, k: usize) -> SpatialField {
        SpatialField::new((0..self.nx).map(|i| self.get(i, k)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { nx: self.nx, nv: self.nv, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            nx: self.nx,
            nv: self.nv,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn same_shape(&self, grid: &GridSpec) -> bool {
        self.nx == grid.nx() && self.nv == grid.nv()
    }
}

/// Discrete spatial gradients on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientKind {
    /// `(u_{i+1} - u_{i-1}) / (2 dx)`
    Centered,
    /// `(u_{i+1} - u_i) / dx`
    Forward,
    /// `(u_i - u_{i-1}) / dx`
    Backward,
}

pub fn discrete_gradient(u: &SpatialField, kind: GradientKind, grid: &GridSpec) -> SpatialField {
    let n = u.len() as isize;
    let dx = grid.dx();
    let values = (0..n)
        .map(|i| match kind {
            GradientKind::Centered => (u.at(i + 1) - u.at(i - 1)) / (2.0 * dx),
            GradientKind::Forward => (u.at(i + 1) - u.at(i)) / dx,
            GradientKind::Backward => (u.at(i) - u.at(i - 1)) / dx,
        })
        .collect();
    SpatialField::new(values)
}

/// The symmetric second difference `(D+D- + D-D+) u`.
pub fn second_difference(u: &SpatialField, grid: &GridSpec) -> SpatialField {
    let n = u.len() as isize;
    let dx2 = grid.dx() * grid.dx();
    SpatialField::new(
        (0..n)
            .map(|i| 2.0 * (u.at(i + 1) - 2.0 * u.at(i) + u.at(i - 1)) / dx2)
            .collect(),
    )
}

/// Sharp constant of the discrete Poincaré inequality
/// `||u||_2 <= C_P ||D^c u||_2` for mean-zero `u`.
///
/// The centered gradient acts on the Fourier mode `k` as `i sin(2 pi k / N) / dx`,
/// so the constant is `dx / min_{1 <= k < N} |sin(2 pi k / N)|`; the minimum is
/// non-zero exactly when `N` is odd.
pub fn poincare_constant(grid: &GridSpec) -> Result<f64> {
    let n = grid.nx();
    if n % 2 == 0 {
        return Err(Error::EvenCellCount(n));
    }
    let min_symbol = (1..n)
        .map(|k| libm::fabs(libm::sin(2.0 * PI * k as f64 / n as f64)))
        .fold(f64::INFINITY, f64::min);
    Ok(grid.dx() / min_symbol)
}

/// Fourier mode index attaining the Poincaré constant (its cosine is an
/// extremal field).
pub fn poincare_extremal_mode(grid: &GridSpec) -> usize {
    let n = grid.nx();
    (1..n)
        .min_by(|&a, &b| {
            let sa = libm::fabs(libm::sin(2.0 * PI * a as f64 / n as f64));
            let sb = libm::fabs(libm::sin(2.0 * PI * b as f64 / n as f64));
            sa.total_cmp(&sb)
        })
        .unwrap_or(1)
}
