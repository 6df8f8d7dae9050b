use alloc::vec;
use alloc::vec::Vec;

use super::csr::CsrMatrix;
use super::dense::DenseLu;
use super::tridiag::CyclicTridiagonal;
use crate::{Error, Result};

/// Square operator on stacked two-species phase-space vectors
/// (index `s * N * 2L + i * 2L + k`) of the form
///
/// ```text
/// (A x)_{s,i,k} = lo x_{s,i-1,k} + diag x_{s,i,k} + up x_{s,i+1,k}
///               + density * sum_{k'} weight_{1-s,i,k'} x_{1-s,i,k'}
/// ```
///
/// with all coefficients indexed by the row and spatial indices periodic.
/// Both the implicit linearized operator and the Newton Jacobian have this
/// shape.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticMatrix {
    nx: usize,
    nv: usize,
    pub lo: Vec<f64>,
    pub diag: Vec<f64>,
    pub up: Vec<f64>,
    pub density: Vec<f64>,
    /// Column weights of the density coupling (all ones unless set).
    pub weight: Vec<f64>,
}

impl KineticMatrix {
    pub fn zeros(nx: usize, nv: usize) -> Self {
        let n = 2 * nx * nv;
        Self {
            nx,
            nv,
            lo: vec![0.0; n],
            diag: vec![0.0; n],
            up: vec![0.0; n],
            density: vec![0.0; n],
            weight: vec![1.0; n],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn dim(&self) -> usize {
        2 * self.nx * self.nv
    }

    #[inline]
    pub fn index(&self, s: usize, i: usize, k: usize) -> usize {
        (s * self.nx + i) * self.nv + k
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        let (nx, nv) = (self.nx, self.nv);
        let sums: Vec<f64> = (0..2 * nx)
            .map(|c| (c * nv..(c + 1) * nv).map(|q| self.weight[q] * x[q]).sum())
            .collect();
        let mut out = vec![0.0; self.dim()];
        for s in 0..2 {
            for i in 0..nx {
                let (im, ip) = ((i + nx - 1) % nx, (i + 1) % nx);
                let other = sums[(1 - s) * nx + i];
                for k in 0..nv {
                    let r = self.index(s, i, k);
                    out[r] = self.lo[r] * x[self.index(s, im, k)]
                        + self.diag[r] * x[r]
                        + self.up[r] * x[self.index(s, ip, k)]
                        + self.density[r] * other;
                }
            }
        }
        out
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let (nx, nv) = (self.nx, self.nv);
        let rows = (0..self.dim()).map(|r| {
            let (s, rem) = (r / (nx * nv), r % (nx * nv));
            let (i, k) = (rem / nv, rem % nv);
            let mut row = Vec::with_capacity(nv + 3);
            row.push((self.index(s, (i + nx - 1) % nx, k), self.lo[r]));
            row.push((r, self.diag[r]));
            row.push((self.index(s, (i + 1) % nx, k), self.up[r]));
            for kk in 0..nv {
                let c = self.index(1 - s, i, kk);
                row.push((c, self.density[r] * self.weight[c]));
            }
            row
        });
        CsrMatrix::from_rows(self.dim(), rows)
    }

    /// Direct factorization: one periodic tridiagonal factorization per
    /// (species, velocity) pair for the transport part, and a dense
    /// `2N x 2N` capacitance matrix for the density coupling
    /// (Sherman–Morrison–Woodbury).
    ///
    /// A zero pivot is reported as `SingularOperator { block }` with
    /// `block = s * 2L + k` for a transport block and `block = 2 * 2L` for the
    /// capacitance matrix.
    pub fn factor(&self) -> Result<KineticLu> {
        let (nx, nv) = (self.nx, self.nv);
        let mut blocks = Vec::with_capacity(2 * nv);
        for s in 0..2 {
            for k in 0..nv {
                let gather = |v: &[f64]| -> Vec<f64> { (0..nx).map(|i| v[self.index(s, i, k)]).collect() };
                let block = CyclicTridiagonal::factor(&gather(&self.lo), &gather(&self.diag), &gather(&self.up))
                    .ok_or(Error::SingularOperator { block: s * nv + k })?;
                blocks.push(block);
            }
        }

        // C[(1-s, i'), (s, i)] = sum_k weight[s, i', k] inv(M_{s,k})[i', i] density[s, i, k]
        let m = 2 * nx;
        let mut cap = vec![0.0; m * m];
        for c in 0..m {
            cap[c * m + c] = 1.0;
        }
        let mut col = vec![0.0; nx];
        for s in 0..2 {
            for k in 0..nv {
                let block = &blocks[s * nv + k];
                for i in 0..nx {
                    let a = self.density[self.index(s, i, k)];
                    if a == 0.0 {
                        continue;
                    }
                    col.iter_mut().for_each(|v| *v = 0.0);
                    col[i] = 1.0;
                    block.solve(&mut col);
                    let c = s * nx + i;
                    for (ip, z) in col.iter().enumerate() {
                        cap[((1 - s) * nx + ip) * m + c] += self.weight[self.index(s, ip, k)] * z * a;
                    }
                }
            }
        }
        let cap = DenseLu::factor(m, cap).map_err(|_| Error::SingularOperator { block: 2 * nv })?;
        Ok(KineticLu { matrix: self.clone(), blocks, cap })
    }
}

/// Factorized [`KineticMatrix`].
#[derive(Debug, Clone)]
pub struct KineticLu {
    matrix: KineticMatrix,
    blocks: Vec<CyclicTridiagonal>,
    cap: DenseLu,
}

impl KineticLu {
    pub fn matrix(&self) -> &KineticMatrix {
        &self.matrix
    }

    fn solve_transport(&self, x: &mut [f64]) {
        let a = &self.matrix;
        let mut col = vec![0.0; a.nx];
        for s in 0..2 {
            for k in 0..a.nv {
                for i in 0..a.nx {
                    col[i] = x[a.index(s, i, k)];
                }
                self.blocks[s * a.nv + k].solve(&mut col);
                for i in 0..a.nx {
                    x[a.index(s, i, k)] = col[i];
                }
            }
        }
    }

    fn solve_once(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.matrix;
        let (nx, nv) = (a.nx, a.nv);
        let mut y = b.to_vec();
        self.solve_transport(&mut y);
        let mut r: Vec<f64> = (0..2 * nx)
            .map(|c| {
                let (s, i) = (c / nx, c % nx);
                let start = a.index(1 - s, i, 0);
                (start..start + nv).map(|q| a.weight[q] * y[q]).sum()
            })
            .collect();
        self.cap.solve(&mut r);
        let mut corr: Vec<f64> = (0..a.dim()).map(|q| a.density[q] * r[q / nv]).collect();
        self.solve_transport(&mut corr);
        for (yv, cv) in y.iter_mut().zip(&corr) {
            *yv -= cv;
        }
        y
    }

    /// Solves `A x = b` with one step of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.matrix.dim() {
            return Err(Error::DimensionMismatch("right-hand side length"));
        }
        let mut x = self.solve_once(b);
        let ax = self.matrix.apply(&x);
        let res: Vec<f64> = b.iter().zip(&ax).map(|(bv, av)| bv - av).collect();
        let dx = self.solve_once(&res);
        for (xv, d) in x.iter_mut().zip(&dx) {
            *xv += d;
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::SolveFailure)
        }
    }
}
