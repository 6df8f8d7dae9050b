use alloc::vec;
use alloc::vec::Vec;

/// Tridiagonal LU with partial pivoting (second superdiagonal fill-in).
#[derive(Debug, Clone)]
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    /// `dl[i] = M[i+1][i]`, `d[i] = M[i][i]`, `du[i] = M[i][i+1]`.
    fn factor(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>) -> Option<Self> {
        let n = d.len();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return None;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d.iter().any(|&p| p == 0.0 || !p.is_finite()) {
            return None;
        }
        Some(Self { dl, d, du, du2, swapped })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Factorization of a periodic tridiagonal matrix
///
/// ```text
/// (M x)_i = lo_i x_{i-1} + d_i x_i + up_i x_{i+1},   indices mod n, n >= 3,
/// ```
///
/// as a pivoted tridiagonal LU plus a rank-two correction for the corners.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    lu: TridiagonalLu,
    corner_lo: f64,
    corner_up: f64,
    z_first: Vec<f64>,
    z_last: Vec<f64>,
    cap: [f64; 4],
}

impl CyclicTridiagonal {
    pub fn factor(lo: &[f64], d: &[f64], up: &[f64]) -> Option<Self> {
        let n = d.len();
        assert!(n >= 3 && lo.len() == n && up.len() == n);
        let dl = lo[1..].to_vec();
        let du = up[..n - 1].to_vec();
        let lu = TridiagonalLu::factor(dl, d.to_vec(), du)?;
        let (corner_lo, corner_up) = (lo[0], up[n - 1]);

        let mut z_first = vec![0.0; n];
        z_first[0] = 1.0;
        lu.solve(&mut z_first);
        let mut z_last = vec![0.0; n];
        z_last[n - 1] = 1.0;
        lu.solve(&mut z_last);

        // M = T + e_0 (corner_lo e_{n-1})^T + e_{n-1} (corner_up e_0)^T
        let k00 = 1.0 + corner_lo * z_first[n - 1];
        let k01 = corner_lo * z_last[n - 1];
        let k10 = corner_up * z_first[0];
        let k11 = 1.0 + corner_up * z_last[0];
        let det = k00 * k11 - k01 * k10;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let cap = [k11 / det, -k01 / det, -k10 / det, k00 / det];
        Some(Self { lu, corner_lo, corner_up, z_first, z_last, cap })
    }

    pub fn dim(&self) -> usize {
        self.z_first.len()
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        self.lu.solve(b);
        let w0 = self.corner_lo * b[n - 1];
        let w1 = self.corner_up * b[0];
        let c0 = self.cap[0] * w0 + self.cap[1] * w1;
        let c1 = self.cap[2] * w0 + self.cap[3] * w1;
        for i in 0..n {
            b[i] -= c0 * self.z_first[i] + c1 * self.z_last[i];
        }
    }
}
