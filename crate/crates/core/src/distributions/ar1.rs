//! AR(1) correlation kernel `R(t, t') = psi^|t - t'|` and its closed-form
//! tridiagonal precision.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Kernel {
    psi: f64,
    dim: usize,
}

impl Ar1Kernel {
    pub fn new(psi: f64, dim: usize) -> Result<Self> {
        if !(psi.abs() < 1.0) {
            return Err(Error::param(format!("AR(1) coefficient must satisfy |psi| < 1, got {psi}")));
        }
        if dim == 0 {
            return Err(Error::param("AR(1) kernel dimension must be positive"));
        }
        Ok(Self { psi, dim })
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense correlation matrix with entries `psi^|t - t'|`.
    pub fn correlation(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.psi.powi(i.abs_diff(j) as i32))
    }

    /// Inverse of [`Self::correlation`]: tridiagonal with diagonal
    /// `(1, 1 + psi^2, ..., 1 + psi^2, 1) / (1 - psi^2)` and off-diagonal
    /// `-psi / (1 - psi^2)`.
    pub fn precision(&self) -> SymTridiagonal {
        let times: Vec<usize> = (0..self.dim).collect();
        irregular_precision(&times, self.psi)
    }

    /// `log det R = (dim - 1) log(1 - psi^2)`.
    pub fn log_det(&self) -> f64 {
        (self.dim as f64 - 1.0) * (1.0 - self.psi * self.psi).ln()
    }
}

/// `ar1_precision`: validated closed-form precision of the AR(1) correlation matrix.
pub fn ar1_precision(kernel: &Ar1Kernel) -> SymTridiagonal {
    kernel.precision()
}

/// Precision of the AR(1) correlation restricted to the sorted time points
/// `times`. The restricted process is still Markov with lag coefficients
/// `psi^(t_j - t_{j-1})`, so the precision stays tridiagonal.
pub fn irregular_precision(times: &[usize], psi: f64) -> SymTridiagonal {
    let m = times.len();
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    if m == 0 {
        return SymTridiagonal::new(diag, off);
    }
    diag[0] = 1.0;
    for j in 1..m {
        let rho = psi.powi((times[j] - times[j - 1]) as i32);
        let inv = 1.0 / (1.0 - rho * rho);
        // x_j | x_{j-1} ~ N(rho x_{j-1}, 1 - rho^2)
        diag[j - 1] += rho * rho * inv;
        diag[j] = inv;
        off[j - 1] = -rho * inv;
    }
    SymTridiagonal::new(diag, off)
}

/// `log det` of the restricted correlation matrix, `sum_j log(1 - psi^(2 dt_j))`.
pub fn irregular_log_det(times: &[usize], psi: f64) -> f64 {
    times
        .windows(2)
        .map(|w| {
            let rho = psi.powi((w[1] - w[0]) as i32);
            (1.0 - rho * rho).ln()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_psi_gives_identity() {
        let p = Ar1Kernel::new(0.0, 4).unwrap().precision().to_dense();
        assert_eq!(p, DMatrix::identity(4, 4));
    }

    #[test]
    fn two_by_two_matches_hand_inverse() {
        // inverse of [[1, .5], [.5, 1]] is [[4/3, -2/3], [-2/3, 4/3]]
        let p = Ar1Kernel::new(0.5, 2).unwrap().precision().to_dense();
        let expect = DMatrix::from_row_slice(2, 2, &[4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0]);
        assert!((p - expect).norm() < 1e-14);
    }

    #[test]
    fn precision_inverts_dense_correlation() {
        let k = Ar1Kernel::new(0.9, 10).unwrap();
        let prod = k.correlation() * k.precision().to_dense();
        assert!((prod - DMatrix::identity(10, 10)).norm() < 1e-10);
        let dense_ld = k.correlation().determinant().ln();
        assert!((k.log_det() - dense_ld).abs() < 1e-10);
    }

    #[test]
    fn irregular_times_invert_restricted_correlation() {
        let times = [0usize, 2, 3, 7];
        for &psi in &[-0.7f64, 0.35, 0.95] {
            let dense = DMatrix::from_fn(4, 4, |i, j| psi.powi(times[i].abs_diff(times[j]) as i32));
            let prec = irregular_precision(&times, psi).to_dense();
            assert!((&dense * prec - DMatrix::identity(4, 4)).norm() < 1e-9);
            assert!((irregular_log_det(&times, psi) - dense.determinant().ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unit_root() {
        assert!(Ar1Kernel::new(1.0, 3).is_err());
        assert!(Ar1Kernel::new(-1.2, 3).is_err());
        assert!(Ar1Kernel::new(0.2, 0).is_err());
    }
}
