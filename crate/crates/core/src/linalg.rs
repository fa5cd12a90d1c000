//! Small dense and tridiagonal linear algebra helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        debug_assert!(diag.is_empty() && off.is_empty() || off.len() + 1 == diag.len());
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for i in 0..self.off.len() {
            m[(i, i + 1)] = self.off[i];
            m[(i + 1, i)] = self.off[i];
        }
        m
    }

    /// `x' A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            acc += self.diag[i] * xi * xi;
        }
        for (i, &o) in self.off.iter().enumerate() {
            acc += 2.0 * o * x[i] * x[i + 1];
        }
        acc
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            out[i] = v;
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { diag: self.diag.iter().map(|v| v * c).collect(), off: self.off.iter().map(|v| v * c).collect() }
    }

    /// Lower bidiagonal Cholesky factor.
    pub fn cholesky(&self) -> Result<TridiagCholesky> {
        let n = self.dim();
        let mut l_diag = vec![0.0; n];
        let mut l_off = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut d = self.diag[i];
            if i > 0 {
                l_off[i - 1] = self.off[i - 1] / l_diag[i - 1];
                d -= l_off[i - 1] * l_off[i - 1];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::numerical(format!(
                    "tridiagonal matrix of dimension {n} is not positive definite (pivot {i} = {d:e})"
                )));
            }
            l_diag[i] = d.sqrt();
        }
        Ok(TridiagCholesky { l_diag, l_off })
    }
}

/// `A = L L'` with `L` lower bidiagonal.
#[derive(Debug, Clone)]
pub struct TridiagCholesky {
    l_diag: Vec<f64>,
    l_off: Vec<f64>,
}

impl TridiagCholesky {
    pub fn log_det(&self) -> f64 {
        2.0 * self.l_diag.iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..b.len() {
            if i > 0 {
                b[i] -= self.l_off[i - 1] * b[i - 1];
            }
            b[i] /= self.l_diag[i];
        }
    }

    /// Solves `L' x = y` in place.
    pub fn backward(&self, y: &mut [f64]) {
        for i in (0..y.len()).rev() {
            if i + 1 < y.len() {
                y[i] -= self.l_off[i] * y[i + 1];
            }
            y[i] /= self.l_diag[i];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }
}

/// Dense Cholesky with the standard jitter fallback: on failure, add
/// `1e-10 * trace / dim` to the diagonal and retry once.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = m.clone().cholesky() {
        return Ok(c);
    }
    let n = m.nrows().max(1);
    let jitter = 1e-10 * m.trace() / n as f64;
    log::debug!("cholesky failed; retrying with diagonal jitter {jitter:e}");
    let mut jittered = m.clone();
    for i in 0..m.nrows() {
        jittered[(i, i)] += jitter;
    }
    jittered.cholesky().ok_or_else(|| {
        let diag_min = (0..m.nrows()).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min);
        let diag_max = (0..m.nrows()).map(|i| m[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
        let cond = condition_estimate(m);
        Error::numerical(format!(
            "matrix of dimension {} not positive definite after jitter {jitter:e} \
             (diagonal range [{diag_min:e}, {diag_max:e}], condition estimate {cond:e})",
            m.nrows()
        ))
    })
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = eig.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn log_det_from_cholesky(c: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let l = c.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve_matches_dense() {
        let a = SymTridiagonal::new(vec![4.0, 5.0, 3.0, 6.0], vec![1.0, -2.0, 0.5]);
        let b = [1.0, -2.0, 0.5, 3.0];
        let x = a.cholesky().unwrap().solve(&b);
        let dense = a.to_dense();
        let xd = dense.clone().lu().solve(&to_dvector(&b)).unwrap();
        for i in 0..4 {
            assert!((x[i] - xd[i]).abs() < 1e-12);
        }
        let ld = a.cholesky().unwrap().log_det();
        assert!((ld - dense.determinant().ln()).abs() < 1e-12);
        let q = a.quad_form(&b);
        let qd = to_dvector(&b).dot(&(&dense * to_dvector(&b)));
        assert!((q - qd).abs() < 1e-12);
    }

    #[test]
    fn non_positive_definite_is_rejected() {
        let a = SymTridiagonal::new(vec![1.0, 1.0], vec![2.0]);
        assert!(a.cholesky().is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky_with_jitter(&m), Err(Error::Numerical(_))));
    }

    #[test]
    fn jitter_rescues_singular_psd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_with_jitter(&m).is_ok());
    }
}
