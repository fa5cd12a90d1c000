//! Multivariate normal draws parameterized by a precision matrix.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, SymTridiagonal};

/// Draw `x ~ N(mean, precision^{-1})` via `precision = L L'`, `x = mean + L'^{-1} z`.
pub fn sample_mvn_precision<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let n = mean.len();
    if precision.nrows() != n || precision.ncols() != n {
        return Err(Error::input(format!(
            "precision is {}x{} but mean has length {n}",
            precision.nrows(),
            precision.ncols()
        )));
    }
    let chol = cholesky_with_jitter(precision)?;
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let lt = chol.l().transpose();
    let offset = lt.solve_upper_triangular(&z).ok_or_else(|| Error::numerical("singular triangular factor"))?;
    Ok(mean + offset)
}

/// Draw from `N(Q^{-1} b, Q^{-1})` for tridiagonal `Q` given in canonical form.
/// Returns the draw and the conditional mean.
pub fn sample_canonical_tridiagonal<R: Rng + ?Sized>(
    precision: &SymTridiagonal,
    linear: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let chol = precision.cholesky()?;
    let mean = chol.solve(linear);
    let mut z: Vec<f64> = (0..linear.len()).map(|_| rng.sample(StandardNormal)).collect();
    chol.backward(&mut z);
    let draw = mean.iter().zip(&z).map(|(m, e)| m + e).collect();
    Ok((draw, mean))
}

/// Draw from `N(Q^{-1} b, Q^{-1})` for a dense SPD `Q`. Returns draw and mean.
pub fn sample_canonical_dense<R: Rng + ?Sized>(
    precision: &DMatrix<f64>,
    linear: &DVector<f64>,
    rng: &mut R,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let chol = cholesky_with_jitter(precision)?;
    let mean = chol.solve(linear);
    let n = linear.len();
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let offset = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::numerical("singular triangular factor"))?;
    Ok((&mean + offset, mean))
}
