//! Panel dataset: `n` stations observed over `T` equally spaced times.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geo::distance_matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    n: usize,
    times: usize,
    p: usize,
    /// responses, row-major `n x T`
    y: Vec<f64>,
    observed: Vec<bool>,
    /// covariates, `(i * T + t) * p + j`
    x: Vec<f64>,
    /// (latitude, longitude) in degrees
    coords: Vec<(f64, f64)>,
    /// great-circle distances in km
    dist: DMatrix<f64>,
    pub station_ids: Vec<String>,
    pub time_labels: Vec<String>,
    pub covariate_names: Vec<String>,
}

impl PanelDataset {
    /// Builds a dataset, computing distances from `coords` by the haversine formula.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        times: usize,
        p: usize,
        y: Vec<f64>,
        observed: Vec<bool>,
        x: Vec<f64>,
        coords: Vec<(f64, f64)>,
        station_ids: Vec<String>,
        time_labels: Vec<String>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let dist = distance_matrix(&coords);
        Self::with_distances(n, times, p, y, observed, x, coords, dist, station_ids, time_labels, covariate_names)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_distances(
        n: usize,
        times: usize,
        p: usize,
        y: Vec<f64>,
        observed: Vec<bool>,
        x: Vec<f64>,
        coords: Vec<(f64, f64)>,
        dist: DMatrix<f64>,
        station_ids: Vec<String>,
        time_labels: Vec<String>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        if n == 0 || times == 0 {
            return Err(Error::input("panel must have at least one station and one time"));
        }
        let cells = n * times;
        if y.len() != cells || observed.len() != cells || x.len() != cells * p {
            return Err(Error::input(format!(
                "panel shape mismatch: n={n}, T={times}, p={p}, |y|={}, |mask|={}, |x|={}",
                y.len(),
                observed.len(),
                x.len()
            )));
        }
        if coords.len() != n || station_ids.len() != n || time_labels.len() != times || covariate_names.len() != p {
            return Err(Error::input("panel label or coordinate lengths do not match its shape"));
        }
        if dist.nrows() != n || dist.ncols() != n {
            return Err(Error::input("distance matrix must be n x n"));
        }
        for i in 0..n {
            if dist[(i, i)] != 0.0 {
                return Err(Error::input(format!("distance matrix diagonal must be zero (station {i})")));
            }
            for j in 0..i {
                let d = dist[(i, j)];
                if !(d >= 0.0) || d != dist[(j, i)] {
                    return Err(Error::input(format!(
                        "distance matrix must be symmetric and nonnegative at ({i}, {j})"
                    )));
                }
            }
        }
        for c in 0..cells {
            if observed[c] {
                let finite_x = x[c * p..(c + 1) * p].iter().all(|v| v.is_finite());
                if !y[c].is_finite() || !finite_x {
                    return Err(Error::input(format!(
                        "observed cell (station {}, time {}) has non-finite values",
                        c / times,
                        c % times
                    )));
                }
            }
        }
        Ok(Self { n, times, p, y, observed, x, coords, dist, station_ids, time_labels, covariate_names })
    }

    /// Same panel with a different missingness mask.
    pub fn with_mask(self, observed: Vec<bool>) -> Result<Self> {
        Self::with_distances(
            self.n,
            self.times,
            self.p,
            self.y,
            observed,
            self.x,
            self.coords,
            self.dist,
            self.station_ids,
            self.time_labels,
            self.covariate_names,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of time points `T`.
    pub fn times(&self) -> usize {
        self.times
    }

    /// Number of covariates `p`.
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn cell(&self, i: usize, t: usize) -> usize {
        i * self.times + t
    }

    #[inline]
    pub fn y(&self, i: usize, t: usize) -> f64 {
        self.y[self.cell(i, t)]
    }

    #[inline]
    pub fn is_observed(&self, i: usize, t: usize) -> bool {
        self.observed[self.cell(i, t)]
    }

    #[inline]
    pub fn x(&self, i: usize, t: usize) -> &[f64] {
        let c = self.cell(i, t);
        &self.x[c * self.p..(c + 1) * self.p]
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    pub fn dist(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Observed cells as `(i, t)` in row-major order.
    pub fn observed_cells(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (0..self.times).map(move |t| (i, t)))
            .filter(|&(i, t)| self.is_observed(i, t))
            .collect()
    }

    /// Mean and unbiased variance of the observed responses.
    pub fn response_moments(&self) -> (f64, f64) {
        let vals: Vec<f64> = self.y.iter().zip(&self.observed).filter(|(_, &o)| o).map(|(&v, _)| v).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 1.0 };
        (mean, var)
    }
}
