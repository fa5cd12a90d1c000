//! Hard partitions, co-clustering matrices and the adjusted Rand index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PosteriorDraws;

/// Relabels so that each cluster is named by its smallest member index.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut first: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    labels.iter().enumerate().map(|(i, &l)| *first.entry(l).or_insert(i)).collect()
}

pub fn num_clusters(labels: &[usize]) -> usize {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Per-time hard partitions in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSeries {
    pub partitions: Vec<Vec<usize>>,
}

impl PartitionSeries {
    pub fn new(partitions: Vec<Vec<usize>>) -> Self {
        Self { partitions: partitions.iter().map(|p| canonicalize(p)).collect() }
    }

    pub fn times(&self) -> usize {
        self.partitions.len()
    }

    pub fn n(&self) -> usize {
        self.partitions.first().map_or(0, Vec::len)
    }

    pub fn at(&self, t: usize) -> &[usize] {
        &self.partitions[t]
    }
}

/// Per-time `n x n` co-clustering matrices, stored `t * n * n + i * n + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoclusterStack {
    pub n: usize,
    pub times: usize,
    pub values: Vec<f64>,
}

impl CoclusterStack {
    pub fn zeros(n: usize, times: usize) -> Self {
        Self { n, times, values: vec![0.0; n * n * times] }
    }

    #[inline]
    pub fn get(&self, t: usize, i: usize, j: usize) -> f64 {
        self.values[(t * self.n + i) * self.n + j]
    }

    pub fn matrix(&self, t: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.values[t * nn..(t + 1) * nn]
    }

    /// 0/1 matrices of known partitions.
    pub fn from_partitions(series: &PartitionSeries) -> Self {
        let (n, times) = (series.n(), series.times());
        let mut out = Self::zeros(n, times);
        for t in 0..times {
            let p = series.at(t);
            for i in 0..n {
                for j in 0..n {
                    out.values[(t * n + i) * n + j] = (p[i] == p[j]) as u8 as f64;
                }
            }
        }
        out
    }
}

/// Fraction of retained draws with `s_it = s_jt`.
pub fn cocluster_probs(draws: &PosteriorDraws) -> CoclusterStack {
    let (n, times) = (draws.n, draws.times);
    let mut out = CoclusterStack::zeros(n, times);
    if draws.draws.is_empty() {
        return out;
    }
    for d in &draws.draws {
        for t in 0..times {
            let base = t * n * n;
            for i in 0..n {
                let li = d.s[i * times + t];
                let row = base + i * n;
                out.values[row + i] += 1.0;
                for j in 0..i {
                    if d.s[j * times + t] == li {
                        out.values[row + j] += 1.0;
                    }
                }
            }
        }
    }
    let total = draws.draws.len() as f64;
    for t in 0..times {
        for i in 0..n {
            for j in 0..=i {
                let v = out.values[(t * n + i) * n + j] / total;
                out.values[(t * n + i) * n + j] = v;
                out.values[(t * n + j) * n + i] = v;
            }
        }
    }
    out
}

/// Time-averaged Frobenius distance `(1/T) sum_t ||C_t - C^_t||_F`.
pub fn cocluster_error(truth: &CoclusterStack, estimate: &CoclusterStack) -> Result<f64> {
    if truth.n != estimate.n || truth.times != estimate.times {
        return Err(Error::input(format!(
            "co-clustering stacks differ in shape: {}x{} vs {}x{}",
            truth.n, truth.times, estimate.n, estimate.times
        )));
    }
    if truth.times == 0 {
        return Ok(0.0);
    }
    let total: f64 = (0..truth.times)
        .map(|t| truth.matrix(t).iter().zip(estimate.matrix(t)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .sum();
    Ok(total / truth.times as f64)
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Hubert-Arabie adjusted Rand index. When the index is undefined (both
/// partitions trivial in the same way) it is 1 for identical partitions.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must cover the same units");
    let n = a.len() as u64;
    let ca = canonicalize(a);
    let cb = canonicalize(b);
    let mut table: std::collections::HashMap<(usize, usize), u64> = std::collections::HashMap::new();
    let mut rows = vec![0u64; a.len()];
    let mut cols = vec![0u64; a.len()];
    for (&x, &y) in ca.iter().zip(&cb) {
        *table.entry((x, y)).or_default() += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = rows.iter().map(|&c| choose2(c)).sum();
    let sb: f64 = cols.iter().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    let denom = max - expected;
    if denom.abs() < 1e-12 {
        return if ca == cb { 1.0 } else { 0.0 };
    }
    (index - expected) / denom
}

/// `table[l - 1][t] = ARI(P_t, P_{t+l})` for `l = 1..=max_lag`, `t < T - l`.
pub fn lagged_ari(series: &PartitionSeries, max_lag: usize) -> Result<Vec<Vec<f64>>> {
    let times = series.times();
    if max_lag == 0 || max_lag >= times {
        return Err(Error::input(format!("max_lag must be in 1..T (got {max_lag} with T = {times})")));
    }
    Ok((1..=max_lag)
        .map(|lag| (0..times - lag).map(|t| adjusted_rand_index(series.at(t), series.at(t + lag))).collect())
        .collect())
}

/// Mean of each lag row.
pub fn mean_by_lag(table: &[Vec<f64>]) -> Vec<f64> {
    table.iter().map(|row| row.iter().sum::<f64>() / row.len().max(1) as f64).collect()
}
