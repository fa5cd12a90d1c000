//! Point partitions minimizing the lower bound of the posterior expected
//! variation of information,
//! `(1/n) sum_i [log2 |c_i| + log2 sum_j P_ij - 2 log2 sum_{j in c_i} P_ij]`.

use crate::analysis::partition::{canonicalize, CoclusterStack};
use crate::model::PosteriorDraws;

const TIE_TOL: f64 = 1e-12;

/// Expected-VI lower bound of `labels` under the co-clustering matrix `p` (row-major `n x n`).
pub fn expected_vi_lower_bound(labels: &[usize], p: &[f64]) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for i in 0..n {
        let row = &p[i * n..(i + 1) * n];
        let mut size = 0usize;
        let mut inside = 0.0;
        let mut all = 0.0;
        for j in 0..n {
            all += row[j];
            if labels[j] == labels[i] {
                size += 1;
                inside += row[j];
            }
        }
        total += (size as f64).log2() + all.log2() - 2.0 * inside.log2();
    }
    total / n as f64
}

/// Single-unit reallocation hill-climbing from `start`: each unit may move to
/// any existing cluster or a new singleton whenever that lowers the objective.
pub fn hill_climb(start: &[usize], p: &[f64]) -> (Vec<usize>, f64) {
    let n = start.len();
    let mut labels = canonicalize(start);
    let mut best = expected_vi_lower_bound(&labels, p);
    loop {
        let mut improved = false;
        for i in 0..n {
            let current = labels[i];
            let mut targets: Vec<usize> = labels.clone();
            targets.sort_unstable();
            targets.dedup();
            // a fresh label for a singleton
            let fresh = targets.last().map_or(0, |m| m + 1);
            targets.push(fresh);
            let mut best_move = None;
            for &target in &targets {
                if target == current {
                    continue;
                }
                labels[i] = target;
                let obj = expected_vi_lower_bound(&labels, p);
                if obj < best - TIE_TOL {
                    best = obj;
                    best_move = Some(target);
                }
            }
            labels[i] = best_move.unwrap_or(current);
            if best_move.is_some() {
                improved = true;
            }
        }
        labels = canonicalize(&labels);
        if !improved {
            break;
        }
    }
    (labels, best)
}

/// Best partition among `candidates` (ties: lexicographically smallest canonical
/// labels), then refined by hill-climbing. Returns the partition and its objective.
pub fn vi_search(candidates: &[Vec<usize>], p: &[f64]) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut seen = std::collections::HashSet::new();
    for c in candidates {
        let c = canonicalize(c);
        if !seen.insert(c.clone()) {
            continue;
        }
        let obj = expected_vi_lower_bound(&c, p);
        let replace = match &best {
            None => true,
            Some((bl, bo)) => obj < bo - TIE_TOL || ((obj - bo).abs() <= TIE_TOL && c < *bl),
        };
        if replace {
            best = Some((c, obj));
        }
    }
    let (start, _) = best.expect("at least one candidate partition");
    hill_climb(&start, p)
}

/// VI point estimate at time `t`, seeded by the retained draws' partitions.
pub fn vi_point_estimate(draws: &PosteriorDraws, cocluster: &CoclusterStack, t: usize) -> Vec<usize> {
    let candidates: Vec<Vec<usize>> = draws.draws.iter().map(|d| d.partition_at(draws.n, draws.times, t)).collect();
    vi_search(&candidates, cocluster.matrix(t)).0
}

/// VI point estimates for every time.
pub fn vi_point_series(draws: &PosteriorDraws, cocluster: &CoclusterStack) -> crate::analysis::PartitionSeries {
    use rayon::prelude::*;
    let parts = (0..draws.times).into_par_iter().map(|t| vi_point_estimate(draws, cocluster, t)).collect();
    crate::analysis::PartitionSeries::new(parts)
}
