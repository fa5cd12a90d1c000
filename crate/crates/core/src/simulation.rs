//! Synthetic panels with known dynamic clusterings: a balanced scenario in
//! which a fixed share of units jumps between clusters at every step, and an
//! imbalanced one that keeps fixed cluster proportions while a few units per
//! cluster swap.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::{CoclusterStack, PartitionSeries};
use crate::error::{Error, Result};
use crate::geo::distance_matrix;
use crate::linalg::cholesky_with_jitter;
use crate::model::PanelDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    Balanced,
    Imbalanced,
}

/// Latitude/longitude box in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBounds {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Default for RegionBounds {
    /// Roughly continental Chile.
    fn default() -> Self {
        Self { lat_min: -56.0, lat_max: -17.0, lon_min: -76.0, lon_max: -66.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub times: usize,
    pub cluster_means: Vec<f64>,
    pub cluster_var: f64,
    pub mode: ScenarioMode,
    /// Balanced mode: share of units that jump at each step.
    pub jump_rate: f64,
    /// Imbalanced mode: cluster proportions.
    pub imbalanced_ratio: Vec<f64>,
    /// Imbalanced mode: jumpers per cluster and step.
    pub imbalanced_jumpers: usize,
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub gamma_mean: f64,
    pub tau_sq: f64,
    pub phi_km: f64,
    pub p: usize,
    pub region: RegionBounds,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n: 64,
            times: 60,
            cluster_means: vec![5.0, 32.0, 60.0],
            cluster_var: 1.0,
            mode: ScenarioMode::Balanced,
            jump_rate: 0.10,
            imbalanced_ratio: vec![0.70, 0.15, 0.15],
            imbalanced_jumpers: 2,
            beta_mean: 3.0,
            beta_sd: 1.0,
            gamma_mean: 3.0,
            tau_sq: 2.0,
            phi_km: 100.0,
            p: 5,
            region: RegionBounds::default(),
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.times == 0 {
            return Err(Error::input("scenario needs at least one unit and one time"));
        }
        let c = self.cluster_means.len();
        if c == 0 {
            return Err(Error::input("scenario needs at least one cluster mean"));
        }
        for i in 0..c {
            for j in 0..i {
                if self.cluster_means[i] == self.cluster_means[j] {
                    return Err(Error::input("cluster means must be distinct"));
                }
            }
        }
        if !(self.cluster_var > 0.0) {
            return Err(Error::input("cluster variance must be positive"));
        }
        if !(0.0..=1.0).contains(&self.jump_rate) {
            return Err(Error::input(format!("jump rate must lie in [0, 1], got {}", self.jump_rate)));
        }
        if self.mode == ScenarioMode::Imbalanced {
            if self.imbalanced_ratio.len() != c {
                return Err(Error::input("imbalanced ratios must match the number of clusters"));
            }
            let sum: f64 = self.imbalanced_ratio.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || self.imbalanced_ratio.iter().any(|&r| r < 0.0) {
                return Err(Error::input(format!("imbalanced ratios must be nonnegative and sum to 1, got {sum}")));
            }
        }
        if !(self.tau_sq > 0.0 && self.phi_km > 0.0 && self.beta_sd >= 0.0) {
            return Err(Error::input("tau_sq and phi_km must be positive, beta_sd nonnegative"));
        }
        Ok(())
    }

    /// Jumpers per step in balanced mode: `round(rate * n)`, at least one when the rate is positive.
    pub fn balanced_jumpers(&self) -> usize {
        let j = (self.jump_rate * self.n as f64).round() as usize;
        if self.jump_rate > 0.0 {
            j.max(1).min(self.n)
        } else {
            0
        }
    }
}

/// Ground truth of a generated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTruth {
    pub partitions: PartitionSeries,
    /// Raw cluster indices into `cluster_means`, `labels[t][i]`.
    pub labels: Vec<Vec<usize>>,
    pub cocluster: CoclusterStack,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub notes: Vec<String>,
}

/// Uniform points in the box and their haversine distances.
pub fn generate_locations<R: Rng + ?Sized>(
    n: usize,
    region: &RegionBounds,
    rng: &mut R,
) -> Result<(Vec<(f64, f64)>, DMatrix<f64>)> {
    if n == 0 {
        return Err(Error::input("need at least one location"));
    }
    let r = region;
    if !(r.lat_min < r.lat_max && r.lon_min < r.lon_max) || r.lat_min < -90.0 || r.lat_max > 90.0 {
        return Err(Error::input(format!("degenerate region bounds {r:?}")));
    }
    let coords: Vec<(f64, f64)> =
        (0..n).map(|_| (rng.random_range(r.lat_min..r.lat_max), rng.random_range(r.lon_min..r.lon_max))).collect();
    let dist = distance_matrix(&coords);
    Ok((coords, dist))
}

fn balanced_labels<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Vec<Vec<usize>> {
    let c = spec.cluster_means.len();
    let mut current: Vec<usize> = (0..spec.n).map(|_| rng.random_range(0..c)).collect();
    let mut out = vec![current.clone()];
    let jumpers = if c > 1 { spec.balanced_jumpers() } else { 0 };
    let mut units: Vec<usize> = (0..spec.n).collect();
    for _ in 1..spec.times {
        units.shuffle(rng);
        for &i in &units[..jumpers] {
            let shift = rng.random_range(1..c);
            current[i] = (current[i] + shift) % c;
        }
        out.push(current.clone());
    }
    out
}

fn imbalanced_labels<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R, notes: &mut Vec<String>) -> Vec<Vec<usize>> {
    let c = spec.cluster_means.len();
    let n = spec.n;
    let mut sizes: Vec<usize> = spec.imbalanced_ratio.iter().map(|r| (r * n as f64).round() as usize).collect();
    // Absorb rounding in the largest cluster.
    let total: usize = sizes.iter().sum();
    let largest = (0..c).max_by(|&a, &b| spec.imbalanced_ratio[a].total_cmp(&spec.imbalanced_ratio[b])).unwrap_or(0);
    if total > n {
        sizes[largest] -= total - n;
    } else {
        sizes[largest] += n - total;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut current = vec![0; n];
    let mut pos = 0;
    for (k, &sz) in sizes.iter().enumerate() {
        for &i in &perm[pos..pos + sz] {
            current[i] = k;
        }
        pos += sz;
    }
    let mut out = vec![current.clone()];
    if sizes.iter().any(|&s| s < spec.imbalanced_jumpers) {
        notes.push(format!(
            "some cluster has fewer than {} members; it contributes all its members as jumpers",
            spec.imbalanced_jumpers
        ));
    }
    for _ in 1..spec.times {
        let mut pool: Vec<(usize, usize)> = Vec::new();
        for k in 0..c {
            let mut members: Vec<usize> = (0..n).filter(|&i| current[i] == k).collect();
            members.shuffle(rng);
            let take = spec.imbalanced_jumpers.min(members.len());
            pool.extend(members[..take].iter().map(|&i| (i, k)));
        }
        // Destinations are a reshuffle of the origins, so cluster sizes are kept;
        // prefer assignments where every jumper actually changes cluster.
        let mut dest: Vec<usize> = pool.iter().map(|&(_, k)| k).collect();
        let mut ok = false;
        for _ in 0..200 {
            dest.shuffle(rng);
            if pool.iter().zip(&dest).all(|(&(_, from), &to)| from != to) {
                ok = true;
                break;
            }
        }
        if !ok {
            // Cyclic shift over clusters sorted by origin.
            let origins: Vec<usize> = pool.iter().map(|&(_, k)| k).collect();
            let shift = origins.iter().filter(|&&k| k == origins[0]).count();
            dest = (0..origins.len()).map(|j| origins[(j + shift) % origins.len()]).collect();
        }
        for (&(i, _), &to) in pool.iter().zip(&dest) {
            current[i] = to;
        }
        out.push(current.clone());
    }
    out
}

/// Generates a panel and its ground truth; deterministic given `spec.seed`.
pub fn generate(spec: &ScenarioSpec) -> Result<(PanelDataset, ScenarioTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, times, p) = (spec.n, spec.times, spec.p);
    let mut notes = Vec::new();
    let (coords, dist) = generate_locations(n, &spec.region, &mut rng)?;
    let labels = match spec.mode {
        ScenarioMode::Balanced => balanced_labels(spec, &mut rng),
        ScenarioMode::Imbalanced => imbalanced_labels(spec, &mut rng, &mut notes),
    };

    let beta: Vec<f64> = (0..p).map(|_| spec.beta_mean + spec.beta_sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let c = 0.5 / (spec.phi_km * spec.phi_km);
    let cov = dist.map(|d| spec.tau_sq * (-d * d * c).exp());
    let chol = cholesky_with_jitter(&cov)?;
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let gamma: Vec<f64> = (chol.l() * z).iter().map(|v| v + spec.gamma_mean).collect();

    let mut x = vec![0.0; n * times * p];
    let mut y = vec![0.0; n * times];
    let sd = spec.cluster_var.sqrt();
    for i in 0..n {
        for t in 0..times {
            let cell = i * times + t;
            let mut mu = spec.cluster_means[labels[t][i]] + gamma[i];
            for j in 0..p {
                let v: f64 = rng.random();
                x[cell * p + j] = v;
                mu += v * beta[j];
            }
            y[cell] = mu + sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let data = PanelDataset::with_distances(
        n,
        times,
        p,
        y,
        vec![true; n * times],
        x,
        coords,
        dist,
        (0..n).map(|i| format!("S{:03}", i + 1)).collect(),
        (1..=times).map(|t| t.to_string()).collect(),
        (1..=p).map(|j| format!("x{j}")).collect(),
    )?;
    let partitions = PartitionSeries::new(labels.clone());
    let cocluster = CoclusterStack::from_partitions(&partitions);
    Ok((data, ScenarioTruth { partitions, labels, cocluster, beta, gamma, notes }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::lagged_ari;

    #[test]
    fn no_jumps_keep_partitions_fixed() {
        let spec = ScenarioSpec { n: 20, times: 6, jump_rate: 0.0, ..ScenarioSpec::default() };
        let (_, truth) = generate(&spec).unwrap();
        assert!(truth.partitions.partitions.windows(2).all(|w| w[0] == w[1]));
        let table = lagged_ari(&truth.partitions, 1).unwrap();
        assert!(table[0].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn balanced_jump_count_is_rounded_share() {
        let spec = ScenarioSpec { n: 64, times: 5, ..ScenarioSpec::default() };
        assert_eq!(spec.balanced_jumpers(), 6);
        let (_, truth) = generate(&spec).unwrap();
        for t in 1..5 {
            let moved = (0..64).filter(|&i| truth.labels[t][i] != truth.labels[t - 1][i]).count();
            assert_eq!(moved, 6);
        }
        let tiny = ScenarioSpec { n: 3, jump_rate: 0.1, ..ScenarioSpec::default() };
        assert_eq!(tiny.balanced_jumpers(), 1);
    }

    #[test]
    fn imbalanced_keeps_sizes() {
        let spec = ScenarioSpec { n: 40, times: 8, mode: ScenarioMode::Imbalanced, ..ScenarioSpec::default() };
        let (_, truth) = generate(&spec).unwrap();
        for t in 0..8 {
            let mut sizes = [0; 3];
            for &l in &truth.labels[t] {
                sizes[l] += 1;
            }
            assert_eq!(sizes, [28, 6, 6]);
        }
        for t in 1..8 {
            let moved = (0..40).filter(|&i| truth.labels[t][i] != truth.labels[t - 1][i]).count();
            assert_eq!(moved, 6);
        }
    }

    #[test]
    fn truth_cocluster_is_consistent() {
        let (_, truth) = generate(&ScenarioSpec { n: 12, times: 4, ..ScenarioSpec::default() }).unwrap();
        let c = &truth.cocluster;
        for t in 0..4 {
            for i in 0..12 {
                assert_eq!(c.get(t, i, i), 1.0);
                for j in 0..12 {
                    assert_eq!(c.get(t, i, j), c.get(t, j, i));
                    let same = truth.labels[t][i] == truth.labels[t][j];
                    assert_eq!(c.get(t, i, j), same as u8 as f64);
                }
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let spec = ScenarioSpec { n: 10, times: 3, seed: 4, ..ScenarioSpec::default() };
        let (a, ta) = generate(&spec).unwrap();
        let (b, tb) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn degenerate_box_is_rejected() {
        let r = RegionBounds { lat_min: 1.0, lat_max: 1.0, lon_min: 0.0, lon_max: 1.0 };
        assert!(generate_locations(3, &r, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ScenarioSpec { cluster_means: vec![1.0, 1.0], ..ScenarioSpec::default() }.validate().is_err());
        assert!(ScenarioSpec { jump_rate: 1.5, ..ScenarioSpec::default() }.validate().is_err());
        let bad = ScenarioSpec {
            mode: ScenarioMode::Imbalanced,
            imbalanced_ratio: vec![0.5, 0.2, 0.2],
            ..ScenarioSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
