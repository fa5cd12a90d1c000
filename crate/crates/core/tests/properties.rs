use proptest::prelude::*;

use dynclust::analysis::{
    adjusted_rand_index, canonicalize, expected_vi_lower_bound, num_clusters, CoclusterStack, PartitionSeries,
};
use dynclust::distributions::{logistic_beta_log_density, polya_mean, Ar1Kernel, StirlingGammaParams};

fn labels(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<usize>> {
    n.prop_flat_map(|n| prop::collection::vec(0..5usize, n))
}

fn pair(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    n.prop_flat_map(|n| (prop::collection::vec(0..5usize, n), prop::collection::vec(0..5usize, n)))
}

/// Relabel through an injective map.
fn relabel(xs: &[usize], shift: usize) -> Vec<usize> {
    xs.iter().map(|&x| (x * 7 + shift) % 1000 + 3).collect()
}

fn brute_force_ari(a: &[usize], b: &[usize]) -> Option<f64> {
    let n = a.len();
    let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            both += (sa && sb) as u8 as f64;
            in_a += sa as u8 as f64;
            in_b += sb as u8 as f64;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = in_a * in_b / pairs;
    let denom = 0.5 * (in_a + in_b) - expected;
    (denom.abs() > 1e-9).then(|| (both - expected) / denom)
}

fn indicator(l: &[usize]) -> Vec<f64> {
    let n = l.len();
    (0..n * n).map(|k| (l[k / n] == l[k % n]) as u8 as f64).collect()
}

proptest! {
    #[test]
    fn ari_is_symmetric((a, b) in pair(2..20)) {
        prop_assert!((adjusted_rand_index(&a, &b) - adjusted_rand_index(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn ari_matches_pair_counting((a, b) in pair(2..20)) {
        if let Some(want) = brute_force_ari(&a, &b) {
            prop_assert!((adjusted_rand_index(&a, &b) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn ari_is_label_invariant((a, b) in pair(2..20), shift in 0usize..50) {
        let x = adjusted_rand_index(&a, &b);
        prop_assert!((adjusted_rand_index(&relabel(&a, shift), &b) - x).abs() < 1e-12);
        prop_assert!(x <= 1.0 + 1e-12);
        prop_assert!((adjusted_rand_index(&a, &relabel(&a, shift)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonicalize_is_idempotent_and_keeps_blocks(a in labels(1..25), shift in 0usize..50) {
        let c = canonicalize(&a);
        prop_assert_eq!(canonicalize(&c), c.clone());
        prop_assert_eq!(canonicalize(&relabel(&a, shift)), c.clone());
        prop_assert_eq!(num_clusters(&a), num_clusters(&c));
        for i in 0..a.len() {
            // each block is named by its first member
            prop_assert!(c[i] <= i && c[c[i]] == c[i]);
            for j in 0..a.len() {
                prop_assert_eq!(a[i] == a[j], c[i] == c[j]);
            }
        }
    }

    #[test]
    fn vi_bound_zero_at_truth_and_nonnegative((truth, other) in pair(1..15), shift in 0usize..50) {
        let p = indicator(&truth);
        prop_assert!(expected_vi_lower_bound(&truth, &p).abs() < 1e-12);
        prop_assert!(expected_vi_lower_bound(&other, &p) >= -1e-12);
        let v = expected_vi_lower_bound(&other, &p);
        prop_assert!((expected_vi_lower_bound(&relabel(&other, shift), &p) - v).abs() < 1e-12);
    }

    #[test]
    fn cocluster_from_partitions_is_symmetric_unit_diagonal(series in prop::collection::vec(prop::collection::vec(0..4usize, 6), 1..5)) {
        let s = PartitionSeries::new(series);
        let stack = CoclusterStack::from_partitions(&s);
        for t in 0..s.times() {
            for i in 0..6 {
                prop_assert_eq!(stack.get(t, i, i), 1.0);
                for j in 0..6 {
                    prop_assert_eq!(stack.get(t, i, j), stack.get(t, j, i));
                }
            }
        }
    }

    #[test]
    fn ar1_precision_inverts_correlation(psi in -0.95f64..0.95, dim in 1usize..12) {
        let k = Ar1Kernel::new(psi, dim).unwrap();
        let prod = k.precision().to_dense() * k.correlation();
        let eye = nalgebra::DMatrix::<f64>::identity(dim, dim);
        prop_assert!((prod - eye).abs().max() < 1e-8);
    }

    #[test]
    fn logistic_beta_reflection(e in -20.0f64..20.0, a in 0.05f64..10.0, b in 0.05f64..10.0) {
        let l = logistic_beta_log_density(e, a, b).unwrap();
        let r = logistic_beta_log_density(-e, b, a).unwrap();
        prop_assert!((l - r).abs() < 1e-10 * l.abs().max(1.0));
    }

    #[test]
    fn polya_mean_symmetric_and_positive(a in 0.05f64..20.0, b in 0.05f64..20.0) {
        let m = polya_mean(a, b);
        prop_assert!(m > 0.0 && m.is_finite());
        prop_assert!((m - polya_mean(b, a)).abs() < 1e-10 * m);
    }

    #[test]
    fn stirling_gamma_update_adds_counts(a in 0.1f64..5.0, b in 0.1f64..5.0, k in 0u64..200, t in 0u64..50) {
        let prior = StirlingGammaParams { a, b, m: 4 };
        let post = prior.posterior(k, t);
        prop_assert!((post.a - (a + k as f64)).abs() < 1e-12);
        prop_assert!((post.b - (b + t as f64)).abs() < 1e-12);
        prop_assert_eq!(post.m, 4);
    }
}
