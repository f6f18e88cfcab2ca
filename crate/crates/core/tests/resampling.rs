use std::collections::BTreeSet;

use proptest::prelude::*;
use seqboot::resampling::{
    distinct_count, draw, inclusion_frequency, multinomial_resample, sequential_resample, target_distinct,
    Scheme, SchemeConfig,
};
use seqboot::Stream;

/// E[U] for n draws with replacement from n, by enumerating all n^n sequences.
fn exhaustive_mean_distinct(n: usize) -> f64 {
    let total = n.pow(n as u32);
    let mut sum = 0usize;
    for code in 0..total {
        let mut seen = vec![false; n];
        let mut c = code;
        for _ in 0..n {
            seen[c % n] = true;
            c /= n;
        }
        sum += seen.iter().filter(|&&s| s).count();
    }
    sum as f64 / total as f64
}

/// Expected draws to collect `k` distinct of `n` coupons.
fn coupon_collector(n: usize, k: usize) -> f64 {
    (0..k).map(|j| n as f64 / (n - j) as f64).sum()
}

#[test]
fn exhaustive_enumeration_matches_closed_form() {
    let exact = exhaustive_mean_distinct(5);
    let closed = 5.0 * (1.0 - (0.8f64).powi(5));
    assert!((exact - closed).abs() < 1e-12);
    assert!((exact - 3.3616).abs() < 1e-12);
}

#[test]
fn classical_mean_distinct_count_n5() {
    let oracle = exhaustive_mean_distinct(5);
    let mut s = Stream::new(11);
    let trials = 100_000;
    let mean = (0..trials)
        .map(|_| distinct_count(&multinomial_resample(5, &mut s).unwrap()) as f64)
        .sum::<f64>()
        / trials as f64;
    assert!((mean - oracle).abs() < 0.02, "{mean}");
}

#[test]
fn sequential_stopping_time_matches_coupon_collector() {
    for (k, expected) in [(3, 3.9167), (5, 11.4167)] {
        let oracle = coupon_collector(5, k);
        assert!((oracle - expected).abs() < 1e-4);
        let mut s = Stream::new(12);
        let trials = 100_000;
        let mean = (0..trials)
            .map(|_| sequential_resample(5, k, &mut s).unwrap().draw_count() as f64)
            .sum::<f64>()
            / trials as f64;
        let tol = if k == 3 { 0.03 } else { 0.06 };
        assert!((mean - oracle).abs() < tol, "k={k}: {mean} vs {oracle}");
    }
}

#[test]
fn inclusion_rates_within_five_standard_errors() {
    let n = 100;
    let trials = 20_000;
    let k = target_distinct(n, 0.632).unwrap();
    assert_eq!(k, 63);
    let classical_p = 1.0 - (1.0 - 1.0 / n as f64).powi(n as i32);
    assert!((classical_p - 0.6340).abs() < 1e-4);
    for (scheme, p) in [(Scheme::Classical, classical_p), (Scheme::Sequential, 0.63)] {
        let freq = inclusion_frequency(scheme, n, k, trials, &mut Stream::new(13)).unwrap();
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for (i, f) in freq.iter().enumerate() {
            assert!((f - p).abs() < 5.0 * se, "{scheme} index {i}: {f}");
        }
    }
}

#[test]
fn sequential_replicates_have_exactly_k_distinct() {
    let cfg = SchemeConfig::sequential(5, 2_000).unwrap();
    for b in 0..cfg.replicate_count {
        let r = cfg.replicate(100, b).unwrap();
        assert_eq!(distinct_count(&r), 63);
        assert_eq!((0..100).filter(|&i| !r.contains(i)).count(), 37);
    }
}

#[test]
fn replicates_are_matched_across_schemes() {
    // Same seed, same replicate index: the first draws coincide.
    let c = SchemeConfig::classical(9, 10).unwrap();
    let s = c.with_scheme(Scheme::Sequential);
    for b in 0..10 {
        let a = c.replicate(50, b).unwrap();
        let q = s.replicate(50, b).unwrap();
        let m = a.indices().len().min(q.indices().len());
        assert_eq!(a.indices()[..m], q.indices()[..m]);
    }
}

#[test]
fn target_distinct_rounding() {
    assert_eq!(target_distinct(1, 0.632).unwrap(), 1);
    assert_eq!(target_distinct(10, 0.632).unwrap(), 6);
    assert_eq!(target_distinct(300, 0.632).unwrap(), 189);
    assert!(target_distinct(0, 0.5).is_err());
    assert!(target_distinct(10, 1.0).is_err());
    assert!(target_distinct(10, 0.0).is_err());
}

proptest! {
    #[test]
    fn sequential_stops_on_the_kth_new_index(n in 1usize..60, frac in 0.01f64..1.0, seed: u64) {
        let k = ((frac * n as f64).ceil() as usize).clamp(1, n);
        let r = sequential_resample(n, k, &mut Stream::new(seed)).unwrap();
        let idx = r.indices();
        prop_assert_eq!(r.distinct().len(), k);
        let before: BTreeSet<usize> = idx[..idx.len() - 1].iter().copied().collect();
        prop_assert_eq!(before.len(), k - 1);
        prop_assert!(!before.contains(idx.last().unwrap()));
        prop_assert!(idx.iter().all(|&i| i < n));
    }

    #[test]
    fn classical_draws_n_indices(n in 1usize..200, seed: u64) {
        let r = multinomial_resample(n, &mut Stream::new(seed)).unwrap();
        prop_assert_eq!(r.indices().len(), n);
        let set: Vec<usize> = r.indices().iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        prop_assert_eq!(r.distinct(), set.as_slice());
        let total: usize = r.multiplicities().iter().map(|m| m.1).sum();
        prop_assert_eq!(total, n);
    }

    #[test]
    fn replicates_are_pure_functions_of_seed(seed: u64, b in 0usize..50, n in 1usize..80) {
        for scheme in Scheme::ALL {
            let cfg = SchemeConfig::new(scheme, 0.632, seed, 50).unwrap();
            prop_assert_eq!(cfg.replicate(n, b).unwrap(), cfg.replicate(n, b).unwrap());
            let k = target_distinct(n, 0.632).unwrap();
            let mut s1 = cfg.replicate_stream(b);
            let mut s2 = cfg.replicate_stream(b);
            prop_assert_eq!(draw(scheme, n, k, &mut s1).unwrap(), draw(scheme, n, k, &mut s2).unwrap());
        }
    }
}
