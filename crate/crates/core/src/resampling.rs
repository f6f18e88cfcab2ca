//! Bootstrap replicate generation.
//!
//! Two schemes are supported:
//!
//! * **Classical**: `n` i.i.d. uniform draws with replacement. The number of
//!   distinct indices `U` is random with mean `n(1 - (1 - 1/n)^n)`.
//! * **Sequential**: uniform draws with replacement until exactly `k`
//!   distinct indices have been seen. `U == k` on every replicate and the
//!   number of draws (the stopping time) is a partial coupon-collector
//!   variable with mean `n * sum_{j=n-k+1..=n} 1/j`.
//!
//! Indices are 0-based.

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Default target distinct fraction for the sequential scheme.
pub const DEFAULT_RHO: f64 = 0.632;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Classical,
    Sequential,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Classical, Scheme::Sequential];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Classical => "classical",
            Scheme::Sequential => "sequential",
        })
    }
}

/// One bootstrap replicate: the ordered draw sequence plus its distinct set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexResample {
    indices: Vec<usize>,
    /// Sorted, deduplicated `indices`.
    distinct: Vec<usize>,
    scheme: Scheme,
    target_k: Option<usize>,
}

impl IndexResample {
    /// Ordered draw sequence.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of draws. For the sequential scheme this is the stopping time.
    pub fn draw_count(&self) -> usize {
        self.indices.len()
    }

    /// Sorted distinct indices.
    pub fn distinct(&self) -> &[usize] {
        &self.distinct
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn target_k(&self) -> Option<usize> {
        self.target_k
    }

    pub fn contains(&self, i: usize) -> bool {
        self.distinct.binary_search(&i).is_ok()
    }

    /// `(index, multiplicity)` pairs sorted by index.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        let mut sorted = self.indices.clone();
        sorted.sort_unstable();
        let mut out: Vec<(usize, usize)> = Vec::with_capacity(self.distinct.len());
        for i in sorted {
            match out.last_mut() {
                Some((last, m)) if *last == i => *m += 1,
                _ => out.push((i, 1)),
            }
        }
        out
    }

    fn from_draws(indices: Vec<usize>, scheme: Scheme, target_k: Option<usize>) -> Self {
        let mut distinct = indices.clone();
        distinct.sort_unstable();
        distinct.dedup();
        IndexResample {
            indices,
            distinct,
            scheme,
            target_k,
        }
    }
}

/// Cardinality of the replicate's distinct set (`U`).
pub fn distinct_count(r: &IndexResample) -> usize {
    r.distinct.len()
}

/// Classical multinomial bootstrap: exactly `n` uniform draws with replacement.
pub fn multinomial_resample(n: usize, stream: &mut Stream) -> Result<IndexResample> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let indices = (0..n).map(|_| stream.index(n)).collect();
    Ok(IndexResample::from_draws(indices, Scheme::Classical, None))
}

/// Sequential bootstrap: draw until exactly `k` distinct indices are present.
///
/// The last element of the sequence is always the first occurrence of its
/// index, since the loop stops as soon as the `k`-th distinct index appears.
pub fn sequential_resample(n: usize, k: usize, stream: &mut Stream) -> Result<IndexResample> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "target distinct count {k} must lie in [1, {n}]"
        )));
    }
    let mut seen = vec![false; n];
    let mut collected = 0usize;
    let mut indices = Vec::with_capacity(k + k / 2);
    while collected < k {
        let i = stream.index(n);
        indices.push(i);
        if !seen[i] {
            seen[i] = true;
            collected += 1;
        }
    }
    Ok(IndexResample::from_draws(indices, Scheme::Sequential, Some(k)))
}

/// `max(1, floor(rho * n))`.
pub fn target_distinct(n: usize, rho: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(format!("rho = {rho} must lie in (0, 1)")));
    }
    Ok(((rho * n as f64).floor() as usize).max(1))
}

/// Scheme, target fraction, seed and replicate count of one bagging run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub rho: f64,
    pub seed: u64,
    pub replicate_count: usize,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, rho: f64, seed: u64, replicate_count: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid(format!("rho = {rho} must lie in (0, 1)")));
        }
        if replicate_count == 0 {
            return Err(Error::invalid("replicate count must be at least 1"));
        }
        Ok(SchemeConfig {
            scheme,
            rho,
            seed,
            replicate_count,
        })
    }

    pub fn classical(seed: u64, replicate_count: usize) -> Result<Self> {
        Self::new(Scheme::Classical, DEFAULT_RHO, seed, replicate_count)
    }

    pub fn sequential(seed: u64, replicate_count: usize) -> Result<Self> {
        Self::new(Scheme::Sequential, DEFAULT_RHO, seed, replicate_count)
    }

    /// The same configuration under another scheme.
    pub fn with_scheme(self, scheme: Scheme) -> Self {
        SchemeConfig { scheme, ..self }
    }

    /// Stream of replicate `b`. Depends on `(seed, b)` only, never on the
    /// scheme, so both schemes consume identically seeded streams.
    pub fn replicate_stream(&self, b: usize) -> Stream {
        Stream::derive(self.seed, &[rng::ENSEMBLE, b as u64])
    }

    /// Replicate `b` for a sample of size `n`.
    pub fn replicate(&self, n: usize, b: usize) -> Result<IndexResample> {
        let mut stream = self.replicate_stream(b);
        draw(self.scheme, n, target_distinct(n, self.rho)?, &mut stream)
    }
}

/// Draws one replicate under `scheme`; `k` is ignored for the classical scheme.
pub fn draw(scheme: Scheme, n: usize, k: usize, stream: &mut Stream) -> Result<IndexResample> {
    match scheme {
        Scheme::Classical => multinomial_resample(n, stream),
        Scheme::Sequential => sequential_resample(n, k, stream),
    }
}

/// Empirical per-index inclusion rate over `trials` independent replicates.
pub fn inclusion_frequency(
    scheme: Scheme,
    n: usize,
    k: usize,
    trials: usize,
    stream: &mut Stream,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut hits = vec![0u64; n];
    for _ in 0..trials {
        let r = draw(scheme, n, k, stream)?;
        for &i in r.distinct() {
            hits[i] += 1;
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| h as f64 / trials as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_index_cases() {
        let mut s = Stream::new(3);
        let r = multinomial_resample(1, &mut s).unwrap();
        assert_eq!(r.indices(), &[0]);
        assert_eq!(r.distinct(), &[0]);
        let r = sequential_resample(1, 1, &mut s).unwrap();
        assert_eq!(r.indices(), &[0]);
        assert_eq!(r.draw_count(), 1);
    }

    #[test]
    fn argument_errors() {
        let mut s = Stream::new(0);
        assert!(multinomial_resample(0, &mut s).is_err());
        assert!(sequential_resample(5, 0, &mut s).is_err());
        assert!(sequential_resample(5, 6, &mut s).is_err());
        assert!(target_distinct(10, 0.0).is_err());
        assert!(target_distinct(10, 1.0).is_err());
        assert!(target_distinct(10, f64::NAN).is_err());
        assert!(SchemeConfig::new(Scheme::Sequential, 0.5, 0, 0).is_err());
    }

    #[test]
    fn target_distinct_values() {
        assert_eq!(target_distinct(1000, 0.632).unwrap(), 632);
        assert_eq!(target_distinct(10, 0.632).unwrap(), 6);
        assert_eq!(target_distinct(1, 0.632).unwrap(), 1);
        assert_eq!(target_distinct(100, 0.632).unwrap(), 63);
    }

    #[test]
    fn distinct_count_by_hand() {
        let r = IndexResample::from_draws(vec![0, 0, 0], Scheme::Classical, None);
        assert_eq!(distinct_count(&r), 1);
        let r = IndexResample::from_draws(vec![2, 1, 2, 4], Scheme::Classical, None);
        assert_eq!(distinct_count(&r), 3);
        assert_eq!(r.multiplicities(), vec![(1, 1), (2, 2), (4, 1)]);
        let r = sequential_resample(1000, 632, &mut Stream::new(5)).unwrap();
        assert_eq!(distinct_count(&r), 632);
    }

    #[test]
    fn classical_draw_count_is_n() {
        let mut s = Stream::new(11);
        for _ in 0..20 {
            assert_eq!(multinomial_resample(1000, &mut s).unwrap().draw_count(), 1000);
        }
    }

    #[test]
    fn full_coverage_when_k_equals_n() {
        let f = inclusion_frequency(Scheme::Sequential, 10, 10, 1, &mut Stream::new(1)).unwrap();
        assert!(f.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn replicate_ignores_scheme_in_stream() {
        let c = SchemeConfig::classical(9, 4).unwrap();
        let s = c.with_scheme(Scheme::Sequential);
        let mut a = c.replicate_stream(2);
        let mut b = s.replicate_stream(2);
        assert_eq!(a.index(1 << 30), b.index(1 << 30));
    }
}
