//! Law-of-total-variance decomposition of per-replicate statistics grouped
//! by the replicate's distinct count `U_b`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::dataset::Dataset;
use crate::ensemble::{aggregate, loss, oob_sets, BaggedEnsemble};
use crate::error::{Error, Result};
use crate::resampling::distinct_count;

use super::{paired, MetricRecord, SchemeMetrics, SchemePair};

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceDecomposition {
    /// Mean squared deviation from the overall mean.
    pub total: f64,
    /// Frequency-weighted mean of the within-group variances.
    pub within: f64,
    /// Frequency-weighted variance of the group means.
    pub between: f64,
    /// Number of samples per distinct-count value.
    pub group_sizes: BTreeMap<usize, usize>,
}

/// Population-style grouped decomposition `total = within + between` of
/// `(theta, u)` samples grouped by `u`.
pub fn variance_decomposition(samples: &[(f64, usize)]) -> Result<VarianceDecomposition> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "variance decomposition needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(t, _)| !t.is_finite()) {
        return Err(Error::invalid("non-finite statistic"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let total = samples.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / n;

    // Groups keep sample order so a single group sums exactly like the whole.
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(theta, u) in samples {
        groups.entry(u).or_default().push(theta);
    }
    let (mut within, mut between) = (0.0, 0.0);
    for members in groups.values() {
        let m = members.len() as f64;
        let w = m / n;
        let gmean = members.iter().sum::<f64>() / m;
        let gvar = members.iter().map(|t| (t - gmean).powi(2)).sum::<f64>() / m;
        within += w * gvar;
        between += w * (gmean - mean).powi(2);
    }
    Ok(VarianceDecomposition {
        total,
        within,
        between,
        group_sizes: groups.into_iter().map(|(u, v)| (u, v.len())).collect(),
    })
}

/// Per-replicate statistic `theta_b` fed to the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplicateStatistic {
    /// Error of tree `b` on its own out-of-bag rows.
    #[default]
    OobError,
    /// Number of leaves of tree `b`.
    LeafCount,
    /// Tree `b`'s output at the first test row (class-0 proportion or mean).
    ProbePrediction,
}

impl ReplicateStatistic {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReplicateStatistic::OobError => "oob-error",
            ReplicateStatistic::LeafCount => "leaf-count",
            ReplicateStatistic::ProbePrediction => "probe",
        }
    }
}

impl fmt::Display for ReplicateStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReplicateStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oob-error" => Ok(ReplicateStatistic::OobError),
            "leaf-count" => Ok(ReplicateStatistic::LeafCount),
            "probe" => Ok(ReplicateStatistic::ProbePrediction),
            _ => Err(Error::invalid(format!("unknown replicate statistic `{s}`"))),
        }
    }
}

/// `(theta_b, U_b)` for every replicate that defines the statistic.
pub fn replicate_statistics(
    e: &BaggedEnsemble,
    train: &Dataset,
    test: &Dataset,
    statistic: ReplicateStatistic,
) -> Result<Vec<(f64, usize)>> {
    let mut out = Vec::with_capacity(e.len());
    let sets = match statistic {
        ReplicateStatistic::OobError => Some(oob_sets(e)),
        _ => None,
    };
    for (b, (tree, resample)) in e.trees().iter().zip(e.resamples()).enumerate() {
        let u = distinct_count(resample);
        let theta = match statistic {
            ReplicateStatistic::OobError => {
                let rows = sets.as_ref().map(|s| s.out_of_bag_for(b)).unwrap_or_default();
                if rows.is_empty() {
                    continue;
                }
                let mut total = 0.0;
                for &i in &rows {
                    total += loss(&aggregate([tree], e.task(), train.row(i))?, train, i);
                }
                total / rows.len() as f64
            }
            ReplicateStatistic::LeafCount => tree.n_leaves() as f64,
            ReplicateStatistic::ProbePrediction => {
                if test.is_empty() {
                    return Err(Error::invalid("probe statistic needs a test row"));
                }
                let value = tree.predict(test.row(0))?;
                value
                    .proportions()
                    .map(|p| p[0])
                    .or(value.mean())
                    .unwrap_or(0.0)
            }
        };
        out.push((theta, u));
    }
    Ok(out)
}

pub fn vardecomp_metrics(
    e: &BaggedEnsemble,
    train: &Dataset,
    test: &Dataset,
    statistic: ReplicateStatistic,
) -> Result<SchemeMetrics> {
    let d = variance_decomposition(&replicate_statistics(e, train, test, statistic)?)?;
    Ok(vec![
        ("var_total", d.total),
        ("var_within", d.within),
        ("var_between", d.between),
    ])
}

pub fn run_vardecomp(
    dataset: &str,
    kind: &str,
    train: &Dataset,
    test: &Dataset,
    pair: &SchemePair,
    statistic: ReplicateStatistic,
) -> Result<Vec<MetricRecord>> {
    paired(dataset, kind, pair, |e| vardecomp_metrics(e, train, test, statistic))
}
