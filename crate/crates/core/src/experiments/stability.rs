//! EXP3: variability of leaf statistics across replicates.

use std::collections::HashMap;

use crate::cart::{LeafValue, NodeId};
use crate::dataset::{Dataset, Target};
use crate::ensemble::BaggedEnsemble;
use crate::error::{Error, Result};

use super::{paired, MetricRecord, SchemeMetrics, SchemePair};

/// `R1`..`R4` for one ensemble, using the test set as reference grid.
///
/// For test point `x` and tree `b`, `s_b(x)` is the statistic of the leaf
/// `x` reaches (class-proportion vector or mean) and `r_b(x)` the empirical
/// statistic of the test rows in that same leaf. With `d_b = s_b - r_b`:
///
/// * `T(x)  = mean_b |d_b|²`
/// * `R1(x) = |mean_b d_b|²`
/// * `R2(x) = T(x) - R1(x)` (the spread of `d_b` across replicates)
///
/// `R1`, `R2`, `R3` are test-set means of `R1(x)`, `R2(x)`, `T(x)`, so
/// `R3 = R1 + R2` up to rounding. `R4` is the mean number of leaves per tree.
pub fn exp3_metrics(e: &BaggedEnsemble, test: &Dataset) -> Result<SchemeMetrics> {
    if test.is_empty() {
        return Err(Error::MetricUndefined("EXP3 needs a non-empty test set".into()));
    }
    let dim = e.task().num_classes().unwrap_or(1);
    let n = test.len();
    let b_count = e.len();
    // Per test point: running sum of d_b and of |d_b|².
    let mut sum_d = vec![0.0f64; n * dim];
    let mut sum_sq = vec![0.0f64; n];

    for tree in e.trees() {
        let leaves: Vec<NodeId> = (0..n).map(|i| tree.apply(test.row(i))).collect::<Result<_>>()?;
        let mut reference: HashMap<NodeId, (Vec<f64>, usize)> = HashMap::new();
        for (i, &leaf) in leaves.iter().enumerate() {
            let slot = reference.entry(leaf).or_insert_with(|| (vec![0.0; dim], 0));
            match test.target() {
                Target::Class(y) => slot.0[y[i]] += 1.0,
                Target::Real(y) => slot.0[0] += y[i],
            }
            slot.1 += 1;
        }
        for slot in reference.values_mut() {
            let c = slot.1 as f64;
            slot.0.iter_mut().for_each(|v| *v /= c);
        }
        for (i, &leaf) in leaves.iter().enumerate() {
            let r = &reference[&leaf].0;
            let d = &mut sum_d[i * dim..(i + 1) * dim];
            let mut sq = 0.0;
            match &tree.leaf_stats(leaf)?.value {
                LeafValue::Classes { proportions, .. } => {
                    for c in 0..dim {
                        let g = proportions[c] - r[c];
                        d[c] += g;
                        sq += g * g;
                    }
                }
                LeafValue::Mean(m) => {
                    let g = m - r[0];
                    d[0] += g;
                    sq += g * g;
                }
            }
            sum_sq[i] += sq;
        }
    }

    let bf = b_count as f64;
    let (mut r1, mut r2, mut r3) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let total = sum_sq[i] / bf;
        let bias: f64 = sum_d[i * dim..(i + 1) * dim]
            .iter()
            .map(|s| (s / bf) * (s / bf))
            .sum();
        r1 += bias;
        r2 += total - bias;
        r3 += total;
    }
    let nf = n as f64;
    let r4 = e.trees().iter().map(|t| t.n_leaves() as f64).sum::<f64>() / bf;
    Ok(vec![("R1", r1 / nf), ("R2", r2 / nf), ("R3", r3 / nf), ("R4", r4)])
}

pub fn run_exp3(dataset: &str, kind: &str, test: &Dataset, pair: &SchemePair) -> Result<Vec<MetricRecord>> {
    paired(dataset, kind, pair, |e| exp3_metrics(e, test))
}
