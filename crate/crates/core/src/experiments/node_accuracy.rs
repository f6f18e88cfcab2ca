//! EXP1 (classification) and EXP2 (regression): how well in-bag leaf
//! statistics match held-out data routed to the same leaf.

use std::collections::HashMap;

use crate::cart::{LeafValue, NodeId};
use crate::dataset::Dataset;
use crate::ensemble::BaggedEnsemble;
use crate::error::{Error, Result};

use super::{paired, MetricRecord, SchemeMetrics, SchemePair};

/// `E1_B` and `E2_B` for one ensemble.
///
/// For every tree and every leaf `t` reached by at least one test row, with
/// in-bag proportions `q` and test proportions `p`:
/// `E1_B` averages `|q_c* - p_c*|` (`c*` = the leaf's predicted class) and
/// `E2_B` averages `(1/C) Σ_c |q_c - p_c|`, both weighted by the number of
/// test rows in `t`.
///
/// Differences are formed exactly in integers as
/// `q_c - p_c = (w_c M - m_c W) / (W M)`, so for two classes the two
/// metrics are bitwise equal.
pub fn exp1_metrics(e: &BaggedEnsemble, test: &Dataset) -> Result<SchemeMetrics> {
    let num_classes = e
        .task()
        .num_classes()
        .ok_or_else(|| Error::invalid("EXP1 needs a classification task"))?;
    let (mut e1, mut e2, mut weight) = (0.0f64, 0.0f64, 0.0f64);
    for tree in e.trees() {
        let mut test_counts: HashMap<NodeId, Vec<u64>> = HashMap::new();
        for i in 0..test.len() {
            let leaf = tree.apply(test.row(i))?;
            test_counts.entry(leaf).or_insert_with(|| vec![0; num_classes])[test.label(i)] += 1;
        }
        let mut leaves: Vec<_> = test_counts.into_iter().collect();
        leaves.sort_by_key(|(id, _)| *id);
        for (id, m) in leaves {
            let LeafValue::Classes { counts: w, .. } = &tree.leaf_stats(id)?.value else {
                unreachable!("classification tree with a regression leaf");
            };
            let big_w: i128 = w.iter().map(|&c| c as i128).sum();
            let big_m: i128 = m.iter().map(|&c| c as i128).sum();
            let d: Vec<i128> = w
                .iter()
                .zip(&m)
                .map(|(&wc, &mc)| (wc as i128 * big_m - mc as i128 * big_w).abs())
                .collect();
            let predicted = argmax_counts(w);
            let denom = (big_w * big_m) as f64;
            let t1 = d[predicted] as f64 / denom;
            let t2 = d.iter().sum::<i128>() as f64 / (num_classes as i128 * big_w * big_m) as f64;
            let mf = big_m as f64;
            e1 += mf * t1;
            e2 += mf * t2;
            weight += mf;
        }
    }
    if weight == 0.0 {
        return Err(Error::MetricUndefined("no leaf received test data".into()));
    }
    Ok(vec![("E1_B", e1 / weight), ("E2_B", e2 / weight)])
}

fn argmax_counts(w: &[usize]) -> usize {
    let mut best = 0;
    for (c, &v) in w.iter().enumerate() {
        if v > w[best] {
            best = c;
        }
    }
    best
}

pub fn run_exp1(dataset: &str, kind: &str, test: &Dataset, pair: &SchemePair) -> Result<Vec<MetricRecord>> {
    paired(dataset, kind, pair, |e| exp1_metrics(e, test))
}

/// `EB1` and `EB2` for one ensemble.
///
/// For every tree and leaf, the squared gap between the in-bag leaf mean and
/// the mean response of the reference rows routed there, weighted by the
/// number of reference rows. `EB1` uses the tree's out-of-bag training rows,
/// `EB2` the test rows. Leaves without reference rows are skipped.
pub fn exp2_metrics(e: &BaggedEnsemble, train: &Dataset, test: &Dataset) -> Result<SchemeMetrics> {
    if e.task().is_classification() {
        return Err(Error::invalid("EXP2 needs a regression task"));
    }
    if train.len() != e.n_train() {
        return Err(Error::invalid("training set does not match the ensemble"));
    }
    let mut oob_acc = Weighted::default();
    let mut test_acc = Weighted::default();
    for (tree, resample) in e.trees().iter().zip(e.resamples()) {
        let oob_rows = (0..train.len()).filter(|&i| !resample.contains(i));
        accumulate(tree, train, oob_rows, &mut oob_acc)?;
        accumulate(tree, test, 0..test.len(), &mut test_acc)?;
    }
    Ok(vec![("EB1", oob_acc.value("EB1")?), ("EB2", test_acc.value("EB2")?)])
}

#[derive(Default)]
struct Weighted {
    sum: f64,
    weight: f64,
}

impl Weighted {
    fn value(&self, what: &str) -> Result<f64> {
        if self.weight == 0.0 {
            Err(Error::MetricUndefined(format!("{what}: every leaf lacked reference rows")))
        } else {
            Ok(self.sum / self.weight)
        }
    }
}

fn accumulate(
    tree: &crate::cart::Tree,
    data: &Dataset,
    rows: impl Iterator<Item = usize>,
    acc: &mut Weighted,
) -> Result<()> {
    let mut per_leaf: HashMap<NodeId, (f64, usize)> = HashMap::new();
    for i in rows {
        let leaf = tree.apply(data.row(i))?;
        let slot = per_leaf.entry(leaf).or_default();
        slot.0 += data.response(i);
        slot.1 += 1;
    }
    let mut leaves: Vec<_> = per_leaf.into_iter().collect();
    leaves.sort_by_key(|(id, _)| *id);
    for (id, (sum, count)) in leaves {
        let m = tree.leaf_stats(id)?.value.mean().unwrap_or(0.0);
        let gap = m - sum / count as f64;
        acc.sum += count as f64 * gap * gap;
        acc.weight += count as f64;
    }
    Ok(())
}

pub fn run_exp2(
    dataset: &str,
    kind: &str,
    train: &Dataset,
    test: &Dataset,
    pair: &SchemePair,
) -> Result<Vec<MetricRecord>> {
    paired(dataset, kind, pair, |e| exp2_metrics(e, train, test))
}
