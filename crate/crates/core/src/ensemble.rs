//! Bagged CART ensembles and out-of-bag estimation.
//!
//! Both resampling schemes share every step after replicate generation:
//! the same tree fitting, the same OOB bookkeeping and the same
//! aggregation. Classification aggregates by averaging leaf class
//! proportions and taking the argmax (lowest class index on ties).

use rayon::prelude::*;

use crate::cart::{fit_tree, LeafValue, Tree, TreeHyperparams};
use crate::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::resampling::{IndexResample, Scheme, SchemeConfig};

/// Pipeline stages reported to a [`PipelineObserver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Resample(Scheme),
    FitTree,
    OobSets,
    Aggregate,
    Loss,
}

/// Instrumentation hook. The default observer ignores everything.
pub trait PipelineObserver: Sync {
    fn stage(&self, _stage: Stage) {}
}

/// Observer that records nothing.
pub struct Silent;

impl PipelineObserver for Silent {}

#[derive(Debug, Clone)]
pub struct BaggedEnsemble {
    trees: Vec<Tree>,
    resamples: Vec<IndexResample>,
    config: SchemeConfig,
    task: Task,
    n_train: usize,
}

impl BaggedEnsemble {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn resamples(&self) -> &[IndexResample] {
        &self.resamples
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn scheme(&self) -> Scheme {
        self.config.scheme
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Size of the training sample the replicates index into.
    pub fn n_train(&self) -> usize {
        self.n_train
    }
}

pub fn fit_bagged(
    train: &Dataset,
    config: &SchemeConfig,
    hp: &TreeHyperparams,
) -> Result<BaggedEnsemble> {
    fit_bagged_observed(train, config, hp, &Silent)
}

/// Builds `config.replicate_count` trees, each on its own replicate.
/// Replicate `b` draws from a stream keyed by `(seed, b)` only, so the
/// ensemble is identical for any degree of parallelism.
pub fn fit_bagged_observed(
    train: &Dataset,
    config: &SchemeConfig,
    hp: &TreeHyperparams,
    observer: &dyn PipelineObserver,
) -> Result<BaggedEnsemble> {
    let n = train.len();
    if n == 0 {
        return Err(Error::invalid("empty training set"));
    }
    let fitted: Vec<(IndexResample, Tree)> = (0..config.replicate_count)
        .into_par_iter()
        .map(|b| {
            let resample = config.replicate(n, b)?;
            observer.stage(Stage::Resample(config.scheme));
            let tree = fit_tree(train, &resample.multiplicities(), hp)?;
            observer.stage(Stage::FitTree);
            Ok((resample, tree))
        })
        .collect::<Result<_>>()?;
    let (resamples, trees) = fitted.into_iter().unzip();
    Ok(BaggedEnsemble {
        trees,
        resamples,
        config: *config,
        task: train.task(),
        n_train: n,
    })
}

/// Per-observation out-of-bag replicate lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OobSets {
    per_observation: Vec<Vec<usize>>,
    covered: Vec<usize>,
}

impl OobSets {
    /// Sorted replicate ids `b` whose resample does not contain `i`.
    pub fn oob(&self, i: usize) -> &[usize] {
        &self.per_observation[i]
    }

    /// Observations that are out-of-bag for at least one replicate.
    pub fn covered(&self) -> &[usize] {
        &self.covered
    }

    pub fn is_covered(&self, i: usize) -> bool {
        self.per_observation.get(i).is_some_and(|v| !v.is_empty())
    }

    pub fn n_observations(&self) -> usize {
        self.per_observation.len()
    }

    /// Observations out-of-bag for replicate `b`, in increasing order.
    pub fn out_of_bag_for(&self, b: usize) -> Vec<usize> {
        self.per_observation
            .iter()
            .enumerate()
            .filter(|(_, bs)| bs.binary_search(&b).is_ok())
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn oob_sets(e: &BaggedEnsemble) -> OobSets {
    oob_sets_observed(e, &Silent)
}

pub fn oob_sets_observed(e: &BaggedEnsemble, observer: &dyn PipelineObserver) -> OobSets {
    let n = e.n_train;
    let mut per_observation = vec![Vec::new(); n];
    let mut in_bag = vec![false; n];
    for (b, r) in e.resamples.iter().enumerate() {
        in_bag.iter_mut().for_each(|f| *f = false);
        for &i in r.distinct() {
            in_bag[i] = true;
        }
        for (i, &inside) in in_bag.iter().enumerate() {
            if !inside {
                per_observation[i].push(b);
            }
        }
    }
    let covered = (0..n).filter(|&i| !per_observation[i].is_empty()).collect();
    observer.stage(Stage::OobSets);
    OobSets {
        per_observation,
        covered,
    }
}

/// An aggregated ensemble (or sub-ensemble) output.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Proportions(Vec<f64>),
    Value(f64),
}

impl Prediction {
    /// Argmax class, lowest index on ties. `None` for regression outputs.
    pub fn label(&self) -> Option<usize> {
        match self {
            Prediction::Proportions(p) => Some(argmax(p)),
            Prediction::Value(_) => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Prediction::Value(v) => Some(*v),
            Prediction::Proportions(_) => None,
        }
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = c;
        }
    }
    best
}

/// Unweighted mean of the outputs of `trees` at `x`.
pub(crate) fn aggregate<'a>(
    trees: impl IntoIterator<Item = &'a Tree>,
    task: Task,
    x: &[f64],
) -> Result<Prediction> {
    let mut count = 0usize;
    match task {
        Task::Classification { num_classes } => {
            let mut acc = vec![0.0; num_classes];
            for t in trees {
                if let LeafValue::Classes { proportions, .. } = t.predict(x)? {
                    acc.iter_mut().zip(proportions).for_each(|(a, p)| *a += p);
                }
                count += 1;
            }
            if count == 0 {
                return Err(Error::invalid("no trees to aggregate"));
            }
            acc.iter_mut().for_each(|a| *a /= count as f64);
            Ok(Prediction::Proportions(acc))
        }
        Task::Regression => {
            let mut acc = 0.0;
            for t in trees {
                acc += t.predict(x)?.mean().unwrap_or(0.0);
                count += 1;
            }
            if count == 0 {
                return Err(Error::invalid("no trees to aggregate"));
            }
            Ok(Prediction::Value(acc / count as f64))
        }
    }
}

/// Loss of `pred` against row `i` of `data`: 0-1 loss or squared error.
pub fn loss(pred: &Prediction, data: &Dataset, i: usize) -> f64 {
    match pred {
        Prediction::Proportions(p) => {
            if argmax(p) == data.label(i) {
                0.0
            } else {
                1.0
            }
        }
        Prediction::Value(v) => {
            let r = v - data.response(i);
            r * r
        }
    }
}

/// Average of the trees for which `i` is out-of-bag.
pub fn oob_predict(
    e: &BaggedEnsemble,
    sets: &OobSets,
    train: &Dataset,
    i: usize,
) -> Result<Prediction> {
    oob_predict_observed(e, sets, train, i, &Silent)
}

fn oob_predict_observed(
    e: &BaggedEnsemble,
    sets: &OobSets,
    train: &Dataset,
    i: usize,
    observer: &dyn PipelineObserver,
) -> Result<Prediction> {
    if !sets.is_covered(i) {
        return Err(Error::NotCovered(i));
    }
    let pred = aggregate(sets.oob(i).iter().map(|&b| &e.trees[b]), e.task, train.row(i))?;
    observer.stage(Stage::Aggregate);
    Ok(pred)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OobReport {
    /// `(observation, OOB prediction)` for every covered observation.
    pub predictions: Vec<(usize, Prediction)>,
    /// 0-1 loss rate (classification) or MSE (regression) over covered rows.
    pub error: f64,
    /// Observations with an empty OOB set, excluded from `error`.
    pub excluded: usize,
}

pub fn oob_error(e: &BaggedEnsemble, sets: &OobSets, train: &Dataset) -> Result<OobReport> {
    oob_error_observed(e, sets, train, &Silent)
}

pub fn oob_error_observed(
    e: &BaggedEnsemble,
    sets: &OobSets,
    train: &Dataset,
    observer: &dyn PipelineObserver,
) -> Result<OobReport> {
    if train.len() != e.n_train {
        return Err(Error::invalid(format!(
            "ensemble was fit on {} rows, got {}",
            e.n_train,
            train.len()
        )));
    }
    if sets.covered().is_empty() {
        return Err(Error::EstimateUndefined(
            "no observation is out-of-bag for any replicate".into(),
        ));
    }
    let mut predictions = Vec::with_capacity(sets.covered().len());
    let mut total = 0.0;
    for &i in sets.covered() {
        let pred = oob_predict_observed(e, sets, train, i, observer)?;
        total += loss(&pred, train, i);
        observer.stage(Stage::Loss);
        predictions.push((i, pred));
    }
    let covered = predictions.len();
    Ok(OobReport {
        predictions,
        error: total / covered as f64,
        excluded: e.n_train - covered,
    })
}

/// Average over all trees.
pub fn ensemble_predict(e: &BaggedEnsemble, x: &[f64]) -> Result<Prediction> {
    aggregate(e.trees.iter(), e.task, x)
}

/// Full-ensemble error on `test`.
pub fn test_error(e: &BaggedEnsemble, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EstimateUndefined("empty test set".into()));
    }
    let mut total = 0.0;
    for i in 0..test.len() {
        total += loss(&ensemble_predict(e, test.row(i))?, test, i);
    }
    Ok(total / test.len() as f64)
}

/// Error of a single tree on `data`.
pub fn test_error_of_tree(tree: &Tree, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EstimateUndefined("empty evaluation set".into()));
    }
    let mut total = 0.0;
    for i in 0..data.len() {
        total += loss(&aggregate([tree], tree.task(), data.row(i))?, data, i);
    }
    Ok(total / data.len() as f64)
}
