//! EXP5: second-level regression on OOB-derived features.

use crate::cart::{fit_tree_unweighted, TreeHyperparams};
use crate::dataset::Dataset;
use crate::ensemble::{ensemble_predict, oob_error, oob_sets, test_error_of_tree, BaggedEnsemble};
use crate::error::{Error, Result};

use super::{diff_records, MetricRecord, SchemeMetrics, SchemePair};

/// Test MSE of one CART tree fit on `train` plus an extra feature column and
/// evaluated on `test` plus its extra column.
pub fn meta_model_mse(
    train: &Dataset,
    train_extra: &[f64],
    test: &Dataset,
    test_extra: &[f64],
    hp: &TreeHyperparams,
) -> Result<f64> {
    let train = train.with_appended_feature(train_extra)?;
    let test = test.with_appended_feature(test_extra)?;
    let tree = fit_tree_unweighted(&train, hp)?;
    test_error_of_tree(&tree, &test)
}

/// Test MSE of one CART tree on the original features.
pub fn original_mse(train: &Dataset, test: &Dataset, hp: &TreeHyperparams) -> Result<f64> {
    let tree = fit_tree_unweighted(train, hp)?;
    test_error_of_tree(&tree, test)
}

/// `mse_oob_outputs` for one ensemble: covered training rows get their OOB
/// prediction as an extra feature, test rows the full-ensemble prediction.
pub fn exp5_metrics(
    e: &BaggedEnsemble,
    train: &Dataset,
    test: &Dataset,
    hp: &TreeHyperparams,
) -> Result<f64> {
    if e.task().is_classification() {
        return Err(Error::invalid("EXP5 needs a regression task"));
    }
    let report = oob_error(e, &oob_sets(e), train)?;
    if report.predictions.len() < hp.min_samples_split {
        return Err(Error::MetricUndefined(format!(
            "only {} covered rows, need {}",
            report.predictions.len(),
            hp.min_samples_split
        )));
    }
    let rows: Vec<usize> = report.predictions.iter().map(|(i, _)| *i).collect();
    let train_extra: Vec<f64> = report
        .predictions
        .iter()
        .map(|(_, p)| p.value().unwrap_or(0.0))
        .collect();
    let test_extra: Vec<f64> = (0..test.len())
        .map(|i| ensemble_predict(e, test.row(i)).map(|p| p.value().unwrap_or(0.0)))
        .collect::<Result<_>>()?;
    meta_model_mse(&train.subset(&rows)?, &train_extra, test, &test_extra, hp)
}

/// `mse_oob_outputs` per scheme plus `mse_original`, which does not depend on
/// the scheme and is computed once for both columns.
pub fn run_exp5(
    dataset: &str,
    kind: &str,
    train: &Dataset,
    test: &Dataset,
    pair: &SchemePair,
    hp: &TreeHyperparams,
) -> Result<Vec<MetricRecord>> {
    let baseline = original_mse(train, test, hp)?;
    let per_scheme = |e: &BaggedEnsemble| -> Result<SchemeMetrics> {
        Ok(vec![
            ("mse_oob_outputs", exp5_metrics(e, train, test, hp)?),
            ("mse_original", baseline),
        ])
    };
    let c = per_scheme(&pair.classical)?;
    let s = per_scheme(&pair.sequential)?;
    diff_records(dataset, kind, &c, &s)
}
