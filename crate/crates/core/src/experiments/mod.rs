//! The five diagnostic experiment families and the variance decomposition.
//!
//! Every experiment computes its metrics for one ensemble through a single
//! function and is called once per resampling scheme; [`diff_records`]
//! then pairs the two result sets. Metric definitions are collected in
//! `METRICS.md` at the repository root.

mod alignment;
mod meta;
mod node_accuracy;
mod stability;
mod variance;

use std::fmt;

pub use alignment::{exp4_metrics, run_exp4, AlignmentSummary, DataSource, Exp4Config};
pub use meta::{exp5_metrics, meta_model_mse, original_mse, run_exp5};
pub use node_accuracy::{exp1_metrics, exp2_metrics, run_exp1, run_exp2};
pub use stability::{exp3_metrics, run_exp3};
pub use variance::{
    replicate_statistics, run_vardecomp, vardecomp_metrics, variance_decomposition,
    ReplicateStatistic, VarianceDecomposition,
};

use crate::cart::TreeHyperparams;
use crate::dataset::Dataset;
use crate::ensemble::{fit_bagged, BaggedEnsemble};
use crate::error::{Error, Result};
use crate::resampling::{Scheme, SchemeConfig};

/// Whether a dataset was generated or loaded from disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    Synthetic,
    Real,
}

impl DatasetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetKind::Synthetic => "synthetic",
            DatasetKind::Real => "real",
        }
    }
}

/// One row of a result table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub dataset: String,
    /// `synthetic`/`real` for EXP1-3 and the variance decomposition,
    /// `class`/`reg` for EXP4-5.
    pub kind: String,
    pub metric: String,
    pub oob_value: f64,
    pub sb_oob_value: f64,
    /// `sb_oob_value - oob_value`.
    pub diff: f64,
}

impl MetricRecord {
    pub fn new(dataset: &str, kind: &str, metric: &str, oob_value: f64, sb_oob_value: f64) -> Self {
        MetricRecord {
            dataset: dataset.to_string(),
            kind: kind.to_string(),
            metric: metric.to_string(),
            oob_value,
            sb_oob_value,
            diff: sb_oob_value - oob_value,
        }
    }
}

/// Named metric values of one experiment under one scheme, in table order.
pub type SchemeMetrics = Vec<(&'static str, f64)>;

/// Pairs per-scheme metric lists into records with `diff = SB - classical`.
pub fn diff_records(
    dataset: &str,
    kind: &str,
    classical: &[(&str, f64)],
    sequential: &[(&str, f64)],
) -> Result<Vec<MetricRecord>> {
    if classical.len() != sequential.len() {
        return Err(Error::KeyMismatch(format!(
            "{dataset}: {} classical metrics vs {} sequential",
            classical.len(),
            sequential.len()
        )));
    }
    classical
        .iter()
        .zip(sequential)
        .map(|(&(mc, c), &(ms, s))| {
            if mc != ms {
                return Err(Error::KeyMismatch(format!("{dataset}: metric `{mc}` vs `{ms}`")));
            }
            Ok(MetricRecord::new(dataset, kind, mc, c, s))
        })
        .collect()
}

/// Merges two record sets keyed by `(dataset, metric)`; `classical` supplies
/// the OOB column and `sequential` the SB-OOB column.
pub fn merge_records(classical: &[MetricRecord], sequential: &[MetricRecord]) -> Result<Vec<MetricRecord>> {
    if classical.len() != sequential.len() {
        return Err(Error::KeyMismatch(format!(
            "{} classical records vs {} sequential",
            classical.len(),
            sequential.len()
        )));
    }
    classical
        .iter()
        .map(|c| {
            let s = sequential
                .iter()
                .find(|s| s.dataset == c.dataset && s.metric == c.metric)
                .ok_or_else(|| {
                    Error::KeyMismatch(format!("no sequential record for ({}, {})", c.dataset, c.metric))
                })?;
            Ok(MetricRecord::new(&c.dataset, &c.kind, &c.metric, c.oob_value, s.oob_value))
        })
        .collect()
}

/// Classical and sequential ensembles built from the same seed.
#[derive(Debug, Clone)]
pub struct SchemePair {
    pub classical: BaggedEnsemble,
    pub sequential: BaggedEnsemble,
}

impl SchemePair {
    /// Fits both ensembles; only the scheme differs between the two configs.
    pub fn fit(train: &Dataset, seed: u64, replicate_count: usize, rho: f64, hp: &TreeHyperparams) -> Result<Self> {
        let base = SchemeConfig::new(Scheme::Classical, rho, seed, replicate_count)?;
        Ok(SchemePair {
            classical: fit_bagged(train, &base, hp)?,
            sequential: fit_bagged(train, &base.with_scheme(Scheme::Sequential), hp)?,
        })
    }

    pub fn get(&self, scheme: Scheme) -> &BaggedEnsemble {
        match scheme {
            Scheme::Classical => &self.classical,
            Scheme::Sequential => &self.sequential,
        }
    }
}

/// Runs `metrics` on both ensembles of `pair` and differences the results.
pub(crate) fn paired<F>(dataset: &str, kind: &str, pair: &SchemePair, metrics: F) -> Result<Vec<MetricRecord>>
where
    F: Fn(&BaggedEnsemble) -> Result<SchemeMetrics>,
{
    let c = metrics(&pair.classical)?;
    let s = metrics(&pair.sequential)?;
    diff_records(dataset, kind, &c, &s)
}

/// Experiment families, in file-name order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Exp5,
    VarDecomp,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Exp1,
        ExperimentKind::Exp2,
        ExperimentKind::Exp3,
        ExperimentKind::Exp4,
        ExperimentKind::Exp5,
        ExperimentKind::VarDecomp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Exp1 => "exp1",
            ExperimentKind::Exp2 => "exp2",
            ExperimentKind::Exp3 => "exp3",
            ExperimentKind::Exp4 => "exp4",
            ExperimentKind::Exp5 => "exp5",
            ExperimentKind::VarDecomp => "vardecomp",
        }
    }

    /// Whether the experiment applies to a task at all.
    pub fn supports(&self, task: crate::dataset::Task) -> bool {
        match self {
            ExperimentKind::Exp1 => task.is_classification(),
            ExperimentKind::Exp2 | ExperimentKind::Exp5 => !task.is_classification(),
            _ => true,
        }
    }

    /// Value of the `type` column for this experiment.
    pub fn type_label(&self, kind: DatasetKind, task: crate::dataset::Task) -> &'static str {
        match self {
            ExperimentKind::Exp4 | ExperimentKind::Exp5 => {
                if task.is_classification() {
                    "class"
                } else {
                    "reg"
                }
            }
            _ => kind.as_str(),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown experiment `{s}`")))
    }
}
