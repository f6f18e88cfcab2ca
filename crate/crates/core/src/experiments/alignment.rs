//! EXP4: agreement between the OOB error estimate and test-set error over
//! repeated runs.

use crate::cart::TreeHyperparams;
use crate::datagen::{generate, SyntheticSpec};
use crate::dataset::Dataset;
use crate::ensemble::{fit_bagged, oob_error, oob_sets, test_error};
use crate::error::{Error, Result};
use crate::resampling::{Scheme, SchemeConfig};
use crate::rng::{self, derive_key};

use super::{diff_records, MetricRecord, SchemeMetrics};

/// Where each repetition's data comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// Fresh train/test draws per repetition.
    Synthetic(SyntheticSpec),
    /// One fixed split; only the ensemble stream changes per repetition.
    Fixed { train: Dataset, test: Dataset },
}

#[derive(Debug, Clone, Copy)]
pub struct Exp4Config {
    pub repetitions: usize,
    pub replicate_count: usize,
    pub rho: f64,
    pub seed: u64,
    pub hp: TreeHyperparams,
}

/// Summary of per-repetition `(eOB_r, eTS_r)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentSummary {
    pub absdiff: f64,
    pub e_oob: f64,
    pub e_test: f64,
    pub ratio: f64,
}

impl AlignmentSummary {
    /// `absdiff = mean |eOB_r - eTS_r|`, `ratio = absdiff / sd(eTS_r)` with
    /// the sample (n - 1) standard deviation. When `sd == 0` the ratio is 0
    /// if `absdiff == 0` and undefined otherwise.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let m = pairs.len();
        if m < 2 {
            return Err(Error::MetricUndefined(format!(
                "ratio needs at least 2 repetitions, got {m}"
            )));
        }
        let mf = m as f64;
        let e_oob = pairs.iter().map(|p| p.0).sum::<f64>() / mf;
        let e_test = pairs.iter().map(|p| p.1).sum::<f64>() / mf;
        let absdiff = pairs.iter().map(|p| (p.0 - p.1).abs()).sum::<f64>() / mf;
        let var = pairs.iter().map(|p| (p.1 - e_test).powi(2)).sum::<f64>() / (mf - 1.0);
        let sd = var.sqrt();
        let ratio = if sd > 0.0 {
            absdiff / sd
        } else if absdiff == 0.0 {
            0.0
        } else {
            return Err(Error::MetricUndefined(
                "test error does not vary across repetitions".into(),
            ));
        };
        Ok(AlignmentSummary {
            absdiff,
            e_oob,
            e_test,
            ratio,
        })
    }

    pub fn metrics(&self) -> SchemeMetrics {
        vec![
            ("absdiff", self.absdiff),
            ("eOB", self.e_oob),
            ("eTS", self.e_test),
            ("ratio", self.ratio),
        ]
    }
}

/// `(eOB_r, eTS_r)` for every repetition under `scheme`.
pub fn repetition_errors(source: &DataSource, config: &Exp4Config, scheme: Scheme) -> Result<Vec<(f64, f64)>> {
    (0..config.repetitions)
        .map(|r| {
            let r = r as u64;
            let data;
            let (train, test) = match source {
                DataSource::Synthetic(spec) => {
                    let spec = SyntheticSpec {
                        seed: derive_key(config.seed, &[rng::REPETITION, r, 0]),
                        ..*spec
                    };
                    data = generate(&spec)?;
                    (&data.0, &data.1)
                }
                DataSource::Fixed { train, test } => (train, test),
            };
            let ensemble_seed = derive_key(config.seed, &[rng::REPETITION, r, 1]);
            let cfg = SchemeConfig::new(scheme, config.rho, ensemble_seed, config.replicate_count)?;
            let e = fit_bagged(train, &cfg, &config.hp)?;
            let e_oob = oob_error(&e, &oob_sets(&e), train)?.error;
            Ok((e_oob, test_error(&e, test)?))
        })
        .collect()
}

/// EXP4 metrics for one scheme.
pub fn exp4_metrics(source: &DataSource, config: &Exp4Config, scheme: Scheme) -> Result<SchemeMetrics> {
    Ok(AlignmentSummary::from_pairs(&repetition_errors(source, config, scheme)?)?.metrics())
}

pub fn run_exp4(dataset: &str, kind: &str, source: &DataSource, config: &Exp4Config) -> Result<Vec<MetricRecord>> {
    if config.repetitions < 2 {
        return Err(Error::MetricUndefined("EXP4 needs at least 2 repetitions".into()));
    }
    let c = exp4_metrics(source, config, Scheme::Classical)?;
    let s = exp4_metrics(source, config, Scheme::Sequential)?;
    diff_records(dataset, kind, &c, &s)
}
