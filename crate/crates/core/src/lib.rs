//! Classical and sequential bootstrap resampling, bagged CART ensembles,
//! out-of-bag error estimation and the diagnostic experiment suite that
//! compares the two resampling schemes.

pub mod cart;
pub mod datagen;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod harness;
pub mod ingest;
pub mod report;
pub mod resampling;
pub mod rng;

pub use cart::{fit_tree, fit_tree_unweighted, Impurity, Leaf, LeafValue, Node, NodeId, Tree, TreeHyperparams};
pub use dataset::{Dataset, Target, Task};
pub use ensemble::{
    ensemble_predict, fit_bagged, oob_error, oob_predict, oob_sets, test_error, BaggedEnsemble,
    OobReport, OobSets, Prediction,
};
pub use error::{Error, Result};
pub use resampling::{
    distinct_count, inclusion_frequency, multinomial_resample, sequential_resample,
    target_distinct, IndexResample, Scheme, SchemeConfig,
};
pub use rng::Stream;
