use proptest::prelude::*;
use seqboot::datagen::{generate, SyntheticName, SyntheticSpec};
use seqboot::experiments::{
    diff_records, exp1_metrics, exp2_metrics, exp3_metrics, meta_model_mse, merge_records, replicate_statistics,
    run_exp1, run_exp3, run_exp4, run_exp5, variance_decomposition, AlignmentSummary, DataSource, Exp4Config,
    MetricRecord, ReplicateStatistic, SchemePair,
};
use seqboot::harness::{execute, DatasetSource, RunConfig};
use seqboot::{fit_bagged, Dataset, Error, Impurity, SchemeConfig, Target, Task, TreeHyperparams};

fn synthetic(name: SyntheticName, n_train: usize, n_test: usize, seed: u64) -> (Dataset, Dataset) {
    generate(&SyntheticSpec { n_train, n_test, ..SyntheticSpec::standard(name, seed) }).unwrap()
}

fn value(records: &[MetricRecord], metric: &str) -> (f64, f64) {
    let r = records.iter().find(|r| r.metric == metric).unwrap();
    (r.oob_value, r.sb_oob_value)
}

#[test]
fn binary_e1_equals_e2_bitwise() {
    for name in [SyntheticName::Twonorm, SyntheticName::Threenorm, SyntheticName::Ringnorm] {
        for seed in [1, 2, 3] {
            let (train, test) = synthetic(name, 150, 400, seed);
            let pair = SchemePair::fit(&train, seed, 20, 0.632, &TreeHyperparams::standard(train.task())).unwrap();
            let recs = run_exp1(name.as_str(), "synthetic", &test, &pair).unwrap();
            assert_eq!(recs[0].metric, "E1_B");
            assert_eq!(recs[0].oob_value.to_bits(), recs[1].oob_value.to_bits());
            assert_eq!(recs[0].sb_oob_value.to_bits(), recs[1].sb_oob_value.to_bits());
        }
    }
}

#[test]
fn waveform_e1_and_e2_differ() {
    let (train, test) = synthetic(SyntheticName::Waveform, 150, 400, 1);
    let e = fit_bagged(&train, &SchemeConfig::classical(1, 10).unwrap(), &TreeHyperparams::standard(train.task())).unwrap();
    let m = exp1_metrics(&e, &test).unwrap();
    assert_ne!(m[0].1, m[1].1);
    assert!(m.iter().all(|(_, v)| (0.0..=1.0).contains(v)));
}

#[test]
fn pure_consistent_leaves_give_zero_e1() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 2) as f64]).collect();
    let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
    let data = Dataset::from_rows("pure", &rows, Target::Class(labels), Task::Classification { num_classes: 2 }).unwrap();
    let e = fit_bagged(&data, &SchemeConfig::sequential(2, 5).unwrap(), &TreeHyperparams::standard(data.task())).unwrap();
    assert_eq!(exp1_metrics(&e, &data).unwrap(), vec![("E1_B", 0.0), ("E2_B", 0.0)]);
}

#[test]
fn constant_response_gives_zero_eb() {
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
    let data = Dataset::from_rows("c", &rows, Target::Real(vec![3.5; 30]), Task::Regression).unwrap();
    let e = fit_bagged(&data, &SchemeConfig::classical(3, 8).unwrap(), &TreeHyperparams::standard(Task::Regression)).unwrap();
    assert_eq!(exp2_metrics(&e, &data, &data).unwrap(), vec![("EB1", 0.0), ("EB2", 0.0)]);
}

#[test]
fn two_leaf_eb_by_hand() {
    // Training response is 0 for x < 5 and 10 for x >= 5, so any in-bag tree
    // that sees both groups has exactly two pure leaves with means 0 and 10,
    // and its threshold lies in [2.5, 6.5].
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let y: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 10.0 }).collect();
    let train = Dataset::from_rows("t", &rows, Target::Real(y), Task::Regression).unwrap();
    let test = Dataset::from_rows("s", &[vec![1.0], vec![2.0], vec![8.0]], Target::Real(vec![1.0, 3.0, 12.0]), Task::Regression)
        .unwrap();
    let hp = TreeHyperparams::new(2, 1, None, Impurity::Variance).unwrap();
    let e = fit_bagged(&train, &SchemeConfig::classical(1, 1).unwrap(), &hp).unwrap();
    assert_eq!(e.trees()[0].n_leaves(), 2);
    // Left leaf: test mean 2 vs 0, two rows. Right leaf: 12 vs 10, one row.
    // EB2 = (2·4 + 1·4) / 3 = 4. OOB rows sit exactly on their leaf mean.
    assert_eq!(exp2_metrics(&e, &train, &test).unwrap(), vec![("EB1", 0.0), ("EB2", 4.0)]);
}

#[test]
fn exp3_total_is_bias_plus_spread() {
    for (name, b) in [(SyntheticName::Waveform, 15), (SyntheticName::Friedman2, 15), (SyntheticName::Ringnorm, 1)] {
        let (train, test) = synthetic(name, 120, 300, 8);
        let pair = SchemePair::fit(&train, 8, b, 0.632, &TreeHyperparams::standard(train.task())).unwrap();
        let recs = run_exp3(name.as_str(), "synthetic", &test, &pair).unwrap();
        for pick in [|r: &MetricRecord| r.oob_value, |r: &MetricRecord| r.sb_oob_value] {
            let g = |m: &str| pick(recs.iter().find(|r| r.metric == m).unwrap());
            let scale = g("R3").abs().max(1.0);
            assert!((g("R3") - g("R1") - g("R2")).abs() <= 1e-10 * scale, "{name:?}");
            assert!(g("R1") >= 0.0 && g("R2") >= -1e-12 * scale);
            if b == 1 {
                assert!(g("R2").abs() <= 1e-15 * scale);
                assert_eq!(g("R3"), g("R1"));
            }
        }
    }
}

#[test]
fn exp3_identical_trees_have_no_spread() {
    // A single feature with pure groups: every resample yields the same split.
    let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 2) as f64]).collect();
    let y: Vec<f64> = (0..60).map(|i| (i % 2) as f64 * 4.0).collect();
    let data = Dataset::from_rows("same", &rows, Target::Real(y), Task::Regression).unwrap();
    let e = fit_bagged(&data, &SchemeConfig::classical(5, 6).unwrap(), &TreeHyperparams::standard(Task::Regression)).unwrap();
    for x in [0.0, 1.0] {
        assert!(e.trees().iter().all(|t| t.predict(&[x]).unwrap().mean() == Some(x * 4.0)));
    }
    let m = exp3_metrics(&e, &data).unwrap();
    assert_eq!(m[1], ("R2", 0.0));
    assert_eq!(m[3], ("R4", 2.0));
}

#[test]
fn exp4_summary_by_hand() {
    let s = AlignmentSummary::from_pairs(&[(0.10, 0.12), (0.20, 0.16)]).unwrap();
    assert!((s.absdiff - 0.03).abs() < 1e-15);
    assert!((s.e_oob - 0.15).abs() < 1e-15);
    assert!((s.e_test - 0.14).abs() < 1e-15);
    // sample sd of {0.12, 0.16} is 0.02·√2
    assert!((s.ratio - 0.03 / (0.02 * 2f64.sqrt())).abs() < 1e-12);
    assert!(matches!(AlignmentSummary::from_pairs(&[(0.1, 0.1)]), Err(Error::MetricUndefined(_))));
    assert_eq!(AlignmentSummary::from_pairs(&[(0.0, 0.0), (0.0, 0.0)]).unwrap().ratio, 0.0);
    assert!(AlignmentSummary::from_pairs(&[(0.1, 0.0), (0.1, 0.0)]).is_err());
}

#[test]
fn exp4_separable_toy_has_zero_absdiff() {
    let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 3) as f64]).collect();
    let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
    let data = Dataset::from_rows("sep", &rows, Target::Class(labels), Task::Classification { num_classes: 3 }).unwrap();
    let source = DataSource::Fixed { train: data.clone(), test: data.clone() };
    let config = Exp4Config { repetitions: 3, replicate_count: 10, rho: 0.632, seed: 1, hp: TreeHyperparams::standard(data.task()) };
    let recs = run_exp4("sep", "class", &source, &config).unwrap();
    for r in &recs {
        assert_eq!((r.oob_value, r.sb_oob_value, r.diff), (0.0, 0.0, 0.0), "{}", r.metric);
    }
}

#[test]
fn exp5_original_mse_is_scheme_independent() {
    for name in [SyntheticName::Friedman1, SyntheticName::Friedman3] {
        let (train, test) = synthetic(name, 120, 300, 9);
        let hp = TreeHyperparams::standard(train.task());
        let pair = SchemePair::fit(&train, 9, 20, 0.632, &hp).unwrap();
        let recs = run_exp5(name.as_str(), "reg", &train, &test, &pair, &hp).unwrap();
        let orig = recs.iter().find(|r| r.metric == "mse_original").unwrap();
        assert_eq!(orig.diff, 0.0);
        assert_eq!(orig.oob_value.to_bits(), orig.sb_oob_value.to_bits());
    }
}

#[test]
fn exp5_perfect_feature_gives_zero_error() {
    let (train, _) = synthetic(SyntheticName::Friedman1, 80, 1, 10);
    let y: Vec<f64> = (0..train.len()).map(|i| train.response(i)).collect();
    let hp = TreeHyperparams::new(2, 1, None, Impurity::Variance).unwrap();
    let mse = meta_model_mse(&train, &y, &train, &y, &hp).unwrap();
    assert!(mse < 1e-20, "{mse}");
}

#[test]
fn exp5_meta_feature_helps_friedman1() {
    let (train, test) = synthetic(SyntheticName::Friedman1, 200, 2000, 1);
    let hp = TreeHyperparams::standard(train.task());
    let pair = SchemePair::fit(&train, 1, 100, 0.632, &hp).unwrap();
    let recs = run_exp5("friedman1", "reg", &train, &test, &pair, &hp).unwrap();
    let (meta, _) = value(&recs, "mse_oob_outputs");
    let (orig, _) = value(&recs, "mse_original");
    assert!(meta < orig, "{meta} vs {orig}");
}

#[test]
fn variance_decomposition_hand_example() {
    let d = variance_decomposition(&[(1.0, 1), (3.0, 1), (2.0, 2), (6.0, 2)]).unwrap();
    assert_eq!((d.total, d.between, d.within), (3.5, 1.0, 2.5));
    assert_eq!(d.group_sizes.into_iter().collect::<Vec<_>>(), vec![(1, 2), (2, 2)]);
    let flat = variance_decomposition(&[(2.0, 1), (2.0, 4), (2.0, 9)]).unwrap();
    assert_eq!((flat.total, flat.within, flat.between), (0.0, 0.0, 0.0));
    assert!(variance_decomposition(&[(1.0, 1)]).is_err());
}

#[test]
fn sequential_replicates_have_no_between_component() {
    let (train, test) = synthetic(SyntheticName::Twonorm, 150, 50, 11);
    let hp = TreeHyperparams::standard(train.task());
    let pair = SchemePair::fit(&train, 11, 40, 0.632, &hp).unwrap();
    for stat in [ReplicateStatistic::OobError, ReplicateStatistic::LeafCount, ReplicateStatistic::ProbePrediction] {
        let seq = variance_decomposition(&replicate_statistics(&pair.sequential, &train, &test, stat).unwrap()).unwrap();
        assert_eq!(seq.between, 0.0, "{stat:?}");
        assert_eq!(seq.within, seq.total);
        assert_eq!(seq.group_sizes.keys().copied().collect::<Vec<_>>(), vec![94]);
        let cls = variance_decomposition(&replicate_statistics(&pair.classical, &train, &test, stat).unwrap()).unwrap();
        assert!(cls.group_sizes.len() > 1);
    }
}

#[test]
fn diff_records_sign_and_keys() {
    let r = diff_records("twonorm", "class", &[("eOB", 0.0904)], &[("eOB", 0.0908)]).unwrap();
    assert!((r[0].diff - 0.0004).abs() < 1e-12);
    let swapped = diff_records("twonorm", "class", &[("eOB", 0.0908)], &[("eOB", 0.0904)]).unwrap();
    assert_eq!(swapped[0].diff, -r[0].diff);
    let same = diff_records("d", "t", &[("a", 1.5), ("b", 2.0)], &[("a", 1.5), ("b", 2.0)]).unwrap();
    assert!(same.iter().all(|r| r.diff == 0.0));
    assert!(matches!(diff_records("d", "t", &[("a", 1.0)], &[("b", 1.0)]), Err(Error::KeyMismatch(_))));
    let c = vec![MetricRecord::new("d", "t", "a", 1.0, f64::NAN)];
    let s = vec![MetricRecord::new("d", "t", "a", 3.0, f64::NAN)];
    assert_eq!(merge_records(&c, &s).unwrap()[0].diff, 2.0);
}

fn small_config(seeds: Vec<u64>) -> RunConfig {
    RunConfig {
        seeds,
        replicate_count: 6,
        repetitions: 2,
        synthetic_sizes: Some((50, 80)),
        datasets: vec![DatasetSource::Synthetic(SyntheticName::Ringnorm), DatasetSource::Synthetic(SyntheticName::Friedman3)],
        ..RunConfig::default()
    }
}

#[test]
fn rerun_seed_produces_identical_records() {
    let main = execute(&small_config(vec![1, 25])).unwrap();
    let rerun = execute(&small_config(vec![25])).unwrap();
    assert_eq!(main.exit_code(), 0);
    for ((exp, seed), records) in &rerun.records {
        assert_eq!(*seed, 25);
        assert_eq!(&main.records[&(*exp, 25)], records, "{exp}");
        assert!(!records.is_empty());
        for r in records {
            assert!(r.oob_value.is_finite() && r.sb_oob_value.is_finite());
            assert_eq!(r.diff, r.sb_oob_value - r.oob_value);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn total_is_within_plus_between(samples in prop::collection::vec((-1e3f64..1e3, 0usize..6), 2..200)) {
        let d = variance_decomposition(&samples).unwrap();
        prop_assert!((d.total - d.within - d.between).abs() <= 1e-10 * d.total.max(1.0));
        prop_assert!(d.within >= 0.0 && d.between >= 0.0);
        prop_assert_eq!(d.group_sizes.values().sum::<usize>(), samples.len());
    }

    #[test]
    fn one_group_has_zero_between(thetas in prop::collection::vec(-1e3f64..1e3, 2..100), u in 0usize..1000) {
        let samples: Vec<(f64, usize)> = thetas.iter().map(|&t| (t, u)).collect();
        let d = variance_decomposition(&samples).unwrap();
        prop_assert_eq!(d.between, 0.0);
        prop_assert_eq!(d.within, d.total);
    }
}
