use std::collections::BTreeMap;
use std::fs;

use proptest::prelude::*;
use seqboot::harness::{execute, DatasetSource, RunConfig};
use seqboot::experiments::ExperimentKind;
use seqboot::ingest::{dump_csv, fixed_split, load, prepare, DatasetManifest, TargetColumn, TaskKind};
use seqboot::{Dataset, Target, Task};
use tempfile::tempdir;

fn labelled(n: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 * 0.25, (i % 7) as f64 - 3.0]).collect();
    let labels: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % 2).collect();
    Dataset::from_rows("bc", &rows, Target::Class(labels), Task::Classification { num_classes: 2 }).unwrap()
}

#[test]
fn label_dictionary_round_trips() {
    let tmp = tempdir().unwrap();
    let data = labelled(25);
    let names = vec!["benign".to_string(), "malignant".to_string()];
    let path = tmp.path().join("bc.csv");
    dump_csv(&data, &path, Some(&names)).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains(",malignant\n") && text.contains(",benign\n"));

    let mut manifest = DatasetManifest::new("bc", &path, TargetColumn::Name("y".into()), TaskKind::Classification);
    manifest.labels = Some(BTreeMap::from([("benign".into(), 0), ("malignant".into(), 1)]));
    let loaded = load(&manifest).unwrap();
    assert_eq!(loaded.dataset.features(), data.features());
    assert_eq!(loaded.dataset.target(), data.target());
    assert_eq!(loaded.class_names.as_deref(), Some(names.as_slice()));

    // And back out again: byte-identical file.
    let again = tmp.path().join("again.csv");
    dump_csv(&loaded.dataset, &again, loaded.class_names.as_deref()).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn manifest_file_with_dictionary_and_hash() {
    let tmp = tempdir().unwrap();
    fs::write(tmp.path().join("d.csv"), "a,b,label\n1,2,yes\n3,4,no\n5,6,yes\n7,8,no\n").unwrap();
    let mpath = tmp.path().join("d.manifest");
    fs::write(&mpath, "# toy\nname = toy\npath = d.csv\ntarget = label\ntask = classification\nlabels = no:0, yes:1\n").unwrap();
    let m = DatasetManifest::from_file(&mpath).unwrap();
    let a = load(&m).unwrap();
    assert_eq!(a.dataset.target(), &Target::Class(vec![1, 0, 1, 0]));
    assert_eq!(a.content_hash.len(), 64);
    assert_eq!(load(&m).unwrap().content_hash, a.content_hash);
    fs::write(tmp.path().join("d.csv"), "a,b,label\n1,2,yes\n3,4,no\n5,6,yes\n7,9,no\n").unwrap();
    assert_ne!(load(&m).unwrap().content_hash, a.content_hash);
}

#[test]
fn official_test_file_bypasses_split() {
    let tmp = tempdir().unwrap();
    fs::write(tmp.path().join("tr.csv"), "x,y\n1,1.5\n2,2.5\n3,3.5\n4,4.5\n").unwrap();
    fs::write(tmp.path().join("te.csv"), "x,y\n9,9.5\n").unwrap();
    let mpath = tmp.path().join("r.manifest");
    fs::write(&mpath, "name = r\npath = tr.csv\ntest_path = te.csv\ntarget = 1\ntask = regression\n").unwrap();
    let p = prepare(&DatasetManifest::from_file(&mpath).unwrap(), 0).unwrap();
    assert!(p.split.is_none());
    assert_eq!((p.train.len(), p.test.len()), (4, 1));
}

#[test]
fn split_is_shared_by_all_experiment_seeds() {
    let tmp = tempdir().unwrap();
    let data = labelled(90);
    dump_csv(&data, &tmp.path().join("bc.csv"), None).unwrap();
    let mpath = tmp.path().join("bc.manifest");
    fs::write(&mpath, "name = bc\npath = bc.csv\ntarget = y\ntask = classification\n").unwrap();
    let expected = fixed_split(&data, 0).unwrap().fingerprint();
    for seeds in [vec![1], vec![25, 50]] {
        let config = RunConfig {
            experiments: vec![ExperimentKind::Exp1],
            seeds,
            replicate_count: 4,
            datasets: vec![DatasetSource::Manifest(mpath.clone())],
            ..RunConfig::default()
        };
        let out = execute(&config).unwrap();
        assert!(out.datasets[0].detail.contains(&format!("split={expected}")), "{}", out.datasets[0].detail);
    }
    let p1 = prepare(&DatasetManifest::from_file(&mpath).unwrap(), 0).unwrap();
    let p2 = prepare(&DatasetManifest::from_file(&mpath).unwrap(), 0).unwrap();
    assert_eq!(p1.split, p2.split);
    let other = prepare(&DatasetManifest::from_file(&mpath).unwrap(), 1).unwrap();
    assert_ne!(p1.split, other.split);
}

#[test]
fn split_rejects_tiny_data() {
    assert!(fixed_split(&labelled(2), 0).is_err());
    let s = fixed_split(&labelled(3), 0).unwrap();
    assert_eq!((s.train_indices.len(), s.test_indices.len()), (2, 1));
}

proptest! {
    #[test]
    fn split_partitions_rows(n in 3usize..400, seed: u64) {
        let s = fixed_split(&labelled(n), seed).unwrap();
        prop_assert_eq!(s.train_indices.len(), (2.0 * n as f64 / 3.0).round() as usize);
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(&s, &fixed_split(&labelled(n), seed).unwrap());
    }
}
