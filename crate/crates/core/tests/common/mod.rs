//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use seqboot::{BaggedEnsemble, Dataset, LeafValue};

/// OOB membership by scanning each raw draw sequence.
pub fn brute_force_oob(e: &BaggedEnsemble, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n];
    for (b, r) in e.resamples().iter().enumerate() {
        let mut seen = vec![false; n];
        for &i in r.indices() {
            seen[i] = true;
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                out[i].push(b);
            }
        }
    }
    out
}

/// Soft-vote or mean over the listed trees at row `i`, computed directly
/// from leaf statistics. Classification returns the averaged proportions.
pub fn hand_average(e: &BaggedEnsemble, trees: &[usize], data: &Dataset, i: usize) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for &b in trees {
        let v = match e.trees()[b].predict(data.row(i)).unwrap() {
            LeafValue::Classes { proportions, .. } => proportions.clone(),
            LeafValue::Mean(m) => vec![*m],
        };
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
    }
    acc.iter_mut().for_each(|a| *a /= trees.len() as f64);
    acc
}

/// OOB error from the brute-force membership and hand averages.
pub fn brute_force_oob_error(e: &BaggedEnsemble, data: &Dataset) -> Option<(f64, usize)> {
    let sets = brute_force_oob(e, data.len());
    let mut total = 0.0;
    let mut covered = 0;
    for (i, trees) in sets.iter().enumerate() {
        if trees.is_empty() {
            continue;
        }
        let avg = hand_average(e, trees, data, i);
        total += if data.task().is_classification() {
            let mut best = 0;
            for c in 1..avg.len() {
                if avg[c] > avg[best] {
                    best = c;
                }
            }
            (best != data.label(i)) as u8 as f64
        } else {
            (avg[0] - data.response(i)).powi(2)
        };
        covered += 1;
    }
    (covered > 0).then(|| (total / covered as f64, covered))
}
