//! Greedy binary CART trees for classification (Gini) and regression
//! (within-node variance).
//!
//! Training rows are passed as `(row, multiplicity)` pairs so a bootstrap
//! multiset never has to be materialized; every count below is a
//! multiplicity-weighted count.
//!
//! Fixed settings used throughout the experiments: `min_samples_split = 10`,
//! `min_samples_leaf = 5`, unlimited depth, no pruning. Thresholds are
//! midpoints between consecutive distinct sorted feature values and a row
//! goes left when `x[feature] <= threshold`. Equal-gain candidates resolve
//! to the lowest feature index, then the lowest threshold.

use std::cmp::Ordering;

use crate::dataset::{Dataset, Target, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impurity {
    Gini,
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeHyperparams {
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub impurity: Impurity,
}

impl TreeHyperparams {
    pub fn new(
        min_samples_split: usize,
        min_samples_leaf: usize,
        max_depth: Option<usize>,
        impurity: Impurity,
    ) -> Result<Self> {
        if min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if min_samples_split < 2 * min_samples_leaf {
            return Err(Error::invalid(format!(
                "min_samples_split ({min_samples_split}) must be >= 2 * min_samples_leaf ({min_samples_leaf})"
            )));
        }
        Ok(TreeHyperparams {
            min_samples_split,
            min_samples_leaf,
            max_depth,
            impurity,
        })
    }

    /// The fixed experiment settings for `task`.
    pub fn standard(task: Task) -> Self {
        TreeHyperparams {
            min_samples_split: 10,
            min_samples_leaf: 5,
            max_depth: None,
            impurity: Self::impurity_for(task),
        }
    }

    pub fn impurity_for(task: Task) -> Impurity {
        match task {
            Task::Classification { .. } => Impurity::Gini,
            Task::Regression => Impurity::Variance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub enum LeafValue {
    /// Weighted class counts and the matching proportions.
    Classes {
        counts: Vec<usize>,
        proportions: Vec<f64>,
    },
    Mean(f64),
}

impl LeafValue {
    pub fn proportions(&self) -> Option<&[f64]> {
        match self {
            LeafValue::Classes { proportions, .. } => Some(proportions),
            LeafValue::Mean(_) => None,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            LeafValue::Mean(m) => Some(*m),
            LeafValue::Classes { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    /// In-bag weighted sample count.
    pub count: usize,
    pub value: LeafValue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: NodeId,
        right: NodeId,
        count: usize,
    },
    Leaf(Leaf),
}

impl Node {
    pub fn count(&self) -> usize {
        match self {
            Node::Split { count, .. } => *count,
            Node::Leaf(l) => l.count,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    root: NodeId,
    task: Task,
    n_features: usize,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_leaf())
            .map(|(i, _)| NodeId(i))
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Leaf that `x` routes to.
    pub fn apply(&self, x: &[f64]) -> Result<NodeId> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.route(x))
    }

    pub(crate) fn route(&self, x: &[f64]) -> NodeId {
        let mut id = self.root;
        loop {
            match &self.nodes[id.0] {
                Node::Leaf(_) => return id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<&LeafValue> {
        let id = self.apply(x)?;
        Ok(&self.leaf(id).value)
    }

    pub fn leaf_stats(&self, id: NodeId) -> Result<&Leaf> {
        match self.nodes.get(id.0) {
            Some(Node::Leaf(l)) => Ok(l),
            Some(Node::Split { .. }) => Err(Error::NotALeaf(id.0)),
            None => Err(Error::invalid(format!("node id {} out of range", id.0))),
        }
    }

    pub(crate) fn leaf(&self, id: NodeId) -> &Leaf {
        match &self.nodes[id.0] {
            Node::Leaf(l) => l,
            Node::Split { .. } => unreachable!("route() always ends at a leaf"),
        }
    }
}

/// Fits a tree on every row of `data` with multiplicity 1.
pub fn fit_tree_unweighted(data: &Dataset, hp: &TreeHyperparams) -> Result<Tree> {
    let rows: Vec<(usize, usize)> = (0..data.len()).map(|i| (i, 1)).collect();
    fit_tree(data, &rows, hp)
}

/// Fits a tree on the multiset `rows` of `(row index, multiplicity)` pairs.
pub fn fit_tree(data: &Dataset, rows: &[(usize, usize)], hp: &TreeHyperparams) -> Result<Tree> {
    let task = data.task();
    if hp.impurity != TreeHyperparams::impurity_for(task) {
        return Err(Error::invalid(format!(
            "{:?} impurity does not fit task {:?}",
            hp.impurity, task
        )));
    }
    let rows: Vec<(usize, usize)> = rows.iter().copied().filter(|&(_, w)| w > 0).collect();
    if rows.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    if let Some(&(i, _)) = rows.iter().find(|&&(i, _)| i >= data.len()) {
        return Err(Error::invalid(format!("training row {i} out of range")));
    }
    let total: usize = rows.iter().map(|&(_, w)| w).sum();
    if total < hp.min_samples_leaf {
        return Err(Error::invalid(format!(
            "{total} training rows, fewer than min_samples_leaf = {}",
            hp.min_samples_leaf
        )));
    }
    // Dataset construction already rejects non-finite values; this guards
    // trees fitted on hand-assembled feature buffers.
    for &(i, _) in &rows {
        if data.row(i).iter().any(|v| !v.is_finite()) {
            return Err(Error::Data {
                row: i,
                message: "non-finite feature".into(),
            });
        }
    }

    let mut builder = Builder {
        data,
        hp,
        nodes: Vec::new(),
        scratch: Vec::with_capacity(rows.len()),
    };
    let root = builder.grow(rows, 0);
    Ok(Tree {
        nodes: builder.nodes,
        root,
        task,
        n_features: data.n_features(),
    })
}

struct Builder<'a> {
    data: &'a Dataset,
    hp: &'a TreeHyperparams,
    nodes: Vec<Node>,
    scratch: Vec<(f64, usize, usize)>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Sufficient statistics of a (weighted) node.
enum NodeStats {
    Classes { counts: Vec<usize>, total: usize },
    Moments { total: usize, mean: f64, sse: f64 },
}

impl NodeStats {
    fn total(&self) -> usize {
        match self {
            NodeStats::Classes { total, .. } | NodeStats::Moments { total, .. } => *total,
        }
    }

    /// Impurity times weight (Gini: `W - sum c^2 / W`; variance: SSE).
    fn weighted_impurity(&self) -> f64 {
        match self {
            NodeStats::Classes { counts, total } => gini_weighted(counts, *total),
            NodeStats::Moments { sse, .. } => *sse,
        }
    }

    fn leaf(self) -> Leaf {
        match self {
            NodeStats::Classes { counts, total } => {
                let proportions = counts.iter().map(|&c| c as f64 / total as f64).collect();
                Leaf {
                    count: total,
                    value: LeafValue::Classes {
                        counts,
                        proportions,
                    },
                }
            }
            NodeStats::Moments { total, mean, .. } => Leaf {
                count: total,
                value: LeafValue::Mean(mean),
            },
        }
    }
}

fn gini_weighted(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    total as f64 - sq / total as f64
}

impl Builder<'_> {
    fn stats(&self, rows: &[(usize, usize)]) -> NodeStats {
        let total: usize = rows.iter().map(|&(_, w)| w).sum();
        match self.data.target() {
            Target::Class(labels) => {
                let k = self.data.task().num_classes().unwrap_or(0);
                let mut counts = vec![0usize; k];
                for &(i, w) in rows {
                    counts[labels[i]] += w;
                }
                NodeStats::Classes { counts, total }
            }
            Target::Real(y) => {
                let sum: f64 = rows.iter().map(|&(i, w)| w as f64 * y[i]).sum();
                let mean = sum / total as f64;
                let sse = rows
                    .iter()
                    .map(|&(i, w)| w as f64 * (y[i] - mean) * (y[i] - mean))
                    .sum();
                NodeStats::Moments { total, mean, sse }
            }
        }
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    fn grow(&mut self, rows: Vec<(usize, usize)>, depth: usize) -> NodeId {
        let stats = self.stats(&rows);
        let total = stats.total();
        let parent = stats.weighted_impurity();
        let stop = total < self.hp.min_samples_split
            || parent <= 0.0
            || self.hp.max_depth.is_some_and(|d| depth >= d);
        let best = if stop { None } else { self.best_split(&rows, &stats) };
        let tol = 1e-12 * parent.abs().max(1.0);
        match best {
            Some(c) if c.score < parent - tol => {
                let (left, right): (Vec<_>, Vec<_>) = rows
                    .into_iter()
                    .partition(|&(i, _)| self.data.value(i, c.feature) <= c.threshold);
                // Reserve the slot so the parent precedes its children.
                let id = self.push(Node::Leaf(Leaf {
                    count: 0,
                    value: LeafValue::Mean(0.0),
                }));
                let l = self.grow(left, depth + 1);
                let r = self.grow(right, depth + 1);
                self.nodes[id.0] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: l,
                    right: r,
                    count: total,
                };
                id
            }
            _ => self.push(Node::Leaf(stats.leaf())),
        }
    }

    fn best_split(&mut self, rows: &[(usize, usize)], stats: &NodeStats) -> Option<Candidate> {
        let min_leaf = self.hp.min_samples_leaf;
        let total = stats.total();
        let mut best: Option<Candidate> = None;
        let tol = 1e-12 * stats.weighted_impurity().abs().max(1.0);

        for feature in 0..self.data.n_features() {
            // (value, response key, weight); for regression the key indexes y.
            let mut buf = std::mem::take(&mut self.scratch);
            buf.clear();
            buf.extend(
                rows.iter()
                    .map(|&(i, w)| (self.data.value(i, feature), i, w)),
            );
            buf.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

            match (self.data.target(), stats) {
                (Target::Class(labels), NodeStats::Classes { counts, .. }) => {
                    let mut left = vec![0usize; counts.len()];
                    let mut right = counts.clone();
                    let mut wl = 0usize;
                    for pos in 0..buf.len() - 1 {
                        let (v, i, w) = buf[pos];
                        left[labels[i]] += w;
                        right[labels[i]] -= w;
                        wl += w;
                        let next = buf[pos + 1].0;
                        if next <= v || wl < min_leaf || total - wl < min_leaf {
                            continue;
                        }
                        let score = gini_weighted(&left, wl) + gini_weighted(&right, total - wl);
                        consider(&mut best, feature, v, next, score, tol);
                    }
                }
                (Target::Real(y), NodeStats::Moments { mean, .. }) => {
                    // Centered sums keep the SSE updates well conditioned.
                    let (mut sl, mut ql, mut wl) = (0.0f64, 0.0f64, 0usize);
                    let (st, qt) = buf.iter().fold((0.0, 0.0), |(s, q), &(_, i, w)| {
                        let d = y[i] - mean;
                        (s + w as f64 * d, q + w as f64 * d * d)
                    });
                    for pos in 0..buf.len() - 1 {
                        let (v, i, w) = buf[pos];
                        let d = y[i] - mean;
                        sl += w as f64 * d;
                        ql += w as f64 * d * d;
                        wl += w;
                        let next = buf[pos + 1].0;
                        if next <= v || wl < min_leaf || total - wl < min_leaf {
                            continue;
                        }
                        let wr = (total - wl) as f64;
                        let sr = st - sl;
                        let qr = qt - ql;
                        let sse_l = (ql - sl * sl / wl as f64).max(0.0);
                        let sse_r = (qr - sr * sr / wr).max(0.0);
                        consider(&mut best, feature, v, next, sse_l + sse_r, tol);
                    }
                }
                _ => unreachable!("stats kind always follows the target kind"),
            }
            self.scratch = buf;
        }
        best
    }
}

fn consider(best: &mut Option<Candidate>, feature: usize, lo: f64, hi: f64, score: f64, tol: f64) {
    if best.as_ref().is_some_and(|b| score >= b.score - tol) {
        return;
    }
    let mut threshold = lo + (hi - lo) / 2.0;
    if !(threshold >= lo && threshold < hi) {
        threshold = lo;
    }
    *best = Some(Candidate {
        feature,
        threshold,
        score,
    });
}
