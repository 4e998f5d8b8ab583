//! CART regression trees and the bootstrap random forest built from them.
//!
//! Trees are grown greedily with the squared-error criterion. Candidate
//! thresholds are midpoints between consecutive distinct feature values; a
//! sample goes left iff `x[feature] <= threshold`. Equal-gain candidates are
//! resolved toward the lowest feature index, then the lowest threshold.
//!
//! Tree `i` draws from its own [`DetRng`] seeded with `seed ^ i`: first the
//! bootstrap sample (`n` draws of `below(n)`), then, if `max_features` is
//! restricted, a partial Fisher-Yates draw of the candidate features at
//! every node in depth-first, left-first order. Trees are independent, so
//! serial and parallel training produce the same model.

mod io;

pub use io::{load, save};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_NAMES, NUM_FEATURES};
use crate::rng::DetRng;

pub const DEFAULT_TREES: usize = 220;
pub const DEFAULT_SEED: u64 = 42;

/// Number of features examined at each split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxFeatures {
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self) -> usize {
        match self {
            MaxFeatures::All => NUM_FEATURES,
            MaxFeatures::Count(k) => k,
        }
    }
}

impl Serialize for MaxFeatures {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MaxFeatures::All => s.serialize_str("all"),
            MaxFeatures::Count(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for MaxFeatures {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Count(usize),
        }
        match Repr::deserialize(d)? {
            Repr::Name(s) if s == "all" => Ok(MaxFeatures::All),
            Repr::Name(s) => Err(serde::de::Error::custom(format!(
                "expected \"all\" or an integer, got \"{s}\""
            ))),
            Repr::Count(k) => Ok(MaxFeatures::Count(k)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    /// `None` grows until the stopping rules apply.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_estimators: DEFAULT_TREES,
            max_features: MaxFeatures::All,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
            seed: DEFAULT_SEED,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be >= 1".into()));
        }
        if let MaxFeatures::Count(k) = self.max_features {
            if k == 0 || k > NUM_FEATURES {
                return Err(Error::Config(format!(
                    "max_features must be in 1..={NUM_FEATURES}, got {k}"
                )));
            }
        }
        Ok(())
    }
}

/// One training example.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainRow {
    pub features: FeatureVector,
    pub target: f64,
}

impl TrainRow {
    pub fn new(features: FeatureVector, target: f64) -> Self {
        Self { features, target }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Regression tree stored as a flat node list; index 0 is the root and
/// children always follow their parent.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub(crate) fn from_nodes(nodes: Vec<TreeNode>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64; NUM_FEATURES]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// Trained ensemble. Immutable once built, so it can be shared across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomForestModel {
    trees: Vec<Tree>,
    config: TrainConfig,
}

impl RandomForestModel {
    pub(crate) fn from_parts(trees: Vec<Tree>, config: TrainConfig) -> Self {
        Self { trees, config }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn feature_names(&self) -> [&'static str; NUM_FEATURES] {
        FEATURE_NAMES
    }

    /// Mean of the per-tree predictions.
    pub fn predict(&self, fv: &FeatureVector) -> f64 {
        let x = fv.to_array();
        self.trees.iter().map(|t| t.predict(&x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_each(&self, fv: &FeatureVector) -> Vec<f64> {
        let x = fv.to_array();
        self.trees.iter().map(|t| t.predict(&x)).collect()
    }
}

/// Free-function form of [`RandomForestModel::predict`].
pub fn predict(model: &RandomForestModel, fv: &FeatureVector) -> f64 {
    model.predict(fv)
}

struct Dataset {
    x: Vec<[f64; NUM_FEATURES]>,
    y: Vec<f64>,
}

impl Dataset {
    fn new(rows: &[TrainRow], min_rows: usize) -> Result<Self> {
        if rows.len() < min_rows {
            return Err(Error::Data(format!(
                "need at least {min_rows} training rows, got {}",
                rows.len()
            )));
        }
        if let Some(i) = rows
            .iter()
            .position(|r| !r.target.is_finite() || !r.features.is_finite())
        {
            return Err(Error::Data(format!("row {i} contains non-finite values")));
        }
        Ok(Self {
            x: rows.iter().map(|r| r.features.to_array()).collect(),
            y: rows.iter().map(|r| r.target).collect(),
        })
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    cost: f64,
    left_len: usize,
}

struct Grower<'a> {
    data: &'a Dataset,
    config: &'a TrainConfig,
    rng: DetRng,
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn grow(&mut self, mut idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0 });

        let ys: Vec<f64> = idx.iter().map(|&i| self.data.y[i]).collect();
        let pure = ys.iter().all(|&v| v == ys[0]);
        let stop = pure
            || idx.len() < 2 * self.config.min_samples_leaf
            || self.config.max_depth.is_some_and(|d| depth >= d);
        let split = if stop { None } else { self.best_split(&mut idx) };

        match split {
            None => self.nodes[id] = TreeNode::Leaf { value: leaf_value(&ys) },
            Some(s) => {
                let (left, right): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| self.data.x[i][s.feature] <= s.threshold);
                debug_assert_eq!(left.len(), s.left_len);
                let l = self.grow(left, depth + 1);
                let r = self.grow(right, depth + 1);
                self.nodes[id] = TreeNode::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: l,
                    right: r,
                };
            }
        }
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let k = self.config.max_features.resolve();
        let mut all: Vec<usize> = (0..NUM_FEATURES).collect();
        if k < NUM_FEATURES {
            for i in 0..k {
                let j = i + self.rng.below(NUM_FEATURES - i);
                all.swap(i, j);
            }
            all.truncate(k);
            all.sort_unstable();
        }
        all
    }

    fn best_split(&mut self, idx: &mut [usize]) -> Option<Split> {
        let n = idx.len();
        let msl = self.config.min_samples_leaf;
        let mean = idx.iter().map(|&i| self.data.y[i]).sum::<f64>() / n as f64;
        let mut best: Option<Split> = None;

        for f in self.candidate_features() {
            let x = &self.data.x;
            idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));

            let total: f64 = idx.iter().map(|&i| self.data.y[i] - mean).sum();
            let total_sq: f64 = idx
                .iter()
                .map(|&i| (self.data.y[i] - mean) * (self.data.y[i] - mean))
                .sum();
            let (mut sum_l, mut sq_l) = (0.0, 0.0);
            for pos in 1..n {
                let d = self.data.y[idx[pos - 1]] - mean;
                sum_l += d;
                sq_l += d * d;
                let (lo, hi) = (x[idx[pos - 1]][f], x[idx[pos]][f]);
                if lo == hi || pos < msl || n - pos < msl {
                    continue;
                }
                let (nl, nr) = (pos as f64, (n - pos) as f64);
                let sum_r = total - sum_l;
                let sq_r = total_sq - sq_l;
                let cost = (sq_l - sum_l * sum_l / nl) + (sq_r - sum_r * sum_r / nr);
                // Strict comparison keeps the first (lowest feature, lowest
                // threshold) candidate among equal costs.
                if best.as_ref().is_none_or(|b| cost < b.cost) {
                    best = Some(Split {
                        feature: f,
                        threshold: midpoint(lo, hi),
                        cost,
                        left_len: pos,
                    });
                }
            }
        }
        best
    }
}

/// Midpoint of `lo < hi` that still separates them.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo / 2.0 + hi / 2.0;
    if m >= lo && m < hi {
        m
    } else {
        lo
    }
}

fn leaf_value(ys: &[f64]) -> f64 {
    if ys.iter().all(|&v| v == ys[0]) {
        return ys[0];
    }
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    (ys.iter().sum::<f64>() / ys.len() as f64).clamp(lo, hi)
}

/// Grows tree `tree_index` and returns it with its in-bag multiplicities.
fn grow_tree(data: &Dataset, config: &TrainConfig, tree_index: usize) -> (Tree, Vec<u32>) {
    let n = data.y.len();
    let mut rng = DetRng::new(config.seed ^ tree_index as u64);
    let mut in_bag = vec![0u32; n];
    let sample: Vec<usize> = if config.bootstrap {
        (0..n)
            .map(|_| {
                let i = rng.below(n);
                in_bag[i] += 1;
                i
            })
            .collect()
    } else {
        in_bag.iter_mut().for_each(|c| *c = 1);
        (0..n).collect()
    };
    let mut grower = Grower {
        data,
        config,
        rng,
        nodes: Vec::new(),
    };
    grower.grow(sample, 0);
    (Tree::from_nodes(grower.nodes), in_bag)
}

fn fit_with_bags(data: &Dataset, config: &TrainConfig) -> Vec<(Tree, Vec<u32>)> {
    (0..config.n_estimators)
        .into_par_iter()
        .map(|t| grow_tree(data, config, t))
        .collect()
}

/// Trains a forest on `rows`.
pub fn fit(rows: &[TrainRow], config: &TrainConfig) -> Result<RandomForestModel> {
    config.validate()?;
    let data = Dataset::new(rows, 2)?;
    let trees = fit_with_bags(&data, config)
        .into_iter()
        .map(|(t, _)| t)
        .collect();
    Ok(RandomForestModel::from_parts(trees, config.clone()))
}

/// Coefficient of determination; 0 when `targets` has no variance.
pub fn r2_score(targets: &[f64], predictions: &[f64]) -> f64 {
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return 0.0;
    }
    let ss_res: f64 = targets
        .iter()
        .zip(predictions)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    1.0 - ss_res / ss_tot
}

/// Out-of-bag R²: every row is predicted by the trees whose bootstrap
/// sample missed it. Rows that were in every bag are skipped.
pub fn oob_r2(rows: &[TrainRow], config: &TrainConfig) -> Result<f64> {
    config.validate()?;
    if !config.bootstrap {
        return Err(Error::Config("out-of-bag score requires bootstrap".into()));
    }
    let data = Dataset::new(rows, 10)?;
    let bags = fit_with_bags(&data, config);
    let mut targets = Vec::new();
    let mut preds = Vec::new();
    for (i, x) in data.x.iter().enumerate() {
        let (sum, count) = bags
            .iter()
            .filter(|(_, bag)| bag[i] == 0)
            .fold((0.0, 0usize), |(s, c), (t, _)| (s + t.predict(x), c + 1));
        if count > 0 {
            targets.push(data.y[i]);
            preds.push(sum / count as f64);
        }
    }
    if targets.is_empty() {
        return Ok(0.0);
    }
    Ok(r2_score(&targets, &preds))
}
