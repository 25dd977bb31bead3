//! CART regression trees, random-forest ensembles, and evaluation metrics.
//!
//! These learners back both the stressor prediction model and the
//! per-application interference model. Everything is deterministic for a
//! fixed seed: per-tree seeds are pre-derived before any parallel work, so
//! fitting is schedule-independent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Hyperparameters for a single regression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeHyperparams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` means all features.
    pub features_per_split: Option<usize>,
}

impl Default for TreeHyperparams {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_samples_leaf: 2,
            features_per_split: None,
        }
    }
}

/// Hyperparameters for a forest. `features_per_split: None` resolves to
/// `ceil(f / 3)` at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

/// A fitted tree node. Split rule: `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        value: f64,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: Node,
    pub n_features: usize,
    pub hyperparams: TreeHyperparams,
    pub seed: u64,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self.leaf_for(x)? {
            Node::Leaf { value, .. } => Ok(*value),
            Node::Split { .. } => unreachable!("leaf_for returns a leaf"),
        }
    }

    /// The leaf a point routes to; handy for inspecting fitted structure.
    pub fn leaf_for(&self, x: &[f64]) -> Result<&Node> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { .. } => return Ok(node),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<RegressionTree>,
    pub tree_seeds: Vec<u64>,
    pub n_features: usize,
    pub hyperparams: ForestHyperparams,
    /// Out-of-bag R^2, when bootstrap sampling leaves enough held-out
    /// coverage to score it.
    pub oob_r2: Option<f64>,
}

impl RandomForest {
    /// Mean of the per-tree predictions.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let preds = self.tree_predictions(x)?;
        Ok(preds.iter().sum::<f64>() / preds.len() as f64)
    }

    /// Per-tree predictions, exposed so callers can audit the average.
    pub fn tree_predictions(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }
}

fn check_matrix(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput("training data".into()));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let f = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != f {
            return Err(Error::DimensionMismatch {
                expected: f,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
            return Err(Error::NonFiniteValue(i));
        }
    }
    Ok(f)
}

/// Fits a CART regression tree by greedy SSE minimization. Candidate
/// thresholds are midpoints of adjacent distinct sorted feature values;
/// SSE ties resolve to the lowest feature index, then lowest threshold.
pub fn fit_tree(x: &[Vec<f64>], y: &[f64], hp: &TreeHyperparams, seed: u64) -> Result<RegressionTree> {
    let n_features = check_matrix(x, y)?;
    let mut rng = rng_from_seed(seed);
    let indices: Vec<usize> = (0..x.len()).collect();
    let root = grow(x, y, indices, hp, n_features, 0, &mut rng);
    Ok(RegressionTree {
        root,
        n_features,
        hyperparams: hp.clone(),
        seed,
    })
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    reduction: f64,
}

fn node_sse(y: &[f64], indices: &[usize]) -> (f64, f64) {
    let n = indices.len() as f64;
    let sum: f64 = indices.iter().map(|&i| y[i]).sum();
    let sum2: f64 = indices.iter().map(|&i| y[i] * y[i]).sum();
    let mean = sum / n;
    ((sum2 - sum * mean).max(0.0), mean)
}

fn grow(
    x: &[Vec<f64>],
    y: &[f64],
    indices: Vec<usize>,
    hp: &TreeHyperparams,
    n_features: usize,
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> Node {
    let (sse, mean) = node_sse(y, &indices);
    let constant = indices.iter().all(|&i| y[i] == y[indices[0]]);
    if depth >= hp.max_depth || indices.len() < 2 * hp.min_samples_leaf || constant {
        return Node::Leaf {
            value: mean,
            samples: indices.len(),
        };
    }

    let candidates = feature_candidates(n_features, hp.features_per_split, rng);
    let mut best: Option<BestSplit> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(indices.len());
    for &feature in &candidates {
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (x[i][feature], y[i])));
        pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        if let Some((threshold, reduction)) = best_threshold(&pairs, sse, hp.min_samples_leaf) {
            if best.as_ref().map_or(true, |b| reduction > b.reduction) {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    reduction,
                });
            }
        }
    }

    let Some(best) = best else {
        return Node::Leaf {
            value: mean,
            samples: indices.len(),
        };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| x[i][best.feature] <= best.threshold);
    debug_assert!({
        let (l, _) = node_sse(y, &left_idx);
        let (r, _) = node_sse(y, &right_idx);
        l + r <= sse + 1e-9 * (1.0 + sse)
    });
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(x, y, left_idx, hp, n_features, depth + 1, rng)),
        right: Box::new(grow(x, y, right_idx, hp, n_features, depth + 1, rng)),
    }
}

/// Which features a split may use. A subset draw is a partial Fisher-Yates
/// over the feature indices; the result is sorted so the scan order (and
/// hence SSE tie-breaking) stays by ascending feature index.
fn feature_candidates(n_features: usize, subset: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match subset {
        None => (0..n_features).collect(),
        Some(m) if m >= n_features => (0..n_features).collect(),
        Some(m) => {
            let mut all: Vec<usize> = (0..n_features).collect();
            for i in 0..m {
                let j = rng.random_range(i..n_features);
                all.swap(i, j);
            }
            let mut chosen = all[..m].to_vec();
            chosen.sort_unstable();
            chosen
        }
    }
}

/// Best threshold for one feature over value-sorted (value, target) pairs.
/// Returns `(threshold, sse_reduction)`; `None` when no split satisfies the
/// leaf-size floor or the feature is constant.
fn best_threshold(pairs: &[(f64, f64)], parent_sse: f64, min_leaf: usize) -> Option<(f64, f64)> {
    let n = pairs.len();
    let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
    let total_sum2: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
    let mut left_sum = 0.0;
    let mut left_sum2 = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        left_sum += pairs[i].1;
        left_sum2 += pairs[i].1 * pairs[i].1;
        if pairs[i].0 == pairs[i + 1].0 {
            continue;
        }
        let n_left = i + 1;
        let n_right = n - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let sse_left = (left_sum2 - left_sum * left_sum / n_left as f64).max(0.0);
        let right_sum = total_sum - left_sum;
        let sse_right =
            ((total_sum2 - left_sum2) - right_sum * right_sum / n_right as f64).max(0.0);
        let reduction = parent_sse - sse_left - sse_right;
        if reduction > 0.0 && best.map_or(true, |(_, r)| reduction > r) {
            let threshold = pairs[i].0 + (pairs[i + 1].0 - pairs[i].0) / 2.0;
            best = Some((threshold, reduction));
        }
    }
    best
}

/// Fits one forest per output column of `y` (an `n x m` matrix given as
/// rows). Each forest draws per-tree bootstrap samples and per-split random
/// feature subsets.
pub fn fit_forest_multi(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    hp: &ForestHyperparams,
    seed: u64,
) -> Result<Vec<RandomForest>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput("training data".into()));
    }
    let m = y[0].len();
    (0..m)
        .map(|j| {
            let column: Vec<f64> = y.iter().map(|row| row[j]).collect();
            fit_forest(x, &column, hp, derive_seed(seed, &format!("output-{j}")))
        })
        .collect()
}

pub fn fit_forest(x: &[Vec<f64>], y: &[f64], hp: &ForestHyperparams, seed: u64) -> Result<RandomForest> {
    let n_features = check_matrix(x, y)?;
    if x.len() < 2 {
        return Err(Error::TooFewRows {
            got: x.len(),
            need: 2,
        });
    }
    if hp.n_trees < 1 {
        return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
    }
    if let Some(m) = hp.features_per_split {
        if m < 1 || m > n_features {
            return Err(Error::InvalidParameter(format!(
                "features_per_split {m} outside [1, {n_features}]"
            )));
        }
    }
    let features_per_split = hp
        .features_per_split
        .unwrap_or_else(|| n_features.div_ceil(3));
    let tree_hp = TreeHyperparams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        features_per_split: if features_per_split >= n_features {
            None
        } else {
            Some(features_per_split)
        },
    };
    let tree_seeds: Vec<u64> = (0..hp.n_trees)
        .map(|i| derive_seed(seed, &format!("tree-{i}")))
        .collect();

    let n = x.len();
    let fitted: Vec<(RegressionTree, Vec<usize>)> = tree_seeds
        .par_iter()
        .map(|&tree_seed| {
            let mut rng = rng_from_seed(tree_seed);
            let indices: Vec<usize> = if hp.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let root = grow(x, y, indices.clone(), &tree_hp, n_features, 0, &mut rng);
            let tree = RegressionTree {
                root,
                n_features,
                hyperparams: tree_hp.clone(),
                seed: tree_seed,
            };
            (tree, indices)
        })
        .collect();

    let oob_r2 = if hp.bootstrap {
        oob_score(x, y, &fitted)
    } else {
        None
    };
    Ok(RandomForest {
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
        tree_seeds,
        n_features,
        hyperparams: hp.clone(),
        oob_r2,
    })
}

fn oob_score(x: &[Vec<f64>], y: &[f64], fitted: &[(RegressionTree, Vec<usize>)]) -> Option<f64> {
    let n = x.len();
    let mut in_bag = vec![vec![false; n]; fitted.len()];
    for (t, (_, indices)) in fitted.iter().enumerate() {
        for &i in indices {
            in_bag[t][i] = true;
        }
    }
    let mut truths = Vec::new();
    let mut preds = Vec::new();
    for i in 0..n {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, (tree, _)) in fitted.iter().enumerate() {
            if !in_bag[t][i] {
                sum += tree.predict(&x[i]).expect("dimensions fixed");
                count += 1;
            }
        }
        if count > 0 {
            truths.push(y[i]);
            preds.push(sum / count as f64);
        }
    }
    if truths.len() < 2 {
        return None;
    }
    r_squared(&truths, &preds).ok()
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r_squared(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::TooFewRows {
            got: y_true.len(),
            need: 2,
        });
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Prediction quality report: R^2, MAPE, median APE, and the empirical CDF
/// of absolute percentage errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub r2: f64,
    pub mape: f64,
    pub median_ape: f64,
    /// Sorted `(error_pct, cumulative_fraction)` points; the final fraction
    /// is exactly 1.
    pub ape_cdf: Vec<(f64, f64)>,
}

pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<MetricReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::TooFewRows {
            got: y_true.len(),
            need: 2,
        });
    }
    if y_true.iter().any(|t| *t == 0.0) {
        return Err(Error::ZeroTruth);
    }
    let r2 = r_squared(y_true, y_pred)?;
    let mut apes: Vec<f64> = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).abs() / t.abs() * 100.0)
        .collect();
    apes.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite APEs"));
    let n = apes.len();
    let mape = apes.iter().sum::<f64>() / n as f64;
    let median_ape = if n % 2 == 1 {
        apes[n / 2]
    } else {
        (apes[n / 2 - 1] + apes[n / 2]) / 2.0
    };
    let ape_cdf = apes
        .iter()
        .enumerate()
        .map(|(i, &a)| (a, (i + 1) as f64 / n as f64))
        .collect();
    Ok(MetricReport {
        r2,
        mape,
        median_ape,
        ape_cdf,
    })
}
