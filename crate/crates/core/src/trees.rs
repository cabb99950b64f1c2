//! Regression-tree ensembles: random forests and gradient-boosted trees.
//!
//! Two jobs in this crate: the semi-synthetic outcome generator fitted on
//! seed data, and the classifier behind adversarial validation. Trees are
//! greedy variance-reduction (CART) fits with mean-valued leaves, stored as
//! flat node lists so a fitted ensemble can be frozen to JSON and reloaded
//! bit-exactly.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Variance reduction achieved by this split (SSE units).
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64 },
}

/// A single regression tree as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    idx = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    /// Prediction = arithmetic mean of tree outputs.
    ForestMean,
    /// Prediction = base_score + learning_rate · Σ tree outputs.
    BoostedSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    pub mode: EnsembleMode,
    pub learning_rate: f64,
    pub base_score: f64,
    pub n_features: usize,
}

/// Per-tree fitting controls.
#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Number of candidate features per split; `None` = all.
    pub feature_subsample: Option<usize>,
    /// Minimum SSE reduction for a split to be accepted.
    pub min_gain: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
            feature_subsample: None,
            min_gain: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// `None` = floor(sqrt(d)) candidate features per split.
    pub feature_subsample: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: Some(8),
            min_leaf: 5,
            feature_subsample: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostLoss {
    Squared,
    /// Targets must be 0/1; scores are log-odds.
    Logistic,
}

#[derive(Debug, Clone, Copy)]
pub struct BoostParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub learning_rate: f64,
    pub loss: BoostLoss,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_trees: 100,
            max_depth: Some(3),
            min_leaf: 1,
            learning_rate: 0.1,
            loss: BoostLoss::Squared,
        }
    }
}

struct TreeBuilder<'a> {
    x: &'a Array2<f64>,
    y: &'a [f64],
    params: TreeParams,
    nodes: Vec<TreeNode>,
}

impl<'a> TreeBuilder<'a> {
    /// Best (threshold, gain) for one feature over the node's samples, or
    /// None when no admissible split exists. Gain is computed from the sum
    /// decomposition SSE_parent - SSE_children = Σl²/nl + Σr²/nr - Σ²/n.
    fn best_split_on_feature(&self, idx: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = idx
            .iter()
            .map(|&i| (self.x[(i, feature)], self.y[i]))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pairs.len();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut left_sum = 0.0;
        let mut best: Option<(f64, f64)> = None;
        let parent_term = total * total / n as f64;
        for k in 0..n - 1 {
            left_sum += pairs[k].1;
            if pairs[k].0 == pairs[k + 1].0 {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = (n - k - 1) as f64;
            if (k + 1) < self.params.min_leaf || (n - k - 1) < self.params.min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_term;
            let threshold = 0.5 * (pairs[k].0 + pairs[k + 1].0);
            if best.map_or(true, |(_, g)| gain > g) {
                best = Some((threshold, gain));
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize, rng: &mut impl Rng) -> usize {
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        let at_depth_cap = self.params.max_depth.map_or(false, |d| depth >= d);
        if at_depth_cap || idx.len() < 2 * self.params.min_leaf || idx.len() < 2 {
            self.nodes.push(TreeNode::Leaf { value: mean });
            return self.nodes.len() - 1;
        }
        let d = self.x.ncols();
        let features: Vec<usize> = match self.params.feature_subsample {
            Some(k) if k < d => {
                // Without replacement, then sorted so the scan order (and
                // therefore tie-breaking) is deterministic.
                let mut pool: Vec<usize> = (0..d).collect();
                for i in 0..k {
                    let j = rng.gen_range(i..d);
                    pool.swap(i, j);
                }
                let mut chosen = pool[..k].to_vec();
                chosen.sort_unstable();
                chosen
            }
            _ => (0..d).collect(),
        };
        let mut best: Option<(usize, f64, f64)> = None;
        for &f in &features {
            if let Some((thr, gain)) = self.best_split_on_feature(idx, f) {
                if best.map_or(true, |(_, _, g)| gain > g) {
                    best = Some((f, thr, gain));
                }
            }
        }
        match best {
            Some((feature, threshold, gain)) if gain > self.params.min_gain => {
                let split_at = partition_stable(idx, |i| self.x[(i, feature)] <= threshold);
                let node_idx = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { value: mean }); // reserve slot
                let (left_idx, right_idx) = idx.split_at_mut(split_at);
                let left = self.build(left_idx, depth + 1, rng);
                let right = self.build(right_idx, depth + 1, rng);
                self.nodes[node_idx] = TreeNode::Split {
                    feature,
                    threshold,
                    gain,
                    left,
                    right,
                };
                node_idx
            }
            _ => {
                self.nodes.push(TreeNode::Leaf { value: mean });
                self.nodes.len() - 1
            }
        }
    }
}

/// Stable in-place partition; returns the split point.
fn partition_stable(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut left: Vec<usize> = Vec::with_capacity(idx.len());
    let mut right: Vec<usize> = Vec::with_capacity(idx.len());
    for &i in idx.iter() {
        if pred(i) {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    let split = left.len();
    idx[..split].copy_from_slice(&left);
    idx[split..].copy_from_slice(&right);
    split
}

/// Greedy variance-reduction (CART) fit; leaves hold sample means.
pub fn fit_regression_tree(
    x: &Array2<f64>,
    y: &[f64],
    params: TreeParams,
    seed: u64,
) -> Result<Tree> {
    let mut rng = stream_rng(seed, Stream::TreeFit(0));
    fit_tree_with_rng(x, y, params, &mut rng)
}

fn fit_tree_with_rng(
    x: &Array2<f64>,
    y: &[f64],
    params: TreeParams,
    rng: &mut impl Rng,
) -> Result<Tree> {
    if y.is_empty() || x.nrows() == 0 {
        return Err(Error::EmptyData("tree fit needs at least one sample"));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "tree targets",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    let mut builder = TreeBuilder {
        x,
        y,
        params,
        nodes: Vec::new(),
    };
    builder.build(&mut idx, 0, rng);
    Ok(Tree {
        nodes: builder.nodes,
    })
}

/// Bootstrap-resampled forest, predictions averaged. Per-tree randomness is
/// derived from (seed, tree index), so trees are independent of fit order.
pub fn fit_random_forest(
    x: &Array2<f64>,
    y: &[f64],
    params: ForestParams,
    seed: u64,
) -> Result<TreeEnsemble> {
    if params.n_trees == 0 {
        return Err(Error::InvalidConfig("forest needs n_trees >= 1".into()));
    }
    if y.is_empty() || x.nrows() == 0 {
        return Err(Error::EmptyData("forest fit needs at least one sample"));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "forest targets",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let d = x.ncols();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        feature_subsample: Some(
            params
                .feature_subsample
                .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1)),
        ),
        min_gain: 1e-12,
    };
    use rayon::prelude::*;
    let trees: Result<Vec<Tree>> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, Stream::TreeFit(t as u64));
            let n = x.nrows();
            if params.bootstrap {
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let xb = Array2::from_shape_fn((n, d), |(i, j)| x[(sample[i], j)]);
                let yb: Vec<f64> = sample.iter().map(|&i| y[i]).collect();
                fit_tree_with_rng(&xb, &yb, tree_params, &mut rng)
            } else {
                fit_tree_with_rng(x, y, tree_params, &mut rng)
            }
        })
        .collect();
    Ok(TreeEnsemble {
        trees: trees?,
        mode: EnsembleMode::ForestMean,
        learning_rate: 1.0,
        base_score: 0.0,
        n_features: d,
    })
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Stagewise fit to negative gradients. Squared loss boosts residuals from
/// the mean; logistic loss boosts `y - sigmoid(score)` from the base
/// log-odds, and the ensemble then scores in log-odds.
pub fn fit_gradient_boosting(
    x: &Array2<f64>,
    targets: &[f64],
    params: BoostParams,
    seed: u64,
) -> Result<TreeEnsemble> {
    if targets.is_empty() || x.nrows() == 0 {
        return Err(Error::EmptyData("boosting fit needs at least one sample"));
    }
    if x.nrows() != targets.len() {
        return Err(Error::DimensionMismatch {
            context: "boosting targets",
            expected: x.nrows(),
            got: targets.len(),
        });
    }
    if params.loss == BoostLoss::Logistic {
        if let Some(&bad) = targets.iter().find(|&&t| t != 0.0 && t != 1.0) {
            return Err(Error::InvalidLabel(bad));
        }
    }
    let n = targets.len() as f64;
    let base_score = match params.loss {
        BoostLoss::Squared => targets.iter().sum::<f64>() / n,
        BoostLoss::Logistic => {
            let p = (targets.iter().sum::<f64>() / n).clamp(1e-6, 1.0 - 1e-6);
            (p / (1.0 - p)).ln()
        }
    };
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        feature_subsample: None,
        min_gain: 1e-12,
    };
    let mut scores = vec![base_score; targets.len()];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut rng = stream_rng(seed, Stream::TreeFit(0));
    for _ in 0..params.n_trees {
        let residuals: Vec<f64> = match params.loss {
            BoostLoss::Squared => targets
                .iter()
                .zip(&scores)
                .map(|(t, s)| t - s)
                .collect(),
            BoostLoss::Logistic => targets
                .iter()
                .zip(&scores)
                .map(|(t, s)| t - sigmoid(*s))
                .collect(),
        };
        let tree = fit_tree_with_rng(x, &residuals, tree_params, &mut rng)?;
        for (i, s) in scores.iter_mut().enumerate() {
            *s += params.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    Ok(TreeEnsemble {
        trees,
        mode: EnsembleMode::BoostedSum,
        learning_rate: params.learning_rate,
        base_score,
        n_features: x.ncols(),
    })
}

/// Pure prediction per the ensemble mode.
pub fn ensemble_predict(ensemble: &TreeEnsemble, x: &Array2<f64>) -> Result<Vec<f64>> {
    if x.ncols() != ensemble.n_features {
        return Err(Error::DimensionMismatch {
            context: "ensemble features",
            expected: ensemble.n_features,
            got: x.ncols(),
        });
    }
    match ensemble.mode {
        EnsembleMode::ForestMean => {
            if ensemble.trees.is_empty() {
                return Err(Error::EmptyData("forest has no trees"));
            }
            let inv = 1.0 / ensemble.trees.len() as f64;
            Ok(x.rows()
                .into_iter()
                .map(|row| {
                    ensemble
                        .trees
                        .iter()
                        .map(|t| t.predict_row(row))
                        .sum::<f64>()
                        * inv
                })
                .collect())
        }
        EnsembleMode::BoostedSum => Ok(x
            .rows()
            .into_iter()
            .map(|row| {
                ensemble.base_score
                    + ensemble.learning_rate
                        * ensemble
                            .trees
                            .iter()
                            .map(|t| t.predict_row(row))
                            .sum::<f64>()
            })
            .collect()),
    }
}

/// Total split gain attributed per feature, normalized to sum 1. Returns
/// all zeros (normalization skipped) when no split carries positive gain.
pub fn feature_importance(ensemble: &TreeEnsemble) -> Vec<f64> {
    let mut scores = vec![0.0; ensemble.n_features];
    for tree in &ensemble.trees {
        for node in &tree.nodes {
            if let TreeNode::Split { feature, gain, .. } = node {
                scores[*feature] += gain.max(0.0);
            }
        }
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        for s in &mut scores {
            *s /= total;
        }
    }
    scores
}

/// Freezes an ensemble to self-describing JSON (node lists with indices).
pub fn save_ensemble(ensemble: &TreeEnsemble, path: &std::path::Path) -> Result<()> {
    let body = serde_json::to_string_pretty(ensemble)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_ensemble(path: &std::path::Path) -> Result<TreeEnsemble> {
    let body =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&body).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn column(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn constant_targets_give_single_leaf() {
        let x = column(&[0.0, 1.0, 2.0, 3.0]);
        let y = [5.5; 4];
        let tree = fit_regression_tree(&x, &y, TreeParams::default(), 0).unwrap();
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { value: 5.5 }]);
    }

    #[test]
    fn sign_split_learned_exactly() {
        let x = column(&[-1.0, 1.0, -1.0, 1.0]);
        let y = [-1.0, 1.0, -1.0, 1.0];
        let tree = fit_regression_tree(&x, &y, TreeParams::default(), 0).unwrap();
        assert_eq!(tree.depth(), 1);
        for (i, row) in x.rows().into_iter().enumerate() {
            assert_eq!(tree.predict_row(row), y[i]);
        }
    }

    #[test]
    fn min_leaf_equal_to_n_forces_leaf() {
        let x = column(&[0.0, 1.0, 2.0, 3.0]);
        let y = [1.0, 2.0, 3.0, 4.0];
        let params = TreeParams {
            min_leaf: 4,
            ..TreeParams::default()
        };
        let tree = fit_regression_tree(&x, &y, params, 0).unwrap();
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { value: 2.5 }]);
    }

    #[test]
    fn empty_data_rejected() {
        let x = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            fit_regression_tree(&x, &[], TreeParams::default(), 0),
            Err(Error::EmptyData(_))
        ));
    }

    #[test]
    fn degenerate_forest_equals_single_cart() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((40, 3), |_| rng.gen_range(-2.0..2.0));
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[0] * 2.0 + r[2]).collect();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            feature_subsample: Some(3),
            max_depth: Some(4),
            min_leaf: 2,
        };
        let forest = fit_random_forest(&x, &y, params, 9).unwrap();
        let tree_params = TreeParams {
            max_depth: Some(4),
            min_leaf: 2,
            feature_subsample: Some(3),
            min_gain: 1e-12,
        };
        let single = fit_regression_tree(&x, &y, tree_params, 9).unwrap();
        assert_eq!(forest.trees[0], single);
    }

    #[test]
    fn forest_constant_targets() {
        let x = column(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let y = [7.0; 5];
        let forest = fit_random_forest(&x, &y, ForestParams::default(), 1).unwrap();
        let preds = ensemble_predict(&forest, &column(&[-10.0, 2.5, 99.0])).unwrap();
        assert!(preds.iter().all(|&p| p == 7.0));
    }

    #[test]
    fn forest_fits_linear_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((500, 4), |_| rng.gen_range(-3.0..3.0));
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[1]).collect();
        let params = ForestParams {
            n_trees: 50,
            max_depth: Some(6),
            ..ForestParams::default()
        };
        let forest = fit_random_forest(&x, &y, params, 2).unwrap();
        let preds = ensemble_predict(&forest, &x).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        let ss_res: f64 = y
            .iter()
            .zip(&preds)
            .map(|(v, p)| (v - p).powi(2))
            .sum();
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 > 0.9, "training R² = {r2}");
    }

    #[test]
    fn forest_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Array2::from_shape_fn((60, 3), |_| rng.gen_range(0.0..1.0));
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[0] - r[2]).collect();
        let a = fit_random_forest(&x, &y, ForestParams::default(), 11).unwrap();
        let b = fit_random_forest(&x, &y, ForestParams::default(), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forest_predictions_bounded_by_training_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((80, 2), |_| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = x.rows().into_iter().map(|r| 3.0 * r[0] + r[1]).collect();
        let forest = fit_random_forest(&x, &y, ForestParams::default(), 3).unwrap();
        let (lo, hi) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        let probe = Array2::from_shape_fn((50, 2), |_| rng.gen_range(-10.0..10.0));
        for p in ensemble_predict(&forest, &probe).unwrap() {
            assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
        }
    }

    #[test]
    fn boosting_zero_trees_predicts_mean() {
        let x = column(&[0.0, 1.0, 2.0]);
        let y = [1.0, 2.0, 6.0];
        let params = BoostParams {
            n_trees: 0,
            ..BoostParams::default()
        };
        let model = fit_gradient_boosting(&x, &y, params, 0).unwrap();
        let preds = ensemble_predict(&model, &x).unwrap();
        assert!(preds.iter().all(|&p| p == 3.0));
    }

    #[test]
    fn boosting_single_deep_tree_interpolates() {
        let x = column(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let y = [3.0, -1.0, 4.0, 1.0, 5.0];
        let params = BoostParams {
            n_trees: 1,
            max_depth: None,
            min_leaf: 1,
            learning_rate: 1.0,
            loss: BoostLoss::Squared,
        };
        let model = fit_gradient_boosting(&x, &y, params, 0).unwrap();
        let preds = ensemble_predict(&model, &x).unwrap();
        for (p, t) in preds.iter().zip(&y) {
            assert!((p - t).abs() < 1e-12);
        }
    }

    #[test]
    fn boosting_training_mse_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = Array2::<f64>::from_shape_fn((100, 3), |_| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = x
            .rows()
            .into_iter()
            .map(|r| r[0].sin() * 3.0 + r[1] * r[2])
            .collect();
        let mut prev = f64::INFINITY;
        for n_trees in [0, 5, 20, 60] {
            let params = BoostParams {
                n_trees,
                learning_rate: 0.3,
                ..BoostParams::default()
            };
            let model = fit_gradient_boosting(&x, &y, params, 4).unwrap();
            let preds = ensemble_predict(&model, &x).unwrap();
            let mse: f64 = y
                .iter()
                .zip(&preds)
                .map(|(t, p)| (t - p).powi(2))
                .sum::<f64>()
                / y.len() as f64;
            assert!(mse <= prev + 1e-12, "mse {mse} after {n_trees} trees > {prev}");
            prev = mse;
        }
    }

    #[test]
    fn boosting_logistic_separable_ranks_perfectly() {
        let x = column(&[-2.0, -1.5, -1.0, 1.0, 1.5, 2.0]);
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let params = BoostParams {
            n_trees: 20,
            loss: BoostLoss::Logistic,
            ..BoostParams::default()
        };
        let model = fit_gradient_boosting(&x, &y, params, 0).unwrap();
        let scores = ensemble_predict(&model, &x).unwrap();
        let worst_pos = scores[3..].iter().cloned().fold(f64::INFINITY, f64::min);
        let best_neg = scores[..3].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(worst_pos > best_neg, "scores not separated: {scores:?}");
    }

    #[test]
    fn boosting_logistic_rejects_non_binary() {
        let x = column(&[0.0, 1.0]);
        let params = BoostParams {
            loss: BoostLoss::Logistic,
            ..BoostParams::default()
        };
        assert!(matches!(
            fit_gradient_boosting(&x, &[0.0, 0.5], params, 0),
            Err(Error::InvalidLabel(v)) if v == 0.5
        ));
    }

    #[test]
    fn empty_forest_prediction_is_error() {
        let empty = TreeEnsemble {
            trees: vec![],
            mode: EnsembleMode::ForestMean,
            learning_rate: 1.0,
            base_score: 0.0,
            n_features: 1,
        };
        assert!(matches!(
            ensemble_predict(&empty, &column(&[1.0])),
            Err(Error::EmptyData(_))
        ));
    }

    #[test]
    fn boosted_sum_hand_example() {
        let e = TreeEnsemble {
            trees: vec![
                Tree { nodes: vec![TreeNode::Leaf { value: 1.0 }] },
                Tree { nodes: vec![TreeNode::Leaf { value: 2.0 }] },
            ],
            mode: EnsembleMode::BoostedSum,
            learning_rate: 0.5,
            base_score: 0.0,
            n_features: 1,
        };
        assert_eq!(ensemble_predict(&e, &column(&[0.0])).unwrap(), vec![1.5]);
    }

    #[test]
    fn single_leaf_forest_predicts_value() {
        let e = TreeEnsemble {
            trees: vec![
                Tree { nodes: vec![TreeNode::Leaf { value: 4.0 }] },
                Tree { nodes: vec![TreeNode::Leaf { value: 4.0 }] },
            ],
            mode: EnsembleMode::ForestMean,
            learning_rate: 1.0,
            base_score: 0.0,
            n_features: 2,
        };
        let x = array![[1.0, 2.0], [0.0, 0.0]];
        assert_eq!(ensemble_predict(&e, &x).unwrap(), vec![4.0, 4.0]);
    }

    #[test]
    fn importance_single_split() {
        let mut x = Array2::<f64>::zeros((10, 5));
        for i in 0..10 {
            x[(i, 3)] = i as f64;
        }
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 10.0 }).collect();
        let params = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };
        let tree = fit_regression_tree(&x, &y, params, 0).unwrap();
        let e = TreeEnsemble {
            trees: vec![tree],
            mode: EnsembleMode::ForestMean,
            learning_rate: 1.0,
            base_score: 0.0,
            n_features: 5,
        };
        let imp = feature_importance(&e);
        assert_eq!(imp[3], 1.0);
        assert!(imp.iter().enumerate().all(|(i, &v)| i == 3 || v == 0.0));
    }

    #[test]
    fn importance_all_zero_when_no_split() {
        let x = column(&[0.0, 1.0, 2.0, 3.0]);
        let y = [2.0; 4];
        let model = fit_gradient_boosting(&x, &y, BoostParams::default(), 0).unwrap();
        let imp = feature_importance(&model);
        assert!(imp.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn importance_tracks_signal_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = Array2::from_shape_fn((300, 4), |_| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = x
            .rows()
            .into_iter()
            .map(|r| r[1] + 0.01 * rng.gen_range(-1.0..1.0))
            .collect();
        let model = fit_gradient_boosting(&x, &y, BoostParams::default(), 1).unwrap();
        let imp = feature_importance(&model);
        assert!(imp[1] > 0.9, "importance of signal feature = {}", imp[1]);
    }

    #[test]
    fn ensemble_roundtrips_through_json() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = Array2::from_shape_fn((50, 3), |_| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[0] * r[1] + r[2]).collect();
        let forest = fit_random_forest(&x, &y, ForestParams::default(), 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.json");
        save_ensemble(&forest, &path).unwrap();
        let back = load_ensemble(&path).unwrap();
        assert_eq!(forest, back);
        assert_eq!(
            ensemble_predict(&forest, &x).unwrap(),
            ensemble_predict(&back, &x).unwrap()
        );
    }
}
