//! Gradient-boosted trees: an additive ensemble of depth-limited regression
//! trees fit to per-row gradients and hessians.
//!
//! Squared loss for regression, logistic loss for binary classification.
//! Splits maximize the second-order gain with an L2 leaf penalty of 1;
//! `gamma` is the minimum gain a split must clear and `min_child_weight`
//! the minimum hessian sum per child. Row subsampling (`subsample`) and
//! per-tree feature subsampling (`colsample_bytree`) are seeded per round.

use rand::Rng;

use crate::error::{Error, Result};
use crate::learners::tree::{Node, Tree};
use crate::learners::Dataset;
use crate::rng::{self, salt};

/// L2 penalty on leaf weights.
const REG_LAMBDA: f64 = 1.0;

/// Boosting hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedSpec {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub min_child_weight: f64,
    pub gamma: f64,
}

impl BoostedSpec {
    /// Tuned success-classifier configuration.
    pub fn model_a() -> BoostedSpec {
        BoostedSpec {
            n_estimators: 200,
            max_depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
            colsample_bytree: 1.0,
            min_child_weight: 5.0,
            gamma: 0.2,
        }
    }

    /// Tuned remaining-hops regressor configuration.
    pub fn model_b() -> BoostedSpec {
        BoostedSpec {
            n_estimators: 300,
            max_depth: 8,
            learning_rate: 0.1,
            subsample: 0.8,
            colsample_bytree: 1.0,
            min_child_weight: 1.0,
            gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 || self.max_depth == 0 {
            return Err(Error::Config("n_estimators and max_depth must be >= 1".into()));
        }
        if !(0.0 < self.learning_rate && self.learning_rate <= 1.0) {
            return Err(Error::Config("learning_rate must be in (0,1]".into()));
        }
        if !(0.0 < self.subsample && self.subsample <= 1.0)
            || !(0.0 < self.colsample_bytree && self.colsample_bytree <= 1.0)
        {
            return Err(Error::Config("subsample and colsample_bytree must be in (0,1]".into()));
        }
        if self.min_child_weight < 0.0 || self.gamma < 0.0 {
            return Err(Error::Config("min_child_weight and gamma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Loss family of a boosted ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostTask {
    Regression,
    /// Logistic loss; predictions pass through a sigmoid.
    Classification,
}

/// A trained boosted ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Boosted {
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub task: BoostTask,
    pub spec: BoostedSpec,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Boosted {
    fn raw(&self, x: &[f64]) -> f64 {
        self.base_score
            + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Regression value, or the positive-class probability in (0,1).
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.task {
            BoostTask::Regression => self.raw(x),
            BoostTask::Classification => sigmoid(self.raw(x)),
        }
    }

    /// Training loss of given raw scores, used by the monotonicity test.
    #[cfg(test)]
    fn mean_loss(task: BoostTask, raws: &[f64], labels: &[f64]) -> f64 {
        let n = labels.len() as f64;
        match task {
            BoostTask::Regression => {
                raws.iter()
                    .zip(labels)
                    .map(|(&r, &y)| 0.5 * (r - y) * (r - y))
                    .sum::<f64>()
                    / n
            }
            BoostTask::Classification => {
                raws.iter()
                    .zip(labels)
                    .map(|(&r, &y)| {
                        let p = sigmoid(r).clamp(1e-12, 1.0 - 1e-12);
                        -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
                    })
                    .sum::<f64>()
                    / n
            }
        }
    }
}

fn sample_without_replacement(
    rng: &mut rand_chacha::ChaCha20Rng,
    n: usize,
    fraction: f64,
) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n).collect();
    }
    let m = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + rng.random_range(0..n - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..m].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Trains a boosted ensemble; `seed` drives the row/feature subsampling.
pub fn train_boosted(
    ds: &Dataset,
    spec: &BoostedSpec,
    seed: u64,
    task: BoostTask,
) -> Result<Boosted> {
    ds.validate()?;
    spec.validate()?;
    if ds.is_empty() {
        return Err(Error::Data("cannot boost on an empty dataset".into()));
    }
    if task == BoostTask::Classification && ds.labels.iter().any(|&l| l != 0.0 && l != 1.0) {
        return Err(Error::Data("classification labels must be 0 or 1".into()));
    }
    let n = ds.len();
    let n_features = ds.n_features();
    let base_score = match task {
        BoostTask::Regression => ds.labels.iter().sum::<f64>() / n as f64,
        BoostTask::Classification => {
            let p = (ds.labels.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
            (p / (1.0 - p)).ln()
        }
    };

    let mut raws = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(spec.n_estimators);
    for round in 0..spec.n_estimators {
        for i in 0..n {
            match task {
                BoostTask::Regression => {
                    grad[i] = raws[i] - ds.labels[i];
                    hess[i] = 1.0;
                }
                BoostTask::Classification => {
                    let p = sigmoid(raws[i]);
                    grad[i] = p - ds.labels[i];
                    hess[i] = (p * (1.0 - p)).max(1e-16);
                }
            }
        }
        let mut rng = rng::stream(seed, salt::BOOTSTRAP, round as u64);
        let rows = sample_without_replacement(&mut rng, n, spec.subsample);
        let cols = sample_without_replacement(&mut rng, n_features, spec.colsample_bytree);
        let tree = grow_gradient_tree(&ds.features, &grad, &hess, rows, &cols, spec);
        for (i, r) in raws.iter_mut().enumerate() {
            *r += spec.learning_rate * tree.predict(&ds.features[i]);
        }
        trees.push(tree);
    }
    Ok(Boosted {
        base_score,
        trees,
        learning_rate: spec.learning_rate,
        task,
        spec: spec.clone(),
    })
}

fn leaf_weight(g: f64, h: f64) -> f64 {
    -g / (h + REG_LAMBDA)
}

fn gain_term(g: f64, h: f64) -> f64 {
    g * g / (h + REG_LAMBDA)
}

fn grow_gradient_tree(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: Vec<usize>,
    features: &[usize],
    spec: &BoostedSpec,
) -> Tree {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, indices, 0usize)];

    while let Some((slot, idx, depth)) = stack.pop() {
        let g_total: f64 = idx.iter().map(|&i| grad[i]).sum();
        let h_total: f64 = idx.iter().map(|&i| hess[i]).sum();
        if depth >= spec.max_depth || idx.len() < 2 {
            nodes[slot] = Node::Leaf { value: leaf_weight(g_total, h_total) };
            continue;
        }

        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, f64, f64)> = Vec::with_capacity(idx.len());
        for &f in features {
            column.clear();
            column.extend(idx.iter().map(|&i| (x[i][f], grad[i], hess[i])));
            column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
            let mut g_left = 0.0;
            let mut h_left = 0.0;
            for w in 0..column.len() - 1 {
                let (v, g, h) = column[w];
                g_left += g;
                h_left += h;
                let next = column[w + 1].0;
                if next == v {
                    continue;
                }
                let h_right = h_total - h_left;
                if h_left < spec.min_child_weight || h_right < spec.min_child_weight {
                    continue;
                }
                let g_right = g_total - g_left;
                let gain = 0.5
                    * (gain_term(g_left, h_left) + gain_term(g_right, h_right)
                        - gain_term(g_total, h_total))
                    - spec.gamma;
                if gain <= 0.0 {
                    continue;
                }
                let threshold = v + (next - v) / 2.0;
                if best.map(|(bg, _, _)| gain > bg).unwrap_or(true) {
                    best = Some((gain, f, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            nodes[slot] = Node::Leaf { value: leaf_weight(g_total, h_total) };
            continue;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| x[i][feature] <= threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[slot] = Node::Split { feature, threshold, left, right };
        stack.push((left, left_idx, depth + 1));
        stack.push((right, right_idx, depth + 1));
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_labels_yield_constant_prediction() {
        let ds = Dataset::new(
            (0..10).map(|i| vec![i as f64]).collect(),
            vec![3.5; 10],
            None,
        );
        let spec = BoostedSpec { n_estimators: 20, max_depth: 3, ..BoostedSpec::model_b() };
        let m = train_boosted(&ds, &spec, 1, BoostTask::Regression).unwrap();
        assert_eq!(m.base_score, 3.5);
        for i in 0..10 {
            assert!((m.predict(&[i as f64]) - 3.5).abs() < 1e-9);
        }
    }

    #[test]
    fn training_loss_is_nonincreasing_per_round() {
        use rand::Rng;
        let mut rng = crate::rng::stream(4, 99, 0);
        let ds = Dataset::new(
            (0..80).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect(),
            (0..80).map(|_| rng.random::<f64>() * 10.0).collect(),
            None,
        );
        let spec = BoostedSpec {
            n_estimators: 40,
            max_depth: 3,
            learning_rate: 0.3,
            subsample: 1.0,
            colsample_bytree: 1.0,
            min_child_weight: 1.0,
            gamma: 0.0,
        };
        let m = train_boosted(&ds, &spec, 7, BoostTask::Regression).unwrap();
        let mut raws = vec![m.base_score; ds.len()];
        let mut prev = Boosted::mean_loss(BoostTask::Regression, &raws, &ds.labels);
        for tree in &m.trees {
            for (i, r) in raws.iter_mut().enumerate() {
                *r += m.learning_rate * tree.predict(&ds.features[i]);
            }
            let cur = Boosted::mean_loss(BoostTask::Regression, &raws, &ds.labels);
            assert!(cur <= prev + 1e-12, "loss increased: {prev} -> {cur}");
            prev = cur;
        }
    }

    #[test]
    fn learns_quadratic_function() {
        // Noiseless y = x^2 on [-1, 1] is learnable by axis-aligned trees.
        let n = 400;
        let ds = Dataset::new(
            (0..n).map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64]).collect(),
            (0..n)
                .map(|i| {
                    let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                    x * x
                })
                .collect(),
            None,
        );
        let spec = BoostedSpec {
            n_estimators: 300,
            max_depth: 8,
            learning_rate: 0.1,
            subsample: 1.0,
            colsample_bytree: 1.0,
            min_child_weight: 0.0,
            gamma: 0.0,
        };
        let m = train_boosted(&ds, &spec, 3, BoostTask::Regression).unwrap();
        let mse: f64 = ds
            .features
            .iter()
            .zip(&ds.labels)
            .map(|(x, &y)| (m.predict(x) - y) * (m.predict(x) - y))
            .sum::<f64>()
            / n as f64;
        assert!(mse.sqrt() < 0.05, "train RMSE {}", mse.sqrt());
    }

    #[test]
    fn classifier_outputs_probabilities() {
        let ds = Dataset::new(
            (0..40).map(|i| vec![i as f64]).collect(),
            (0..40).map(|i| if i < 20 { 0.0 } else { 1.0 }).collect(),
            None,
        );
        let spec = BoostedSpec { n_estimators: 50, ..BoostedSpec::model_a() };
        let m = train_boosted(&ds, &spec, 5, BoostTask::Classification).unwrap();
        for i in 0..40 {
            let p = m.predict(&[i as f64]);
            assert!(p > 0.0 && p < 1.0);
        }
        assert!(m.predict(&[2.0]) < 0.5);
        assert!(m.predict(&[38.0]) > 0.5);
    }

    #[test]
    fn training_is_deterministic() {
        use rand::Rng;
        let mut rng = crate::rng::stream(6, 50, 0);
        let ds = Dataset::new(
            (0..60).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect(),
            (0..60).map(|_| rng.random::<f64>()).collect(),
            None,
        );
        let spec = BoostedSpec { n_estimators: 30, ..BoostedSpec::model_b() };
        let a = train_boosted(&ds, &spec, 12, BoostTask::Regression).unwrap();
        let b = train_boosted(&ds, &spec, 12, BoostTask::Regression).unwrap();
        assert_eq!(a, b);
    }
}
