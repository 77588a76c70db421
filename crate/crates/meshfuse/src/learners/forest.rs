//! Random forest classifier: bagged CART trees with per-split feature
//! subsampling.
//!
//! Per-tree seeds are derived from the master seed before any tree is
//! built, so the parallel and sequential training paths produce identical
//! ensembles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::learners::tree::{grow, MaxFeatures, Task, Tree, TreeParams};
use crate::learners::Dataset;
use crate::rng::{self, salt};

/// Forest hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestSpec {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl ForestSpec {
    /// The tuned forwarder-classifier configuration.
    pub fn model_d() -> ForestSpec {
        ForestSpec {
            n_estimators: 200,
            max_depth: None,
            max_features: MaxFeatures::Log2,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be >= 1".into()));
        }
        if self.min_samples_split < 2 || self.min_samples_leaf < 1 {
            return Err(Error::Config("min_samples_split >= 2 and min_samples_leaf >= 1 required".into()));
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
        }
    }
}

/// A trained binary-classification forest.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub spec: ForestSpec,
    pub seed: u64,
}

impl Forest {
    /// Positive-class probability: the exact fraction of trees voting
    /// positive (a tree votes positive when its leaf fraction exceeds 0.5).
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict(x) > 0.5)
            .count();
        votes as f64 / self.trees.len() as f64
    }
}

fn train_one(features: &[Vec<f64>], labels: &[f64], params: &TreeParams, tree_seed: u64) -> Tree {
    let mut rng = ChaCha20Rng::seed_from_u64(tree_seed);
    let n = labels.len();
    let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    grow(features, labels, indices, params, Task::Classification, &mut Some(&mut rng))
}

fn train_with<F>(ds: &Dataset, spec: &ForestSpec, seed: u64, map: F) -> Result<Forest>
where
    F: Fn(&[u64], &(dyn Fn(&u64) -> Tree + Sync)) -> Vec<Tree>,
{
    ds.validate()?;
    spec.validate()?;
    if ds.is_empty() {
        return Err(Error::Data("cannot train a forest on an empty dataset".into()));
    }
    if ds.labels.iter().any(|&l| l != 0.0 && l != 1.0) {
        return Err(Error::Data("forest labels must be 0 or 1".into()));
    }
    let tree_seeds: Vec<u64> = (0..spec.n_estimators)
        .map(|i| rng::sub_seed(seed, salt::TREE, i as u64))
        .collect();
    let params = spec.tree_params();
    let trees = map(&tree_seeds, &|&s| train_one(&ds.features, &ds.labels, &params, s));
    Ok(Forest { trees, spec: spec.clone(), seed })
}

/// Trains the forest; trees build on the rayon pool when the `parallel`
/// feature is enabled. Identical to [`train_forest_seq`] by construction.
pub fn train_forest(ds: &Dataset, spec: &ForestSpec, seed: u64) -> Result<Forest> {
    train_with(ds, spec, seed, |seeds, f| exec::ordered_map(seeds, f))
}

/// Sequential fallback of [`train_forest`].
pub fn train_forest_seq(ds: &Dataset, spec: &ForestSpec, seed: u64) -> Result<Forest> {
    train_with(ds, spec, seed, |seeds, f| exec::ordered_map_seq(seeds, f))
}
