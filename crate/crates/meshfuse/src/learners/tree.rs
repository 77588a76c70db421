//! CART decision trees: greedy binary splits with variance reduction
//! (regression) or Gini impurity (classification).
//!
//! Split ties break by lower feature index, then lower threshold, so a
//! training run is a pure function of (data order, params, rng state).

use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::learners::Dataset;

/// Number of features considered per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    pub fn count(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (n_features as f64).log2().floor() as usize,
        };
        m.clamp(1, n_features)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaxFeatures::All => "all",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
        }
    }
}

impl std::str::FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(MaxFeatures::All),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            other => Err(Error::Config(format!("unknown max_features `{other}`"))),
        }
    }
}

/// Growth limits for a single CART tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

/// Learning task for a CART tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    /// Binary classification; leaves store the positive-class fraction.
    Classification,
}

/// One node of a flattened tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
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

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Routes a row to its leaf; `x[feature] <= threshold` goes left.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Trains one CART tree on the full dataset (no feature subsampling).
pub fn train_tree(ds: &Dataset, params: &TreeParams, task: Task) -> Result<Tree> {
    ds.validate()?;
    if ds.is_empty() {
        return Err(Error::Data("cannot train a tree on an empty dataset".into()));
    }
    let indices: Vec<usize> = (0..ds.len()).collect();
    Ok(grow(&ds.features, &ds.labels, indices, params, task, &mut None))
}

/// Grows a tree over `indices`, optionally subsampling features per split
/// with `rng` (required when `max_features` is not `All`).
pub(crate) fn grow(
    x: &[Vec<f64>],
    y: &[f64],
    indices: Vec<usize>,
    params: &TreeParams,
    task: Task,
    rng: &mut Option<&mut ChaCha20Rng>,
) -> Tree {
    let n_features = x.first().map(|r| r.len()).unwrap_or(0);
    let mut nodes = Vec::new();
    nodes.push(Node::Leaf { value: 0.0 });
    let mut stack = vec![(0usize, indices, 0usize)];

    while let Some((slot, idx, depth)) = stack.pop() {
        let leaf_value = leaf_value(y, &idx, task);
        let depth_ok = params.max_depth.map(|d| depth < d).unwrap_or(true);
        if !depth_ok || idx.len() < params.min_samples_split || is_pure(y, &idx, task) {
            nodes[slot] = Node::Leaf { value: leaf_value };
            continue;
        }

        let features = pick_features(n_features, params.max_features, rng);
        let best = best_split(x, y, &idx, &features, params.min_samples_leaf, task);
        let Some((feature, threshold)) = best else {
            nodes[slot] = Node::Leaf { value: leaf_value };
            continue;
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| x[i][feature] <= threshold);
        debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

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

fn leaf_value(y: &[f64], idx: &[usize], task: Task) -> f64 {
    let sum: f64 = idx.iter().map(|&i| y[i]).sum();
    match task {
        Task::Regression => sum / idx.len() as f64,
        Task::Classification => sum / idx.len() as f64,
    }
}

fn is_pure(y: &[f64], idx: &[usize], task: Task) -> bool {
    match task {
        Task::Classification => {
            let pos = idx.iter().filter(|&&i| y[i] == 1.0).count();
            pos == 0 || pos == idx.len()
        }
        Task::Regression => {
            let first = y[idx[0]];
            idx.iter().all(|&i| (y[i] - first).abs() < 1e-12)
        }
    }
}

fn pick_features(
    n_features: usize,
    max_features: MaxFeatures,
    rng: &mut Option<&mut ChaCha20Rng>,
) -> Vec<usize> {
    let m = max_features.count(n_features);
    if m == n_features {
        return (0..n_features).collect();
    }
    let rng = rng
        .as_mut()
        .expect("feature subsampling requires an rng");
    // Partial Fisher-Yates, then sort so scanning order is by feature index.
    let mut pool: Vec<usize> = (0..n_features).collect();
    for i in 0..m {
        let j = i + rand::Rng::random_range(&mut **rng, 0..pool.len() - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..m].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Impurity measured as a total (count-weighted), so parent minus children
/// is the split gain. Regression: sum of squared errors. Classification:
/// `n * gini`.
fn impurity_total(sum: f64, sum_sq: f64, pos: f64, n: f64, task: Task) -> f64 {
    match task {
        Task::Regression => (sum_sq - sum * sum / n).max(0.0),
        Task::Classification => {
            let p = pos / n;
            2.0 * p * (1.0 - p) * n
        }
    }
}

fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
    task: Task,
) -> Option<(usize, f64)> {
    let n = idx.len() as f64;
    let total_sum: f64 = idx.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
    let total_pos: f64 = idx.iter().filter(|&&i| y[i] == 1.0).count() as f64;
    let parent = impurity_total(total_sum, total_sq, total_pos, n, task);

    let mut best: Option<(f64, usize, f64)> = None;
    let mut column: Vec<(f64, f64)> = Vec::with_capacity(idx.len());
    for &f in features {
        column.clear();
        column.extend(idx.iter().map(|&i| (x[i][f], y[i])));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

        let mut left_n = 0.0;
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let mut left_pos = 0.0;
        for w in 0..column.len() - 1 {
            let (v, label) = column[w];
            left_n += 1.0;
            left_sum += label;
            left_sq += label * label;
            if label == 1.0 {
                left_pos += 1.0;
            }
            let next = column[w + 1].0;
            if next == v {
                continue;
            }
            let left_count = w + 1;
            let right_count = column.len() - left_count;
            if left_count < min_samples_leaf || right_count < min_samples_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let right_pos = total_pos - left_pos;
            // Zero-gain splits are allowed (the node is known impure), so
            // parity-style patterns whose first cut is uninformative still
            // get separated deeper down.
            let gain = parent
                - impurity_total(left_sum, left_sq, left_pos, left_n, task)
                - impurity_total(right_sum, right_sq, right_pos, n - left_n, task);
            // midpoint threshold; first (lowest feature, lowest threshold)
            // wins ties because updates require strictly greater gain
            let threshold = v + (next - v) / 2.0;
            if best.map(|(g, _, _)| gain > g).unwrap_or(true) {
                best = Some((gain, f, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}
