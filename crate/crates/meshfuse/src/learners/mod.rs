//! From-scratch supervised learners and evaluation metrics.
//!
//! Four algorithm families back the trained bundle: ridge regression
//! ([`ridge`]), CART decision trees ([`tree`]), random forests ([`forest`])
//! and gradient-boosted trees ([`boosted`]). Training is deterministic
//! given (dataset order, spec, seed); forests may parallelize across trees
//! because per-tree seeds are derived from the master seed up front.

pub mod boosted;
pub mod forest;
pub mod ridge;
pub mod tree;

use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;
use crate::rng::{self, salt};
use crate::util::{read_to_string, write_atomic};

/// Which of the four predictive roles a dataset serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelRole {
    /// Delivery success classifier.
    A,
    /// Remaining-hops regressor.
    B,
    /// Remaining-delay regressor.
    C,
    /// Forwarder suitability classifier.
    D,
}

impl ModelRole {
    pub fn is_classification(self) -> bool {
        matches!(self, ModelRole::A | ModelRole::D)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelRole::A => "A",
            ModelRole::B => "B",
            ModelRole::C => "C",
            ModelRole::D => "D",
        }
    }
}

/// Feature rows plus labels; all learners consume this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub role: Option<ModelRole>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>, role: Option<ModelRole>) -> Dataset {
        Dataset { features, labels, role }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::Data("feature/label row counts differ".into()));
        }
        let width = self.n_features();
        if self.features.iter().any(|r| r.len() != width) {
            return Err(Error::Data("ragged feature rows".into()));
        }
        if self.role.map(ModelRole::is_classification).unwrap_or(false)
            && self.labels.iter().any(|&l| l != 0.0 && l != 1.0)
        {
            return Err(Error::Data("classification labels must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            role: self.role,
        }
    }
}

/// Seeded shuffle-then-split; classification roles are stratified by label
/// so both sides keep the global class ratio to within one row.
/// `train_fraction` is the share of rows kept for training.
pub fn split_train_test(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    ds.validate()?;
    if !(0.0 < train_fraction && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must be in (0,1), got {train_fraction}"
        )));
    }
    if ds.len() < 2 {
        return Err(Error::Data("need at least 2 rows to split".into()));
    }
    let mut rng = rng::stream(seed, salt::SPLIT, 0);
    let stratified = ds.role.map(ModelRole::is_classification).unwrap_or(false);

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    if stratified {
        for class in [0.0, 1.0] {
            let mut group: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
            if group.is_empty() {
                continue;
            }
            if group.len() < 2 {
                return Err(Error::Data(format!(
                    "class {class} has fewer than 2 members; cannot stratify"
                )));
            }
            group.shuffle(&mut rng);
            let k = ((train_fraction * group.len() as f64).round() as usize)
                .clamp(1, group.len() - 1);
            train_idx.extend_from_slice(&group[..k]);
            test_idx.extend_from_slice(&group[k..]);
        }
    } else {
        let mut all: Vec<usize> = (0..ds.len()).collect();
        all.shuffle(&mut rng);
        let k = ((train_fraction * all.len() as f64).round() as usize).clamp(1, all.len() - 1);
        train_idx.extend_from_slice(&all[..k]);
        test_idx.extend_from_slice(&all[k..]);
    }
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

/// Classification quality of a scorer at threshold 0.5, positive class 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub precision_pos: f64,
    pub recall_pos: f64,
}

/// Standard classification metrics from scores and binary labels.
/// ROC AUC is the rank statistic with midranks for tied scores.
pub fn evaluate_classifier(scores: &[f64], labels: &[f64]) -> Result<ClassifierMetrics> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Data("scores and labels must be nonempty and equal-length".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("roc_auc undefined on a single-class dataset".into()));
    }

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fne = 0usize;
    let mut correct = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        let pred = s >= 0.5;
        let pos = l == 1.0;
        if pred == pos {
            correct += 1;
        }
        match (pred, pos) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            _ => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fne == 0 { 0.0 } else { tp as f64 / (tp + fne) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };

    // Mann-Whitney formulation: rank all scores ascending with midranks.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).expect("finite scores"));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    let rank_sum_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1.0)
        .map(|(r, _)| r)
        .sum();
    let roc_auc = (rank_sum_pos - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0)
        / (n_pos as f64 * n_neg as f64);

    Ok(ClassifierMetrics {
        accuracy: correct as f64 / labels.len() as f64,
        f1,
        roc_auc,
        precision_pos: precision,
        recall_pos: recall,
    })
}

/// Regression quality of a predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub r2: f64,
}

pub fn evaluate_regressor(preds: &[f64], labels: &[f64]) -> Result<RegressorMetrics> {
    if preds.len() != labels.len() || preds.len() < 2 {
        return Err(Error::Data("need >= 2 prediction/label pairs".into()));
    }
    let n = labels.len() as f64;
    let mean = labels.iter().sum::<f64>() / n;
    let ss_tot: f64 = labels.iter().map(|&l| (l - mean) * (l - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Data("r2 undefined for zero-variance labels".into()));
    }
    let ss_res: f64 = preds
        .iter()
        .zip(labels)
        .map(|(&p, &l)| (p - l) * (p - l))
        .sum();
    let mae = preds
        .iter()
        .zip(labels)
        .map(|(&p, &l)| (p - l).abs())
        .sum::<f64>()
        / n;
    Ok(RegressorMetrics {
        rmse: (ss_res / n).sqrt(),
        mae,
        r2: 1.0 - ss_res / ss_tot,
    })
}

/// Writes a dataset as CSV: the eight feature columns in canonical order
/// plus a final `label` column, floats in shortest round-trip form.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    ds.validate()?;
    let mut out = String::new();
    if ds.n_features() == FEATURE_NAMES.len() || ds.is_empty() {
        out.push_str(&FEATURE_NAMES.join(","));
    } else {
        let cols: Vec<String> = (0..ds.n_features()).map(|i| format!("f{i}")).collect();
        out.push_str(&cols.join(","));
    }
    out.push_str(",label\n");
    for (row, label) in ds.features.iter().zip(&ds.labels) {
        for v in row {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{label}\n"));
    }
    write_atomic(path, &out)
}

pub fn load_dataset(path: &Path, role: Option<ModelRole>) -> Result<Dataset> {
    let text = read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Schema("empty dataset file".into()))?;
    if !header.ends_with(",label") {
        return Err(Error::Schema("dataset header must end with `label`".into()));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut vals: Vec<f64> = Vec::new();
        for tok in line.split(',') {
            vals.push(tok.parse().map_err(|_| Error::Row {
                row: i + 1,
                message: format!("cannot parse `{tok}` as number"),
            })?);
        }
        let label = vals.pop().ok_or(Error::Row { row: i + 1, message: "empty row".into() })?;
        features.push(vals);
        labels.push(label);
    }
    let ds = Dataset::new(features, labels, role);
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_seeded_and_sized() {
        let ds = Dataset::new(
            (0..100).map(|i| vec![i as f64]).collect(),
            (0..100).map(|i| i as f64).collect(),
            None,
        );
        let (tr1, te1) = split_train_test(&ds, 0.8, 11).unwrap();
        let (tr2, te2) = split_train_test(&ds, 0.8, 11).unwrap();
        assert_eq!(tr1.len(), 80);
        assert_eq!(te1.len(), 20);
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
    }

    #[test]
    fn stratified_split_preserves_ratio() {
        let labels: Vec<f64> = (0..100).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let ds = Dataset::new(
            (0..100).map(|i| vec![i as f64]).collect(),
            labels,
            Some(ModelRole::A),
        );
        let (tr, te) = split_train_test(&ds, 0.8, 5).unwrap();
        let pos = |d: &Dataset| d.labels.iter().filter(|&&l| l == 1.0).count() as f64 / d.len() as f64;
        assert!((pos(&tr) - 0.25).abs() <= 1.0 / tr.len() as f64);
        assert!((pos(&te) - 0.25).abs() <= 1.0 / te.len() as f64);
    }

    #[test]
    fn stratified_split_needs_two_per_class() {
        let ds = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![0.0, 0.0, 1.0],
            Some(ModelRole::D),
        );
        assert!(split_train_test(&ds, 0.8, 1).is_err());
    }

    #[test]
    fn perfect_scorer_metrics_are_one() {
        let labels = vec![0.0, 1.0, 0.0, 1.0, 1.0];
        let scores = vec![0.1, 0.9, 0.2, 0.8, 0.7];
        let m = evaluate_classifier(&scores, &labels).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.roc_auc, 1.0);
        assert_eq!(m.precision_pos, 1.0);
        assert_eq!(m.recall_pos, 1.0);
    }

    #[test]
    fn constant_scorer_has_half_auc() {
        let labels = vec![0.0, 1.0, 0.0, 1.0];
        let scores = vec![0.5; 4];
        let m = evaluate_classifier(&scores, &labels).unwrap();
        assert_eq!(m.roc_auc, 0.5);
    }

    #[test]
    fn auc_matches_pair_counting_oracle() {
        // Oracle: concordant pairs + half ties over all pos/neg pairs.
        use rand::Rng;
        let mut rng = crate::rng::stream(8, 42, 0);
        let labels: Vec<f64> = (0..50).map(|_| if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 }).collect();
        // Coarse scores to force ties.
        let scores: Vec<f64> = (0..50).map(|_| (rng.random::<f64>() * 5.0).floor() / 5.0).collect();
        let m = evaluate_classifier(&scores, &labels).unwrap();
        let mut concordant = 0.0;
        let mut pairs = 0.0;
        for i in 0..50 {
            for j in 0..50 {
                if labels[i] == 1.0 && labels[j] == 0.0 {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        concordant += 1.0;
                    } else if scores[i] == scores[j] {
                        concordant += 0.5;
                    }
                }
            }
        }
        assert!((m.roc_auc - concordant / pairs).abs() < 1e-12);
    }

    #[test]
    fn single_class_auc_is_an_error() {
        assert!(evaluate_classifier(&[0.3, 0.7], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn regressor_metrics_hand_case() {
        let m = evaluate_regressor(&[1.0, 2.0, 3.0], &[1.0, 2.0, 5.0]).unwrap();
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.rmse - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_mean_predictors() {
        let labels = vec![1.0, 4.0, 7.0, 2.0];
        let m = evaluate_regressor(&labels, &labels).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.r2, 1.0);
        let mean = labels.iter().sum::<f64>() / 4.0;
        let m = evaluate_regressor(&vec![mean; 4], &labels).unwrap();
        assert!(m.r2.abs() < 1e-12);
    }

    #[test]
    fn zero_variance_labels_error() {
        assert!(evaluate_regressor(&[1.0, 2.0], &[3.0, 3.0]).is_err());
    }

    #[test]
    fn dataset_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        let ds = Dataset::new(
            vec![vec![1.5, 2.0, 0.25], vec![0.1, 0.333333333333, 9.0]],
            vec![1.0, 0.0],
            None,
        );
        save_dataset(&ds, &path).unwrap();
        let loaded = load_dataset(&path, None).unwrap();
        assert_eq!(loaded, ds);
    }
}
