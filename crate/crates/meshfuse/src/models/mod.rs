//! The four predictive models: dataset extraction from hop logs, bundle
//! training, and the prediction interfaces used by fusion scoring.
//!
//! Extraction rebuilds decision-time features by replaying the logged
//! messages against the scenario files: static attributes come from the
//! scenarios, background buffer occupancy is re-derived from the simulation
//! config, and the evolving origin counters (success rate, uptime) are
//! replayed message by message with the same update rules the simulator
//! applies. Re-derived values are cross-checked against the logged fields.

pub mod persist;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, Normalizer};
use crate::learners::boosted::{train_boosted, Boosted, BoostTask, BoostedSpec};
use crate::learners::forest::{train_forest, Forest, ForestSpec};
use crate::learners::ridge::{train_ridge, Ridge};
use crate::learners::{
    evaluate_classifier, evaluate_regressor, split_train_test, ClassifierMetrics, Dataset,
    ModelRole, RegressorMetrics,
};
use crate::rng::{self, salt};
use crate::scenario::Scenario;
use crate::sim::{self, load, HopLogRecord, HopOutcome, NodeState, SimulationConfig};
use crate::util::{fnv1a64, q6};

/// Ridge regularization for the delay model.
pub const MODEL_C_ALPHA: f64 = 0.1;
/// Held-out fraction protocol: 80/20 split with a fixed seed.
pub const VALIDATION_TRAIN_FRACTION: f64 = 0.8;
pub const VALIDATION_SPLIT_SEED: u64 = 42;

/// One hop of the log with its decision-time features rebuilt.
#[derive(Debug, Clone)]
pub struct HopFeatures {
    pub scenario_id: u32,
    pub message_id: u32,
    pub hop_index: u32,
    pub hop_outcome: HopOutcome,
    pub final_delivered: bool,
    pub total_hops: u32,
    pub hop_delay_s: f64,
    pub total_delay_s: f64,
    pub chosen: Option<(u32, FeatureVector)>,
    /// Features of every logged candidate; empty for failed messages,
    /// whose receiver (and hence candidate distances) is unknown.
    pub candidates: Vec<(u32, FeatureVector)>,
}

struct ScenarioReplay<'a> {
    scenario: &'a Scenario,
    nodes: Vec<NodeState>,
}

impl<'a> ScenarioReplay<'a> {
    fn new(scenario: &'a Scenario, cfg: &SimulationConfig) -> Result<ScenarioReplay<'a>> {
        let bg = load::background_load(scenario, &cfg.congestion, cfg.workload_seed)?;
        let nodes = scenario
            .devices
            .iter()
            .zip(&bg)
            .map(|(d, &used)| NodeState::new(d.clone(), used))
            .collect();
        Ok(ScenarioReplay { scenario, nodes })
    }

    fn node(&self, id: u32) -> Result<&NodeState> {
        let i = self
            .scenario
            .devices
            .binary_search_by_key(&id, |d| d.device_id)
            .map_err(|_| Error::UnknownDevice(id))?;
        Ok(&self.nodes[i])
    }

    fn node_mut(&mut self, id: u32) -> Result<&mut NodeState> {
        let i = self
            .scenario
            .devices
            .binary_search_by_key(&id, |d| d.device_id)
            .map_err(|_| Error::UnknownDevice(id))?;
        Ok(&mut self.nodes[i])
    }

    /// Same accrual rule as the simulator applies between messages.
    fn accrue(&mut self, dt: f64) {
        if dt == 0.0 {
            return;
        }
        for n in &mut self.nodes {
            n.total_time += dt;
            if n.has_free_slot() {
                n.active_time += dt;
            }
        }
    }
}

/// Rebuilds per-hop features for every record, in log order.
///
/// `logs` must be in original emission order (messages ascending within a
/// scenario); `scenarios` must cover every scenario id the log references.
pub fn replay_features(
    logs: &[HopLogRecord],
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
) -> Result<Vec<HopFeatures>> {
    if logs.is_empty() {
        return Err(Error::Data("hop log is empty".into()));
    }
    let by_id: BTreeMap<u32, &Scenario> =
        scenarios.iter().map(|s| (s.scenario_id, s)).collect();

    // Group record indices per (scenario, message) preserving order.
    let mut order: Vec<(u32, u32)> = Vec::new();
    let mut groups: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (i, r) in logs.iter().enumerate() {
        let key = (r.scenario_id, r.message_id);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(i);
    }

    let mut replays: BTreeMap<u32, ScenarioReplay> = BTreeMap::new();
    let mut out = Vec::with_capacity(logs.len());
    for key in order {
        let (scenario_id, _) = key;
        if !replays.contains_key(&scenario_id) {
            let scenario = by_id.get(&scenario_id).ok_or_else(|| {
                Error::Mismatch(format!("log references unknown scenario {scenario_id}"))
            })?;
            replays.insert(scenario_id, ScenarioReplay::new(scenario, cfg)?);
        }
        let replay = replays.get_mut(&scenario_id).unwrap();
        let records: Vec<&HopLogRecord> = groups[&key].iter().map(|&i| &logs[i]).collect();

        let delivered = records[0].final_delivered;
        let total_delay = records[0].total_delay_s;
        if records
            .iter()
            .any(|r| r.final_delivered != delivered || r.total_delay_s != total_delay)
        {
            return Err(Error::Mismatch(format!(
                "inconsistent terminal fields for message {key:?}"
            )));
        }
        let sender = records[0].from_id;

        // Receiver is the final destination of a delivered message.
        let receiver = if delivered {
            let last = records
                .iter()
                .max_by_key(|r| r.hop_index)
                .expect("nonempty message group");
            Some(
                last.to_id
                    .ok_or_else(|| Error::Mismatch(format!("delivered message {key:?} has no final to_id")))?,
            )
        } else {
            None
        };

        for r in records {
            out.push(rebuild_hop(replay, r, receiver)?);
        }

        let origin = replay.node_mut(sender)?;
        origin.deliveries_attempted += 1.0;
        if delivered {
            origin.deliveries_succeeded += 1.0;
        }
        replay.accrue(total_delay);
    }
    Ok(out)
}

fn rebuild_hop(
    replay: &ScenarioReplay,
    r: &HopLogRecord,
    receiver: Option<u32>,
) -> Result<HopFeatures> {
    let origin = replay.node(r.from_id)?;
    let success_rate_origin = origin.success_rate();
    let uptime_ratio = origin.effective_uptime();

    let shared = |distance: f64, candidate: &NodeState| FeatureVector {
        ttl_left: r.ttl_left_at_hop,
        hop_count: r.hop_index,
        distance_to_target: distance,
        success_rate_origin,
        priority_tolerance: candidate.spec.priority_tolerance,
        uptime_ratio,
        buffer_ratio: q6(candidate.buffer_ratio()),
        device_type_encoded: candidate.spec.device_type.ordinal(),
    };

    let chosen = match (r.chosen_id, r.distance_to_target_m, r.buffer_ratio_at_to) {
        (Some(id), Some(dist), Some(ratio)) => {
            let node = replay.node(id)?;
            let fv = shared(dist, node);
            if fv.buffer_ratio != ratio {
                return Err(Error::Mismatch(format!(
                    "replayed buffer ratio {} disagrees with logged {} for node {id}",
                    fv.buffer_ratio, ratio
                )));
            }
            Some((id, fv))
        }
        _ => None,
    };

    let candidates = match receiver {
        Some(recv) => {
            let recv_pos = replay.node(recv)?.spec.position();
            let mut rows = Vec::with_capacity(r.candidate_ids.len());
            for &c in &r.candidate_ids {
                let node = replay.node(c)?;
                let dist = q6(crate::features::distance_to_target(
                    node.spec.position(),
                    recv_pos,
                ));
                let fv = shared(dist, node);
                if Some(c) == r.chosen_id {
                    if let Some((_, ref chosen_fv)) = chosen {
                        if fv != *chosen_fv {
                            return Err(Error::Mismatch(format!(
                                "replayed features disagree with logged fields for node {c}"
                            )));
                        }
                    }
                }
                rows.push((c, fv));
            }
            rows
        }
        None => Vec::new(),
    };

    Ok(HopFeatures {
        scenario_id: r.scenario_id,
        message_id: r.message_id,
        hop_index: r.hop_index,
        hop_outcome: r.hop_outcome,
        final_delivered: r.final_delivered,
        total_hops: r.total_hops,
        hop_delay_s: r.hop_delay_s,
        total_delay_s: r.total_delay_s,
        chosen,
        candidates,
    })
}

/// The four extracted training datasets.
#[derive(Debug, Clone)]
pub struct AbcdDatasets {
    pub a: Dataset,
    pub b: Dataset,
    pub c: Dataset,
    pub d: Dataset,
}

fn dataset_a(hops: &[HopFeatures]) -> Dataset {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for h in hops {
        if h.hop_outcome != HopOutcome::Forwarded {
            continue;
        }
        if let Some((_, fv)) = &h.chosen {
            features.push(fv.to_array().to_vec());
            labels.push(h.final_delivered as u8 as f64);
        }
    }
    Dataset::new(features, labels, Some(ModelRole::A))
}

fn dataset_b(hops: &[HopFeatures]) -> Dataset {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for h in hops {
        if h.hop_outcome != HopOutcome::Forwarded || !h.final_delivered {
            continue;
        }
        if let Some((_, fv)) = &h.chosen {
            features.push(fv.to_array().to_vec());
            labels.push((h.total_hops - h.hop_index) as f64);
        }
    }
    Dataset::new(features, labels, Some(ModelRole::B))
}

fn dataset_c(hops: &[HopFeatures]) -> Dataset {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    // Remaining delay telescopes backwards over each message's hops.
    let mut i = 0;
    while i < hops.len() {
        let (scenario, message) = (hops[i].scenario_id, hops[i].message_id);
        let mut j = i;
        while j < hops.len()
            && hops[j].scenario_id == scenario
            && hops[j].message_id == message
        {
            j += 1;
        }
        if hops[i].final_delivered {
            let group = &hops[i..j];
            let mut remaining: f64 = group
                .iter()
                .filter(|h| h.hop_outcome == HopOutcome::Forwarded)
                .map(|h| h.hop_delay_s)
                .sum();
            for h in group {
                if h.hop_outcome != HopOutcome::Forwarded {
                    continue;
                }
                if let Some((_, fv)) = &h.chosen {
                    features.push(fv.to_array().to_vec());
                    labels.push(remaining);
                }
                remaining -= h.hop_delay_s;
            }
        }
        i = j;
    }
    Dataset::new(features, labels, Some(ModelRole::C))
}

fn dataset_d(hops: &[HopFeatures]) -> Dataset {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for h in hops {
        if h.hop_outcome != HopOutcome::Forwarded || !h.final_delivered {
            continue;
        }
        let Some((chosen_id, _)) = h.chosen else { continue };
        for (id, fv) in &h.candidates {
            features.push(fv.to_array().to_vec());
            labels.push((*id == chosen_id) as u8 as f64);
        }
    }
    Dataset::new(features, labels, Some(ModelRole::D))
}

/// Extracts all four datasets with one replay pass.
pub fn extract_all(
    logs: &[HopLogRecord],
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
) -> Result<AbcdDatasets> {
    let hops = replay_features(logs, scenarios, cfg)?;
    Ok(AbcdDatasets {
        a: dataset_a(&hops),
        b: dataset_b(&hops),
        c: dataset_c(&hops),
        d: dataset_d(&hops),
    })
}

pub fn extract_dataset_a(
    logs: &[HopLogRecord],
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
) -> Result<Dataset> {
    Ok(dataset_a(&replay_features(logs, scenarios, cfg)?))
}

pub fn extract_dataset_b(
    logs: &[HopLogRecord],
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
) -> Result<Dataset> {
    Ok(dataset_b(&replay_features(logs, scenarios, cfg)?))
}

pub fn extract_dataset_c(
    logs: &[HopLogRecord],
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
) -> Result<Dataset> {
    Ok(dataset_c(&replay_features(logs, scenarios, cfg)?))
}

pub fn extract_dataset_d(
    logs: &[HopLogRecord],
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
) -> Result<Dataset> {
    Ok(dataset_d(&replay_features(logs, scenarios, cfg)?))
}

/// Where the bundle came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub source_log_digest: String,
}

/// Held-out validation metrics stored with the bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub a: ClassifierMetrics,
    pub b: RegressorMetrics,
    pub c: RegressorMetrics,
    pub d: ClassifierMetrics,
}

/// The trained models A-D plus the forwarder-model normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model_a: Boosted,
    pub model_b: Boosted,
    pub model_c: Ridge,
    pub model_d: Forest,
    pub normalizer_d: Normalizer,
    pub ttl_initial: u32,
    pub provenance: Provenance,
    pub validation: ValidationReport,
}

impl ModelBundle {
    /// End-to-end delivery success probability via this candidate.
    pub fn predict_a(&self, fv: &FeatureVector) -> f64 {
        self.model_a.predict(&fv.to_array())
    }

    /// Expected remaining hops, clamped to the TTL budget.
    pub fn predict_b(&self, fv: &FeatureVector) -> f64 {
        self.model_b
            .predict(&fv.to_array())
            .clamp(0.0, self.ttl_initial as f64)
    }

    /// Expected remaining delay in seconds, clamped at zero.
    pub fn predict_c(&self, fv: &FeatureVector) -> f64 {
        self.model_c.predict(&fv.to_array()).max(0.0)
    }

    /// Forwarder suitability probability (normalized features).
    pub fn predict_d(&self, fv: &FeatureVector) -> f64 {
        self.model_d
            .predict_proba(&self.normalizer_d.apply(&fv.to_array()))
    }
}

/// Trains the full bundle from baseline hop logs.
///
/// Each model sees an 80/20 held-out split (stratified for the
/// classifiers, seed fixed); the held-out metrics are stored in the
/// bundle. Errors if the success labels are single-class — more or larger
/// scenarios are needed in that case.
pub fn train_bundle(
    logs: &[HopLogRecord],
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
    seed: u64,
) -> Result<ModelBundle> {
    let datasets = extract_all(logs, scenarios, cfg)?;
    let positives = datasets.a.labels.iter().filter(|&&l| l == 1.0).count();
    if positives == 0 || positives == datasets.a.len() {
        return Err(Error::Data(
            "success labels are single-class; run more scenarios to observe both outcomes".into(),
        ));
    }
    let ttl_initial = logs
        .iter()
        .map(HopLogRecord::ttl_initial)
        .max()
        .expect("nonempty logs");
    let digest = fnv1a64(sim::log::to_csv(logs).as_bytes());

    let (a_train, a_test) =
        split_train_test(&datasets.a, VALIDATION_TRAIN_FRACTION, VALIDATION_SPLIT_SEED)?;
    let (b_train, b_test) =
        split_train_test(&datasets.b, VALIDATION_TRAIN_FRACTION, VALIDATION_SPLIT_SEED)?;
    let (c_train, c_test) =
        split_train_test(&datasets.c, VALIDATION_TRAIN_FRACTION, VALIDATION_SPLIT_SEED)?;
    let (d_train, d_test) =
        split_train_test(&datasets.d, VALIDATION_TRAIN_FRACTION, VALIDATION_SPLIT_SEED)?;

    let model_a = train_boosted(
        &a_train,
        &BoostedSpec::model_a(),
        rng::sub_seed(seed, salt::TREE, 1),
        BoostTask::Classification,
    )?;
    let model_b = train_boosted(
        &b_train,
        &BoostedSpec::model_b(),
        rng::sub_seed(seed, salt::TREE, 2),
        BoostTask::Regression,
    )?;
    let model_c = train_ridge(&c_train, MODEL_C_ALPHA)?;

    let normalizer_d = Normalizer::fit(&d_train.features)?;
    let d_train_norm = Dataset::new(
        d_train.features.iter().map(|r| normalizer_d.apply(r)).collect(),
        d_train.labels.clone(),
        d_train.role,
    );
    let model_d = train_forest(
        &d_train_norm,
        &ForestSpec::model_d(),
        rng::sub_seed(seed, salt::TREE, 4),
    )?;

    let clamp_b = |v: f64| v.clamp(0.0, ttl_initial as f64);
    let a_scores: Vec<f64> = a_test.features.iter().map(|r| model_a.predict(r)).collect();
    let b_preds: Vec<f64> = b_test.features.iter().map(|r| clamp_b(model_b.predict(r))).collect();
    let c_preds: Vec<f64> = c_test.features.iter().map(|r| model_c.predict(r).max(0.0)).collect();
    let d_scores: Vec<f64> = d_test
        .features
        .iter()
        .map(|r| model_d.predict_proba(&normalizer_d.apply(r)))
        .collect();
    let validation = ValidationReport {
        a: evaluate_classifier(&a_scores, &a_test.labels)?,
        b: evaluate_regressor(&b_preds, &b_test.labels)?,
        c: evaluate_regressor(&c_preds, &c_test.labels)?,
        d: evaluate_classifier(&d_scores, &d_test.labels)?,
    };

    Ok(ModelBundle {
        model_a,
        model_b,
        model_c,
        model_d,
        normalizer_d,
        ttl_initial,
        provenance: Provenance { seed, source_log_digest: digest },
        validation,
    })
}

#[cfg(test)]
mod tests;
