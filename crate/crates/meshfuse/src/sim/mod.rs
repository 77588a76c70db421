//! Message delivery over a scenario under a routing strategy.
//!
//! One scenario run is strictly single-threaded and deterministic: messages
//! are processed sequentially in id order, and every hop appends a
//! [`HopLogRecord`]. Distinct scenario runs share only immutable inputs and
//! may execute concurrently (see [`run_suite`]).
//!
//! Buffer semantics: each node starts with the background occupancy from
//! [`load::background_load`]; a relayed message additionally holds one slot
//! at its current node for the duration of one hop. Sender and receiver do
//! not queue their own message — the buffer models the relay queue. A node
//! accrues active time only while its queue has a free slot.

pub mod load;
pub mod log;
pub mod topology;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aodv;
use crate::error::{Error, Result};
use crate::features::{self, FeatureVector};
use crate::fusion::{self, FusionParams, ScoreBreakdown};
use crate::models::ModelBundle;
use crate::rng::{self, salt};
use crate::scenario::{DeviceSpec, Scenario};
use crate::util::q6;
use load::CongestionConfig;
use rand::Rng;
use topology::Topology;

/// Routing strategy under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Baseline,
    Abc,
    Abcd,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::Abc => "abc",
            Strategy::Abcd => "abcd",
        }
    }

    pub fn needs_bundle(self) -> bool {
        !matches!(self, Strategy::Baseline)
    }

    pub const ALL: [Strategy; 3] = [Strategy::Baseline, Strategy::Abc, Strategy::Abcd];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Strategy::Baseline),
            "abc" => Ok(Strategy::Abc),
            "abcd" => Ok(Strategy::Abcd),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected baseline, abc or abcd)"
            ))),
        }
    }
}

/// Runtime parameters of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Communication radius in meters.
    pub radius_m: f64,
    /// Hop budget per message.
    pub ttl_initial: u32,
    pub messages_per_scenario: u32,
    pub base_hop_delay_s: f64,
    pub queue_penalty_s: f64,
    /// Weights of battery, signal quality and historical success rate in
    /// the capability score; must sum to 1.
    pub capability_weights: [f64; 3],
    pub workload_seed: u64,
    pub congestion: CongestionConfig,
    pub fusion: FusionParams,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            radius_m: 50.0,
            ttl_initial: 10,
            messages_per_scenario: 100,
            base_hop_delay_s: 10.0,
            queue_penalty_s: 20.0,
            capability_weights: [0.4, 0.4, 0.2],
            workload_seed: 7,
            congestion: CongestionConfig::default(),
            fusion: FusionParams::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius_m <= 0.0 {
            return Err(Error::Config("radius_m must be positive".into()));
        }
        if self.ttl_initial < 1 {
            return Err(Error::Config("ttl_initial must be >= 1".into()));
        }
        let wsum: f64 = self.capability_weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-9 || self.capability_weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Config("capability_weights must be >= 0 and sum to 1".into()));
        }
        if self.base_hop_delay_s < 0.0 || self.queue_penalty_s < 0.0 {
            return Err(Error::Config("delay constants must be >= 0".into()));
        }
        self.congestion.validate()?;
        self.fusion.validate()
    }
}

/// An in-flight message.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub message_id: u32,
    pub sender_id: u32,
    pub receiver_id: u32,
    pub ttl_initial: u32,
    pub hop_count: u32,
    pub created_at: f64,
}

/// Outcome category of one hop record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopOutcome {
    Forwarded,
    DroppedBuffer,
    DroppedTtl,
}

impl HopOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            HopOutcome::Forwarded => "forwarded",
            HopOutcome::DroppedBuffer => "dropped_buffer",
            HopOutcome::DroppedTtl => "dropped_ttl",
        }
    }
}

impl FromStr for HopOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forwarded" => Ok(HopOutcome::Forwarded),
            "dropped_buffer" => Ok(HopOutcome::DroppedBuffer),
            "dropped_ttl" => Ok(HopOutcome::DroppedTtl),
            other => Err(Error::Data(format!("unknown hop outcome `{other}`"))),
        }
    }
}

/// Why a message failed, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    None,
    NoRoute,
    TtlExpired,
    BufferDrop,
}

/// Result of one message delivery attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryOutcome {
    pub delivered: bool,
    /// Node ids actually visited, starting at the sender.
    pub path: Vec<u32>,
    pub total_delay_s: f64,
    pub ttl_left_final: u32,
    pub failure_reason: FailureReason,
}

/// One row of the hop log: a forwarding event or a terminal drop.
#[derive(Debug, Clone, PartialEq)]
pub struct HopLogRecord {
    pub scenario_id: u32,
    pub message_id: u32,
    pub mode: Strategy,
    pub hop_index: u32,
    pub from_id: u32,
    pub to_id: Option<u32>,
    pub ttl_left_at_hop: u32,
    pub buffer_ratio_at_to: Option<f64>,
    pub distance_to_target_m: Option<f64>,
    pub hop_delay_s: f64,
    pub candidate_ids: Vec<u32>,
    pub chosen_id: Option<u32>,
    pub score_breakdown: Option<ScoreBreakdown>,
    pub hop_outcome: HopOutcome,
    pub final_delivered: bool,
    pub total_delay_s: f64,
    pub total_hops: u32,
}

impl HopLogRecord {
    /// The message's initial TTL, recoverable from any of its records.
    pub fn ttl_initial(&self) -> u32 {
        self.ttl_left_at_hop + self.hop_index
    }
}

/// Number of pseudo-attempts encoding the scenario's success-rate prior, so
/// the historical ratio is defined before any real attempt occurs.
pub const PRIOR_PSEUDO_ATTEMPTS: f64 = 10.0;

/// Blend weight kept on the scenario prior when folding observed uptime in.
pub const UPTIME_PRIOR_WEIGHT: f64 = 0.9;

/// Mutable per-node simulation state.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub spec: DeviceSpec,
    pub buffer_used: u32,
    pub deliveries_attempted: f64,
    pub deliveries_succeeded: f64,
    pub active_time: f64,
    pub total_time: f64,
    pub routing_table: BTreeMap<u32, u32>,
}

impl NodeState {
    pub fn new(spec: DeviceSpec, background_used: u32) -> NodeState {
        let succeeded = PRIOR_PSEUDO_ATTEMPTS * spec.success_rate;
        NodeState {
            buffer_used: background_used.min(spec.buffer_capacity),
            deliveries_attempted: PRIOR_PSEUDO_ATTEMPTS,
            deliveries_succeeded: succeeded,
            active_time: 0.0,
            total_time: 0.0,
            routing_table: BTreeMap::new(),
            spec,
        }
    }

    pub fn has_free_slot(&self) -> bool {
        self.buffer_used < self.spec.buffer_capacity
    }

    /// Takes one queue slot if available; returns whether the message was
    /// accepted. The slot is released when the message departs the node.
    pub fn try_enqueue(&mut self) -> bool {
        if self.has_free_slot() {
            self.buffer_used += 1;
            true
        } else {
            false
        }
    }

    pub fn release(&mut self) {
        debug_assert!(self.buffer_used > 0, "release without a held slot");
        self.buffer_used -= 1;
    }

    pub fn buffer_ratio(&self) -> f64 {
        features::buffer_ratio(self.buffer_used, self.spec.buffer_capacity)
    }

    /// Historical success rate, seeded from the scenario prior.
    pub fn success_rate(&self) -> f64 {
        features::success_rate(
            self.deliveries_succeeded,
            self.deliveries_attempted,
            self.spec.success_rate,
        )
    }

    /// Uptime estimate: the scenario prior blended with the observed
    /// active/total ratio once simulated time has elapsed.
    pub fn effective_uptime(&self) -> f64 {
        if self.total_time == 0.0 {
            self.spec.uptime_ratio
        } else {
            UPTIME_PRIOR_WEIGHT * self.spec.uptime_ratio
                + (1.0 - UPTIME_PRIOR_WEIGHT)
                    * features::uptime_ratio(self.active_time, self.total_time, self.spec.uptime_ratio)
        }
    }
}

/// Weighted combination of battery, signal quality and historical success.
pub fn capability_score(state: &NodeState, weights: &[f64; 3]) -> f64 {
    weights[0] * state.spec.battery_level
        + weights[1] * state.spec.signal_quality
        + weights[2] * state.success_rate()
}

/// Deterministic per-hop latency.
///
/// `base * (1 + distance/radius) * (2 - capability(to)) + queue_penalty *
/// buffer_ratio(to)`, quantized to the log precision. Strictly positive for
/// a positive base delay, nonincreasing in capability, nondecreasing in
/// distance and buffer load.
pub fn hop_delay(
    _from: &NodeState,
    to: &NodeState,
    distance_m: f64,
    config: &SimulationConfig,
) -> f64 {
    debug_assert!(distance_m <= config.radius_m + 1e-9);
    let capability = capability_score(to, &config.capability_weights);
    let raw = config.base_hop_delay_s * (1.0 + distance_m / config.radius_m) * (2.0 - capability)
        + config.queue_penalty_s * to.buffer_ratio();
    q6(raw)
}

/// Live state of one scenario run.
pub struct ScenarioState {
    pub scenario_id: u32,
    pub nodes: Vec<NodeState>,
    pub topo: Topology,
    ids: Vec<u32>,
    pub clock: f64,
    background: Vec<u32>,
}

impl ScenarioState {
    pub fn new(scenario: &Scenario, cfg: &SimulationConfig) -> Result<ScenarioState> {
        scenario.validate()?;
        cfg.validate()?;
        let topo = Topology::build(scenario, cfg.radius_m)?;
        let background = load::background_load(scenario, &cfg.congestion, cfg.workload_seed)?;
        let nodes = scenario
            .devices
            .iter()
            .zip(&background)
            .map(|(d, &used)| NodeState::new(d.clone(), used))
            .collect();
        Ok(ScenarioState {
            scenario_id: scenario.scenario_id,
            nodes,
            topo,
            ids: scenario.devices.iter().map(|d| d.device_id).collect(),
            clock: 0.0,
            background,
        })
    }

    pub fn index_of(&self, id: u32) -> Result<usize> {
        self.ids.binary_search(&id).map_err(|_| Error::UnknownDevice(id))
    }

    pub fn node(&self, id: u32) -> Result<&NodeState> {
        Ok(&self.nodes[self.index_of(id)?])
    }

    pub fn node_mut(&mut self, id: u32) -> Result<&mut NodeState> {
        let i = self.index_of(id)?;
        Ok(&mut self.nodes[i])
    }

    /// Forwarding candidates at `current`: neighbors that either are the
    /// receiver (which consumes rather than queues) or have a free slot.
    pub fn candidates(&self, current: u32, receiver: u32) -> Result<Vec<u32>> {
        Ok(self
            .topo
            .neighbors(current)?
            .iter()
            .copied()
            .filter(|&v| v == receiver || self.nodes[self.index_of(v).unwrap()].has_free_slot())
            .collect())
    }

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
        self.clock += dt;
    }

    #[cfg(debug_assertions)]
    fn assert_transients_released(&self) {
        for (n, &bg) in self.nodes.iter().zip(&self.background) {
            debug_assert_eq!(
                n.buffer_used, bg,
                "node {} holds a leaked transient slot",
                n.spec.device_id
            );
        }
    }

    pub fn background(&self) -> &[u32] {
        &self.background
    }
}

/// Assembles the eight features of `candidate` as seen from `origin` while
/// it holds `message` addressed to `receiver`.
///
/// Distance and buffer ratio are quantized to the hop-log precision, so the
/// exact values a model sees at decision time are recoverable from the log.
pub fn extract_features(
    origin: &NodeState,
    candidate: &NodeState,
    message: &Message,
    receiver: &DeviceSpec,
) -> FeatureVector {
    FeatureVector {
        ttl_left: features::ttl_left(message.ttl_initial, message.hop_count),
        hop_count: message.hop_count,
        distance_to_target: q6(features::distance_to_target(
            candidate.spec.position(),
            receiver.position(),
        )),
        success_rate_origin: origin.success_rate(),
        priority_tolerance: candidate.spec.priority_tolerance,
        uptime_ratio: origin.effective_uptime(),
        buffer_ratio: q6(candidate.buffer_ratio()),
        device_type_encoded: candidate.spec.device_type.ordinal(),
    }
}

struct HopRecorder {
    scenario_id: u32,
    message_id: u32,
    mode: Strategy,
    records: Vec<HopLogRecord>,
}

impl HopRecorder {
    fn push(
        &mut self,
        hop_index: u32,
        from: u32,
        to: Option<u32>,
        ttl_left: u32,
        ratio_to: Option<f64>,
        distance: Option<f64>,
        delay: f64,
        candidates: Vec<u32>,
        chosen: Option<u32>,
        breakdown: Option<ScoreBreakdown>,
        outcome: HopOutcome,
    ) {
        self.records.push(HopLogRecord {
            scenario_id: self.scenario_id,
            message_id: self.message_id,
            mode: self.mode,
            hop_index,
            from_id: from,
            to_id: to,
            ttl_left_at_hop: ttl_left,
            buffer_ratio_at_to: ratio_to.map(q6),
            distance_to_target_m: distance.map(q6),
            hop_delay_s: delay,
            candidate_ids: candidates,
            chosen_id: chosen,
            score_breakdown: breakdown,
            hop_outcome: outcome,
            final_delivered: false,
            total_delay_s: 0.0,
            total_hops: 0,
        });
    }

    fn finalize(mut self, outcome: &DeliveryOutcome, hops: u32) -> Vec<HopLogRecord> {
        for r in &mut self.records {
            r.final_delivered = outcome.delivered;
            r.total_delay_s = outcome.total_delay_s;
            r.total_hops = hops;
        }
        self.records
    }
}

/// Runs one message delivery attempt under `strategy`, returning the
/// outcome and the hop records it generated. Node buffers hold transient
/// slots during the attempt; origin counters and uptime accrual are applied
/// by the caller ([`run_scenario`]) after the attempt completes.
pub fn run_delivery(
    message: &mut Message,
    state: &mut ScenarioState,
    strategy: Strategy,
    bundle: Option<&ModelBundle>,
    cfg: &SimulationConfig,
) -> Result<(DeliveryOutcome, Vec<HopLogRecord>)> {
    if strategy.needs_bundle() && bundle.is_none() {
        return Err(Error::Config(format!(
            "strategy `{strategy}` requires a trained model bundle"
        )));
    }
    if message.sender_id == message.receiver_id {
        return Err(Error::Config("sender and receiver must differ".into()));
    }
    let recorder = HopRecorder {
        scenario_id: state.scenario_id,
        message_id: message.message_id,
        mode: strategy,
        records: Vec::new(),
    };
    let (outcome, recorder) = match strategy {
        Strategy::Baseline => baseline_delivery(message, state, cfg, recorder)?,
        Strategy::Abc | Strategy::Abcd => {
            fusion_delivery(message, state, strategy, bundle.unwrap(), cfg, recorder)?
        }
    };
    #[cfg(debug_assertions)]
    state.assert_transients_released();
    let hops = message.hop_count;
    let records = recorder.finalize(&outcome, hops);
    Ok((outcome, records))
}

fn fail(
    path: Vec<u32>,
    total_delay: f64,
    ttl_left: u32,
    reason: FailureReason,
) -> DeliveryOutcome {
    DeliveryOutcome {
        delivered: false,
        path,
        total_delay_s: q6(total_delay),
        ttl_left_final: ttl_left,
        failure_reason: reason,
    }
}

/// Baseline AODV: one BFS route discovery per message, then blind
/// forwarding along the discovered path. No mid-route adaptation: a full
/// queue on the path drops the message.
fn baseline_delivery(
    message: &mut Message,
    state: &mut ScenarioState,
    cfg: &SimulationConfig,
    mut rec: HopRecorder,
) -> Result<(DeliveryOutcome, HopRecorder)> {
    let (sender, receiver) = (message.sender_id, message.receiver_id);
    let Some(route) = aodv::bfs_route(sender, receiver, &state.topo, message.ttl_initial)? else {
        aodv::log_partial_failure(message, state, &mut rec.records, rec.mode)?;
        return Ok((fail(vec![sender], 0.0, message.ttl_initial, FailureReason::NoRoute), rec));
    };
    aodv::update_routing_tables(&route, state)?;

    let receiver_pos = state.node(receiver)?.spec.position();
    let mut total_delay = 0.0;
    let mut held: Option<u32> = None;
    let mut path = vec![sender];
    for w in route.windows(2) {
        let (u, v) = (w[0], w[1]);
        let hop_index = message.hop_count;
        let ttl_at = message.ttl_initial - hop_index;
        let candidates = state.candidates(u, receiver)?;
        let v_node = state.node(v)?;
        let ratio_v = v_node.buffer_ratio();
        let dist_v = features::distance_to_target(v_node.spec.position(), receiver_pos);
        if v != receiver && !state.node_mut(v)?.try_enqueue() {
            rec.push(
                hop_index,
                u,
                Some(v),
                ttl_at,
                Some(ratio_v),
                Some(dist_v),
                0.0,
                candidates,
                Some(v),
                None,
                HopOutcome::DroppedBuffer,
            );
            if let Some(h) = held {
                state.node_mut(h)?.release();
            }
            return Ok((fail(path, total_delay, ttl_at, FailureReason::BufferDrop), rec));
        }
        let hop_dist = features::distance_to_target(
            state.node(u)?.spec.position(),
            state.node(v)?.spec.position(),
        );
        let delay = hop_delay(state.node(u)?, state.node(v)?, hop_dist, cfg);
        rec.push(
            hop_index,
            u,
            Some(v),
            ttl_at,
            Some(ratio_v),
            Some(dist_v),
            delay,
            candidates,
            Some(v),
            None,
            HopOutcome::Forwarded,
        );
        if let Some(h) = held {
            state.node_mut(h)?.release();
        }
        held = (v != receiver).then_some(v);
        message.hop_count += 1;
        total_delay += delay;
        path.push(v);
    }
    debug_assert!(held.is_none(), "route must terminate at the receiver");
    let outcome = DeliveryOutcome {
        delivered: true,
        path,
        total_delay_s: q6(total_delay),
        ttl_left_final: message.ttl_initial - message.hop_count,
        failure_reason: FailureReason::None,
    };
    Ok((outcome, rec))
}

/// Hybrid routing: per-hop fusion scoring over the free-buffer candidate
/// set, with classic AODV selection whenever no candidate clears the score
/// threshold.
fn fusion_delivery(
    message: &mut Message,
    state: &mut ScenarioState,
    strategy: Strategy,
    bundle: &ModelBundle,
    cfg: &SimulationConfig,
    mut rec: HopRecorder,
) -> Result<(DeliveryOutcome, HopRecorder)> {
    let receiver = message.receiver_id;
    let receiver_spec = state.node(receiver)?.spec.clone();
    let weights = cfg.fusion.weights_for(strategy);
    let mut current = message.sender_id;
    let mut held: Option<u32> = None;
    let mut total_delay = 0.0;
    let mut path = vec![current];

    loop {
        let hop_index = message.hop_count;
        let ttl_left = message.ttl_initial - hop_index;
        if ttl_left == 0 {
            let candidates = state.candidates(current, receiver)?;
            rec.push(
                hop_index, current, None, 0, None, None, 0.0, candidates, None, None,
                HopOutcome::DroppedTtl,
            );
            if let Some(h) = held {
                state.node_mut(h)?.release();
            }
            return Ok((fail(path, total_delay, 0, FailureReason::TtlExpired), rec));
        }
        let neighbors = state.topo.neighbors(current)?;
        if neighbors.is_empty() {
            rec.push(
                hop_index, current, None, ttl_left, None, None, 0.0, vec![], None, None,
                HopOutcome::DroppedTtl,
            );
            debug_assert!(held.is_none());
            return Ok((fail(path, total_delay, ttl_left, FailureReason::NoRoute), rec));
        }
        let candidates = state.candidates(current, receiver)?;
        if candidates.is_empty() {
            rec.push(
                hop_index, current, None, ttl_left, None, None, 0.0, vec![], None, None,
                HopOutcome::DroppedBuffer,
            );
            if let Some(h) = held {
                state.node_mut(h)?.release();
            }
            return Ok((fail(path, total_delay, ttl_left, FailureReason::BufferDrop), rec));
        }

        let origin = state.node(current)?;
        let scored: Vec<(u32, FeatureVector)> = candidates
            .iter()
            .map(|&c| {
                state
                    .node(c)
                    .map(|cand| (c, extract_features(origin, cand, message, &receiver_spec)))
            })
            .collect::<Result<_>>()?;
        let decision = fusion::select_forwarder(
            &scored,
            bundle,
            cfg.fusion.k,
            cfg.fusion.threshold,
            &weights,
        );
        let (next, breakdown) = match decision {
            fusion::Decision::Chosen { id, breakdown } => (id, Some(breakdown)),
            fusion::Decision::Fallback => {
                let pick = aodv::fallback_aodv_selection(
                    current, receiver, &candidates, &state.topo, ttl_left, state,
                )?
                .expect("candidates are nonempty");
                (pick, None)
            }
        };

        let next_node = state.node(next)?;
        let ratio_next = next_node.buffer_ratio();
        let dist_next =
            features::distance_to_target(next_node.spec.position(), receiver_spec.position());
        let hop_dist = features::distance_to_target(
            state.node(current)?.spec.position(),
            next_node.spec.position(),
        );
        let delay = hop_delay(state.node(current)?, state.node(next)?, hop_dist, cfg);
        if next != receiver {
            let accepted = state.node_mut(next)?.try_enqueue();
            debug_assert!(accepted, "fusion candidates always have a free slot");
        }
        rec.push(
            hop_index,
            current,
            Some(next),
            ttl_left,
            Some(ratio_next),
            Some(dist_next),
            delay,
            candidates,
            Some(next),
            breakdown,
            HopOutcome::Forwarded,
        );
        if let Some(h) = held {
            state.node_mut(h)?.release();
        }
        held = (next != receiver).then_some(next);
        message.hop_count += 1;
        total_delay += delay;
        path.push(next);

        if next == receiver {
            let outcome = DeliveryOutcome {
                delivered: true,
                path,
                total_delay_s: q6(total_delay),
                ttl_left_final: message.ttl_initial - message.hop_count,
                failure_reason: FailureReason::None,
            };
            return Ok((outcome, rec));
        }
        current = next;
    }
}

/// Runs the full seeded workload over one scenario: distinct uniform
/// (sender, receiver) pairs, delivered sequentially in message-id order.
/// After each message the origin's success counters and every node's uptime
/// accumulators advance by the message's elapsed time.
pub fn run_scenario(
    scenario: &Scenario,
    cfg: &SimulationConfig,
    strategy: Strategy,
    bundle: Option<&ModelBundle>,
) -> Result<Vec<HopLogRecord>> {
    cfg.validate()?;
    if strategy.needs_bundle() && bundle.is_none() {
        return Err(Error::Config(format!(
            "strategy `{strategy}` requires a trained model bundle"
        )));
    }
    let mut state = ScenarioState::new(scenario, cfg)?;
    let n = scenario.devices.len();
    let mut rng = rng::stream(cfg.workload_seed, salt::WORKLOAD, scenario.scenario_id as u64);
    let mut logs = Vec::new();
    for message_id in 1..=cfg.messages_per_scenario {
        let sender_idx = rng.random_range(0..n);
        let receiver_idx = loop {
            let r = rng.random_range(0..n);
            if r != sender_idx {
                break r;
            }
        };
        let mut message = Message {
            message_id,
            sender_id: scenario.devices[sender_idx].device_id,
            receiver_id: scenario.devices[receiver_idx].device_id,
            ttl_initial: cfg.ttl_initial,
            hop_count: 0,
            created_at: state.clock,
        };
        let (outcome, records) = run_delivery(&mut message, &mut state, strategy, bundle, cfg)?;
        logs.extend(records);
        let origin = state.node_mut(message.sender_id)?;
        origin.deliveries_attempted += 1.0;
        if outcome.delivered {
            origin.deliveries_succeeded += 1.0;
        }
        state.accrue(outcome.total_delay_s);
    }
    Ok(logs)
}

fn flatten_runs(runs: Vec<Result<Vec<HopLogRecord>>>) -> Result<Vec<HopLogRecord>> {
    let mut logs = Vec::new();
    for r in runs {
        logs.extend(r?);
    }
    Ok(logs)
}

/// Runs every scenario under `strategy`, concatenating logs in scenario
/// order. Scenario runs execute on the rayon pool when the `parallel`
/// feature is enabled; output is identical to [`run_suite_seq`].
pub fn run_suite(
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
    strategy: Strategy,
    bundle: Option<&ModelBundle>,
) -> Result<Vec<HopLogRecord>> {
    flatten_runs(crate::exec::ordered_map(scenarios, |s| {
        run_scenario(s, cfg, strategy, bundle)
    }))
}

/// Sequential fallback of [`run_suite`].
pub fn run_suite_seq(
    scenarios: &[Scenario],
    cfg: &SimulationConfig,
    strategy: Strategy,
    bundle: Option<&ModelBundle>,
) -> Result<Vec<HopLogRecord>> {
    flatten_runs(crate::exec::ordered_map_seq(scenarios, |s| {
        run_scenario(s, cfg, strategy, bundle)
    }))
}
