//! Baseline reactive routing: BFS route discovery bounded by TTL, routing
//! table updates, partial-failure logging, and the fallback next-hop
//! selector used by the fusion strategies.
//!
//! Everything here is buffer-blind by design — route discovery models
//! control traffic, which a congested data queue does not block. The
//! baseline strategy never consults a model bundle.

use std::collections::{HashMap, VecDeque};

use crate::error::Result;
use crate::features::distance_to_target;
use crate::sim::topology::Topology;
use crate::sim::{HopLogRecord, HopOutcome, Message, ScenarioState, Strategy};

/// Shortest path (hop count) from `sender` to `receiver` with at most `ttl`
/// hops, or `None`. Neighbors expand in ascending-id order, so the returned
/// path is deterministic.
pub fn bfs_route(
    sender: u32,
    receiver: u32,
    topo: &Topology,
    ttl: u32,
) -> Result<Option<Vec<u32>>> {
    debug_assert_ne!(sender, receiver);
    topo.neighbors(sender)?;
    topo.neighbors(receiver)?;

    let mut parent: HashMap<u32, u32> = HashMap::new();
    let mut dist: HashMap<u32, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(sender, 0);
    queue.push_back(sender);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if du == ttl {
            continue;
        }
        for &v in topo.neighbors(u)? {
            if dist.contains_key(&v) {
                continue;
            }
            dist.insert(v, du + 1);
            parent.insert(v, u);
            if v == receiver {
                let mut path = vec![v];
                let mut cur = v;
                while let Some(&p) = parent.get(&cur) {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Ok(Some(path));
            }
            queue.push_back(v);
        }
    }
    Ok(None)
}

/// Installs next-hop entries along a discovered route: every node on the
/// path learns the next hop toward each downstream destination.
pub fn update_routing_tables(path: &[u32], state: &mut ScenarioState) -> Result<()> {
    for i in 0..path.len().saturating_sub(1) {
        let next = path[i + 1];
        let node = state.node_mut(path[i])?;
        for &dest in &path[i + 1..] {
            node.routing_table.insert(dest, next);
        }
    }
    Ok(())
}

/// Logs the baseline's partial attempts after route discovery failed: one
/// failed record toward each of the sender's two nearest neighbors
/// (Euclidean, ties by lower id), or a single empty-candidate record for an
/// isolated sender. Partial attempts consume no simulated time.
pub fn log_partial_failure(
    message: &Message,
    state: &ScenarioState,
    records: &mut Vec<HopLogRecord>,
    mode: Strategy,
) -> Result<()> {
    let sender = message.sender_id;
    let sender_pos = state.node(sender)?.spec.position();
    let receiver_pos = state.node(message.receiver_id)?.spec.position();
    let neighbors = state.topo.neighbors(sender)?.to_vec();

    let base = HopLogRecord {
        scenario_id: state.scenario_id,
        message_id: message.message_id,
        mode,
        hop_index: 0,
        from_id: sender,
        to_id: None,
        ttl_left_at_hop: message.ttl_initial,
        buffer_ratio_at_to: None,
        distance_to_target_m: None,
        hop_delay_s: 0.0,
        candidate_ids: vec![],
        chosen_id: None,
        score_breakdown: None,
        hop_outcome: HopOutcome::DroppedTtl,
        final_delivered: false,
        total_delay_s: 0.0,
        total_hops: 0,
    };

    if neighbors.is_empty() {
        records.push(base);
        return Ok(());
    }

    let mut by_distance: Vec<(f64, u32)> = neighbors
        .iter()
        .map(|&v| {
            let pos = state.node(v).unwrap().spec.position();
            (distance_to_target(sender_pos, pos), v)
        })
        .collect();
    by_distance.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    for &(_, v) in by_distance.iter().take(2) {
        let v_node = state.node(v)?;
        let mut r = base.clone();
        r.to_id = Some(v);
        r.chosen_id = Some(v);
        r.candidate_ids = neighbors.clone();
        r.buffer_ratio_at_to = Some(crate::util::q6(v_node.buffer_ratio()));
        r.distance_to_target_m = Some(crate::util::q6(distance_to_target(
            v_node.spec.position(),
            receiver_pos,
        )));
        records.push(r);
    }
    Ok(())
}

/// Classic AODV next-hop choice, used when fusion declines to pick: follow
/// the BFS route if its second node can accept the message, otherwise move
/// greedily toward the receiver among the viable candidates (ties by lower
/// id). `None` only when `candidates` is empty.
pub fn fallback_aodv_selection(
    current: u32,
    receiver: u32,
    candidates: &[u32],
    topo: &Topology,
    ttl_left: u32,
    state: &ScenarioState,
) -> Result<Option<u32>> {
    if candidates.is_empty() {
        return Ok(None);
    }
    if let Some(path) = bfs_route(current, receiver, topo, ttl_left)? {
        let second = path[1];
        if candidates.contains(&second) {
            return Ok(Some(second));
        }
    }
    let receiver_pos = state.node(receiver)?.spec.position();
    let mut best: Option<(f64, u32)> = None;
    for &c in candidates {
        let d = distance_to_target(state.node(c)?.spec.position(), receiver_pos);
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && c < bid),
        };
        if better {
            best = Some((d, c));
        }
    }
    Ok(best.map(|(_, id)| id))
}
