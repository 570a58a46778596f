//! Energy-aware cluster-head election and cluster membership.
//!
//! Each round a node's election probability is proportional to its residual
//! energy relative to the estimated network average, scaled by its share of
//! the population's extra initial energy:
//!
//! ```text
//! p_i = p_opt * N * (1 + a_i) * E_i(r) / ((N + sum_j a_j) * avg(r))
//! avg(r) = (E_total / N) * (1 - r / R)
//! R = E_total / E_round
//! ```
//!
//! Nodes then run the rotating-epoch threshold test: a node that has not
//! served within its last `round(1/p_i)` rounds becomes cluster head when a
//! uniform draw falls below `p_i / (1 - p_i * (r mod round(1/p_i)))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Network, Node, Role};

/// Lifetime-based estimate of the network's average residual energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    pub total_energy: f64,
    pub node_count: usize,
    /// Expected energy dissipated per round, joules.
    pub e_round: f64,
    /// Estimated number of rounds the network lives.
    pub lifetime: f64,
}

impl EnergyEstimate {
    pub fn for_network(network: &Network) -> Result<Self> {
        let total_energy = network.total_initial_energy();
        let e_round = estimate_round_budget(network);
        let lifetime = total_energy / e_round;
        if !(lifetime > 0.0 && lifetime.is_finite()) {
            return Err(Error::Argument(format!(
                "estimated lifetime must be > 0, got {lifetime}"
            )));
        }
        Ok(Self {
            total_energy,
            node_count: network.nodes.len(),
            e_round,
            lifetime,
        })
    }

    /// Average energy at round `r`; zero once `r` reaches the lifetime.
    pub fn average_at(&self, r: u64) -> f64 {
        average_energy(r, self.total_energy, self.node_count, self.lifetime)
            .expect("lifetime validated at construction")
    }
}

/// Expected network-wide dissipation per round.
///
/// Assumes `k = p_opt * N` clusters of uniformly placed nodes, mean
/// member-to-head distance `M / sqrt(2 pi k)`, and cluster heads that reach
/// the sink over the multipath channel at the mean node-to-sink distance.
pub fn estimate_round_budget(network: &Network) -> f64 {
    let cfg = &network.config;
    let radio = &cfg.radio;
    let n = network.nodes.len() as f64;
    let k = cfg.p_opt * n;
    let d_to_ch = mean_distance_to_ch(cfg.field_side, k);
    let bs = cfg.bs_position;
    let d_to_bs =
        network.nodes.iter().map(|node| node.position.distance(&bs)).sum::<f64>() / n;
    cfg.packet_bits as f64
        * (2.0 * n * radio.e_elec
            + n * radio.e_da
            + k * radio.eps_mp * d_to_bs.powi(4)
            + n * radio.eps_fs * d_to_ch * d_to_ch)
}

/// Expected member-to-head distance for `k` clusters on a square of side `field_side`.
pub fn mean_distance_to_ch(field_side: f64, k: f64) -> f64 {
    field_side / (2.0 * PI * k).sqrt()
}

pub fn average_energy(r: u64, total_energy: f64, n: usize, lifetime: f64) -> Result<f64> {
    if !(lifetime > 0.0) {
        return Err(Error::Argument(format!("lifetime must be > 0, got {lifetime}")));
    }
    let avg = total_energy / n as f64 * (1.0 - r as f64 / lifetime);
    Ok(avg.max(0.0))
}

/// Election probability of one node, clamped to `[0, 1]`.
///
/// `n` and `sum_extra` describe the population the node is elected from.
pub fn ch_probability(
    node: &Node,
    avg: f64,
    n: usize,
    sum_extra: f64,
    p_opt: f64,
) -> Result<f64> {
    if !(avg > 0.0) {
        return Err(Error::Argument(format!("average energy must be > 0, got {avg}")));
    }
    if !node.alive {
        return Err(Error::ProtocolLogic(format!(
            "probability requested for dead node {}",
            node.id
        )));
    }
    let n = n as f64;
    let ratio = (n * (1.0 + node.extra_fraction) * node.residual_energy) / ((n + sum_extra) * avg);
    Ok((p_opt * ratio).clamp(0.0, 1.0))
}

/// A node taking part in this round's election.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub probability: f64,
}

/// Length of the rotating epoch for probability `p`.
pub fn epoch_length(p: f64) -> u64 {
    // `as` saturates, so tiny p gives an effectively infinite epoch
    ((1.0 / p).round() as u64).max(1)
}

/// Rotating-epoch threshold; `None` when the node is barred this round.
///
/// Epochs of `round(1/p)` rounds start at multiples of that length. A node
/// that already served in the current epoch is barred until the next one.
pub fn election_threshold(node: &Node, p: f64, round: u64) -> Option<f64> {
    if !(p > 0.0) || !node.alive {
        return None;
    }
    let epoch = epoch_length(p);
    let epoch_start = round - round % epoch;
    if node.last_ch_round.is_some_and(|last| last >= epoch_start) {
        return None;
    }
    let denom = 1.0 - p * (round % epoch) as f64;
    Some((p / denom).clamp(0.0, 1.0))
}

/// Runs the threshold test for each candidate in order. Elected nodes are
/// barred for the rest of their epoch; the returned ids are in candidate order.
pub fn elect_cluster_heads<R: Rng + ?Sized>(
    nodes: &mut [Node],
    candidates: &[Candidate],
    round: u64,
    rng: &mut R,
) -> Vec<usize> {
    let mut elected = Vec::new();
    for c in candidates {
        let node = &mut nodes[c.id];
        let Some(threshold) = election_threshold(node, c.probability, round) else {
            continue;
        };
        let u: f64 = rng.random();
        if u < threshold {
            node.last_ch_round = Some(round);
            elected.push(c.id);
        }
    }
    elected
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterAssignment {
    pub ch_ids: Vec<usize>,
    /// Member id to cluster-head id.
    pub membership: BTreeMap<usize, usize>,
    pub member_counts: BTreeMap<usize, usize>,
}

impl ClusterAssignment {
    pub fn members_of(&self, ch: usize) -> impl Iterator<Item = usize> + '_ {
        self.membership
            .iter()
            .filter(move |(_, &head)| head == ch)
            .map(|(&m, _)| m)
    }
}

/// Every alive normal node that is not a head joins its nearest head
/// (ties to the lower id). Nodes on beta duty never join.
pub fn assign_clusters(nodes: &[Node], ch_ids: &[usize]) -> ClusterAssignment {
    let mut heads = ch_ids.to_vec();
    heads.sort_unstable();
    heads.dedup();

    let mut membership = BTreeMap::new();
    let mut member_counts: BTreeMap<usize, usize> = heads.iter().map(|&h| (h, 0)).collect();
    if !heads.is_empty() {
        for node in nodes {
            if !node.alive || node.role != Some(Role::Normal) || heads.binary_search(&node.id).is_ok() {
                continue;
            }
            let mut best = heads[0];
            let mut best_d = node.position.distance(&nodes[best].position);
            for &h in &heads[1..] {
                let d = node.position.distance(&nodes[h].position);
                if d < best_d {
                    best = h;
                    best_d = d;
                }
            }
            membership.insert(node.id, best);
            *member_counts.get_mut(&best).expect("head registered") += 1;
        }
    }
    ClusterAssignment {
        ch_ids: heads,
        membership,
        member_counts,
    }
}
