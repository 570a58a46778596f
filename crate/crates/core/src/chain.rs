//! Beta-node backbones and their leaders.
//!
//! Two constructions are supported, both started from the beta node farthest
//! from the sink:
//!
//! * [`build_greedy_chain`] appends the nearest unchained node to the chain
//!   end until every node is on it, giving a simple path.
//! * [`build_multi_edge_chain`] visits nodes in decreasing sink distance and
//!   attaches each to its nearest already-visited node, giving a tree whose
//!   nodes may carry several attachments.
//!
//! The leader forwards the backbone's aggregate to the sink. It is either the
//! node nearest the sink ([`select_leader_nearest`]) or the node of minimum
//! combined weight ([`select_leader_weighted`]). Every tie goes to the lower
//! node id.

use std::borrow::Borrow;
use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{Node, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Greedy,
    MultiEdge,
}

/// Undirected backbone over beta nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub kind: ChainKind,
    /// Members in construction order; for a greedy chain this is the path.
    pub members: Vec<usize>,
    /// Edges as `(newcomer, attached_to)` in construction order.
    pub edges: Vec<(usize, usize)>,
}

/// Next hop toward the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Hop {
    Node(usize),
    BaseStation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTopology {
    pub chain: Chain,
    pub leader: usize,
    pub next_hop: BTreeMap<usize, Hop>,
}

impl ChainTopology {
    pub fn new(chain: Chain, leader: usize) -> Result<Self> {
        let next_hop = route_to_leader(&chain, leader)?;
        Ok(Self {
            chain,
            leader,
            next_hop,
        })
    }

    /// Number of backbone hops from `member` to the leader.
    pub fn hops_to_leader(&self, member: usize) -> Option<usize> {
        let mut cur = member;
        let mut hops = 0;
        while cur != self.leader {
            match self.next_hop.get(&cur)? {
                Hop::Node(next) => cur = *next,
                Hop::BaseStation => return None,
            }
            hops += 1;
            if hops > self.chain.members.len() {
                return None;
            }
        }
        Some(hops)
    }
}

fn empty_beta() -> Error {
    Error::Topology("beta set is empty".into())
}

/// Index of the minimum by `key`, first occurrence (lowest id) winning ties.
fn argmin_by_id<'a, T: Borrow<Node> + 'a>(
    nodes: impl Iterator<Item = &'a T>,
    mut key: impl FnMut(&Node) -> f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for n in nodes {
        let n = n.borrow();
        let k = key(n);
        match best {
            Some((id, bk)) if k > bk || (k == bk && id < n.id) => {}
            _ => best = Some((n.id, k)),
        }
    }
    best.map(|(id, _)| id)
}

fn farthest_from(beta: &[impl Borrow<Node>], bs: Position) -> usize {
    argmin_by_id(beta.iter(), |n| -n.position.distance(&bs)).expect("nonempty")
}

pub fn build_greedy_chain<T: Borrow<Node>>(beta: &[T], bs: Position) -> Result<Chain> {
    if beta.is_empty() {
        return Err(empty_beta());
    }
    let by_id: BTreeMap<usize, &Node> = beta.iter().map(|n| (n.borrow().id, n.borrow())).collect();
    let start = farthest_from(beta, bs);
    let mut remaining: Vec<&Node> = by_id.values().copied().filter(|n| n.id != start).collect();
    let mut members = vec![start];
    let mut edges = Vec::with_capacity(remaining.len());
    let mut end = by_id[&start];
    while !remaining.is_empty() {
        let next = argmin_by_id(remaining.iter(), |n| n.position.distance(&end.position))
            .expect("nonempty");
        let idx = remaining.iter().position(|n| n.id == next).expect("present");
        let node = remaining.swap_remove(idx);
        edges.push((node.id, end.id));
        members.push(node.id);
        end = node;
    }
    Ok(Chain {
        kind: ChainKind::Greedy,
        members,
        edges,
    })
}

pub fn build_multi_edge_chain<T: Borrow<Node>>(beta: &[T], bs: Position) -> Result<Chain> {
    if beta.is_empty() {
        return Err(empty_beta());
    }
    let mut order: Vec<&Node> = beta.iter().map(Borrow::borrow).collect();
    order.sort_by(|a, b| {
        b.position
            .distance(&bs)
            .total_cmp(&a.position.distance(&bs))
            .then(a.id.cmp(&b.id))
    });
    let mut members = Vec::with_capacity(order.len());
    let mut edges = Vec::with_capacity(order.len().saturating_sub(1));
    for (i, node) in order.iter().enumerate() {
        if i > 0 {
            let parent = argmin_by_id(order[..i].iter(), |p| p.position.distance(&node.position))
                .expect("nonempty");
            edges.push((node.id, parent));
        }
        members.push(node.id);
    }
    Ok(Chain {
        kind: ChainKind::MultiEdge,
        members,
        edges,
    })
}

pub fn select_leader_nearest<T: Borrow<Node>>(beta: &[T], bs: Position) -> Result<usize> {
    argmin_by_id(beta.iter(), |n| n.position.distance(&bs)).ok_or_else(empty_beta)
}

/// Terms of the combined leader weight for one beta node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderWeight {
    pub id: usize,
    /// Initial over residual energy; at least 1 for a node that has spent energy.
    pub energy_term: f64,
    /// Fourth power of the node's sink distance relative to the beta average.
    pub distance_term: f64,
    pub d_to_bs: f64,
    pub d_avg: f64,
    pub weight: f64,
}

pub fn leader_weights<T: Borrow<Node>>(
    beta: &[T],
    bs: Position,
    w1: f64,
    w2: f64,
) -> Result<Vec<LeaderWeight>> {
    if beta.is_empty() {
        return Err(empty_beta());
    }
    if let Some(n) = beta.iter().map(Borrow::borrow).find(|n| !(n.residual_energy > 0.0)) {
        return Err(Error::ProtocolLogic(format!(
            "beta node {} has no residual energy",
            n.id
        )));
    }
    let d_avg = beta
        .iter()
        .map(|n| n.borrow().position.distance(&bs))
        .sum::<f64>()
        / beta.len() as f64;
    Ok(beta
        .iter()
        .map(|n| {
            let n = n.borrow();
            let d_to_bs = n.position.distance(&bs);
            let distance_term = if d_avg > 0.0 {
                (d_to_bs / d_avg).powi(4)
            } else {
                1.0
            };
            let energy_term = n.initial_energy / n.residual_energy;
            LeaderWeight {
                id: n.id,
                energy_term,
                distance_term,
                d_to_bs,
                d_avg,
                weight: w1 * energy_term + w2 * distance_term,
            }
        })
        .collect())
}

pub fn select_leader_weighted<T: Borrow<Node>>(
    beta: &[T],
    bs: Position,
    w1: f64,
    w2: f64,
) -> Result<usize> {
    let weights = leader_weights(beta, bs, w1, w2)?;
    let mut best = weights[0];
    for w in &weights[1..] {
        if w.weight < best.weight || (w.weight == best.weight && w.id < best.id) {
            best = *w;
        }
    }
    Ok(best.id)
}

/// Next hop of every member on its unique backbone route to `leader`;
/// the leader itself hops to the sink.
pub fn route_to_leader(chain: &Chain, leader: usize) -> Result<BTreeMap<usize, Hop>> {
    if !chain.members.contains(&leader) {
        return Err(Error::Topology(format!("leader {leader} is not a member")));
    }
    let mut adjacency: BTreeMap<usize, Vec<usize>> =
        chain.members.iter().map(|&m| (m, Vec::new())).collect();
    for &(u, v) in &chain.edges {
        for (a, b) in [(u, v), (v, u)] {
            adjacency
                .get_mut(&a)
                .ok_or_else(|| Error::Topology(format!("edge endpoint {a} is not a member")))?
                .push(b);
        }
    }
    let mut next_hop = BTreeMap::new();
    next_hop.insert(leader, Hop::BaseStation);
    let mut queue = VecDeque::from([leader]);
    while let Some(cur) = queue.pop_front() {
        for &nb in &adjacency[&cur] {
            if let std::collections::btree_map::Entry::Vacant(e) = next_hop.entry(nb) {
                e.insert(Hop::Node(cur));
                queue.push_back(nb);
            }
        }
    }
    if next_hop.len() != chain.members.len() {
        return Err(Error::Topology(format!(
            "{} of {} members cannot reach leader {leader}",
            chain.members.len() - next_hop.len(),
            chain.members.len()
        )));
    }
    Ok(next_hop)
}
