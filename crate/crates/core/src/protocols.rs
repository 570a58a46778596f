//! Round engines for the four routing protocols.
//!
//! Every protocol elects cluster heads, lets members report to their nearest
//! head, and has each head fuse its cluster's data into one packet. They
//! differ in how that packet reaches the sink:
//!
//! | protocol | election | head uplink | backbone | leader |
//! |----------|----------|-------------|----------|--------|
//! | DEEC     | energy-aware | direct to sink | none | none |
//! | SEP      | two-level weighted | direct to sink | none | none |
//! | H-DEEC   | energy-aware, normal nodes only | nearest beta node | greedy chain | nearest to sink |
//! | MH-DEEC  | energy-aware, normal nodes only | nearest beta node | multi-edge tree | minimum weight |
//!
//! Roles and topology are fixed at the start of a round from the energies
//! at that moment. Energy is then charged transmission by transmission;
//! nodes drained to zero finish the round and are retired at its end.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::chain::{
    build_greedy_chain, build_multi_edge_chain, select_leader_nearest, select_leader_weighted,
    ChainTopology, Hop,
};
use crate::clustering::{
    assign_clusters, ch_probability, elect_cluster_heads, Candidate, ClusterAssignment,
    EnergyEstimate,
};
use crate::error::{Error, Result};
use crate::metrics::{MetricsRecord, MetricsSeries};
use crate::model::{Network, Node, Role};
use crate::radio::charge;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Deec,
    Sep,
    Hdeec,
    Mhdeec,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Deec, Protocol::Sep, Protocol::Hdeec, Protocol::Mhdeec];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Deec => "deec",
            Protocol::Sep => "sep",
            Protocol::Hdeec => "hdeec",
            Protocol::Mhdeec => "mhdeec",
        }
    }

    /// Whether cluster heads relay through a beta backbone.
    pub fn uses_backbone(&self) -> bool {
        matches!(self, Protocol::Hdeec | Protocol::Mhdeec)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "deec" => Ok(Protocol::Deec),
            "sep" => Ok(Protocol::Sep),
            "hdeec" => Ok(Protocol::Hdeec),
            "mhdeec" => Ok(Protocol::Mhdeec),
            _ => Err(Error::UnknownProtocol(s.to_string())),
        }
    }
}

/// Joules spent in one round, by activity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub member_tx: f64,
    pub ch_rx: f64,
    pub ch_agg: f64,
    pub ch_tx: f64,
    pub beta_rx: f64,
    pub beta_agg: f64,
    pub beta_tx: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.member_tx
            + self.ch_rx
            + self.ch_agg
            + self.ch_tx
            + self.beta_rx
            + self.beta_agg
            + self.beta_tx
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundOutcome {
    /// 1-based number of the round this outcome describes.
    pub round: u64,
    /// Always equal to `breakdown.total()`.
    pub energy_spent: f64,
    /// Cluster-head aggregates that reached the sink.
    pub packets_delivered_to_bs: u64,
    pub deaths: Vec<usize>,
    pub breakdown: EnergyBreakdown,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundTopology {
    pub round: u64,
    pub beta_ids: Vec<usize>,
    pub cluster: ClusterAssignment,
    pub chain: Option<ChainTopology>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    MemberToHead,
    HeadToBs,
    HeadToBeta,
    BetaToBeta,
    LeaderToBs,
}

/// One packet transmission charged during a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub from: usize,
    pub to: Hop,
    pub kind: LinkKind,
    pub distance: f64,
}

/// Everything a round produced: accounting, topology and a transmission log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundReport {
    pub outcome: RoundOutcome,
    pub topology: RoundTopology,
    pub transmissions: Vec<Transmission>,
}

/// The `max(1, floor(fraction * alive))` alive nodes with the most residual
/// energy, ties to the lower id. Returned in ascending id order.
pub fn select_beta_nodes(nodes: &[Node], fraction: f64) -> Vec<usize> {
    let mut alive: Vec<&Node> = nodes.iter().filter(|n| n.alive).collect();
    if alive.is_empty() {
        return Vec::new();
    }
    // the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    let k = ((fraction * alive.len() as f64 + 1e-9).floor() as usize).clamp(1, alive.len());
    alive.sort_by(|a, b| {
        b.residual_energy
            .total_cmp(&a.residual_energy)
            .then(a.id.cmp(&b.id))
    });
    let mut ids: Vec<usize> = alive[..k].iter().map(|n| n.id).collect();
    ids.sort_unstable();
    ids
}

/// Drives rounds of one protocol over one network.
#[derive(Debug, Clone)]
pub struct RoundEngine {
    protocol: Protocol,
    estimate: EnergyEstimate,
}

impl RoundEngine {
    pub fn new(network: &Network, protocol: Protocol) -> Result<Self> {
        Ok(Self {
            protocol,
            estimate: EnergyEstimate::for_network(network)?,
        })
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn estimate(&self) -> &EnergyEstimate {
        &self.estimate
    }

    /// Plans and executes one round.
    pub fn run_round(&self, network: &mut Network) -> Result<RoundReport> {
        if network.alive_count() == 0 {
            let r = network.round_index;
            return Ok(RoundReport {
                outcome: RoundOutcome {
                    round: r,
                    ..RoundOutcome::default()
                },
                topology: RoundTopology {
                    round: r,
                    ..RoundTopology::default()
                },
                transmissions: Vec::new(),
            });
        }
        let topology = self.plan_round(network)?;
        execute_round(network, topology)
    }

    /// Assigns this round's roles from current energies: beta nodes, cluster
    /// heads, cluster membership and the backbone with its leader.
    /// Consumes election draws from the network's generator but charges no energy.
    pub fn plan_round(&self, network: &mut Network) -> Result<RoundTopology> {
        let r = network.round_index;
        for node in network.nodes.iter_mut().filter(|n| n.alive) {
            node.role = Some(Role::Normal);
        }

        let beta_ids = if self.protocol.uses_backbone() {
            select_beta_nodes(&network.nodes, network.config.beta_fraction)
        } else {
            Vec::new()
        };
        for &b in &beta_ids {
            network.nodes[b].role = Some(Role::Beta);
        }

        let candidates = self.candidates(network, &beta_ids)?;
        let Network { nodes, rng, .. } = network;
        let ch_ids = elect_cluster_heads(nodes, &candidates, r, rng);
        for &h in &ch_ids {
            network.nodes[h].role = Some(Role::ClusterHead);
        }
        let cluster = assign_clusters(&network.nodes, &ch_ids);

        let bs = network.bs();
        let chain = if beta_ids.is_empty() {
            None
        } else {
            let beta: Vec<&Node> = beta_ids.iter().map(|&b| &network.nodes[b]).collect();
            let (chain, leader) = match self.protocol {
                Protocol::Hdeec => (build_greedy_chain(&beta, bs)?, select_leader_nearest(&beta, bs)?),
                Protocol::Mhdeec => {
                    let cfg = &network.config;
                    (
                        build_multi_edge_chain(&beta, bs)?,
                        select_leader_weighted(&beta, bs, cfg.weight_w1, cfg.weight_w2)?,
                    )
                }
                Protocol::Deec | Protocol::Sep => unreachable!("no backbone"),
            };
            network.nodes[leader].role = Some(Role::BetaLeader);
            Some(ChainTopology::new(chain, leader)?)
        };

        Ok(RoundTopology {
            round: r + 1,
            beta_ids,
            cluster,
            chain,
        })
    }

    /// Alive normal nodes with this round's election probability.
    fn candidates(&self, network: &Network, beta_ids: &[usize]) -> Result<Vec<Candidate>> {
        let cfg = &network.config;
        let r = network.round_index;
        let eligible = network
            .nodes
            .iter()
            .filter(|n| n.alive && n.role == Some(Role::Normal));

        if self.protocol == Protocol::Sep {
            let (m, a) = (cfg.sep.advanced_fraction, cfg.sep.advanced_factor);
            let p_normal = cfg.p_opt / (1.0 + a * m);
            let p_advanced = p_normal * (1.0 + a);
            return Ok(eligible
                .map(|n| Candidate {
                    id: n.id,
                    probability: if network.sep_advanced[n.id] {
                        p_advanced
                    } else {
                        p_normal
                    },
                })
                .collect());
        }

        let mut avg = self.estimate.average_at(r);
        if avg <= 0.0 {
            // past the estimated lifetime: fall back to the true mean
            let alive = network.alive_count();
            avg = network.nodes.iter().filter(|n| n.alive).map(|n| n.residual_energy).sum::<f64>()
                / alive as f64;
        }
        // the election population excludes this round's beta nodes
        let population = network.nodes.len() - beta_ids.len();
        let sum_extra: f64 = network
            .nodes
            .iter()
            .filter(|n| beta_ids.binary_search(&n.id).is_err())
            .map(|n| n.extra_fraction)
            .sum();
        eligible
            .map(|n| {
                Ok(Candidate {
                    id: n.id,
                    probability: ch_probability(n, avg, population, sum_extra, cfg.p_opt)?,
                })
            })
            .collect()
    }
}

/// Charges one round of traffic over a planned topology, retires drained
/// nodes and advances the round counter.
///
/// Members report to their head; each head fuses its cluster and sends the
/// aggregate to the sink (no beta nodes) or to its nearest beta node, which
/// pays the reception. Backbone nodes then forward toward the leader.
pub fn execute_round(network: &mut Network, topology: RoundTopology) -> Result<RoundReport> {
    for id in topology
        .cluster
        .ch_ids
        .iter()
        .chain(topology.cluster.membership.keys())
        .chain(&topology.beta_ids)
    {
        if !network.nodes.get(*id).is_some_and(|n| n.alive) {
            return Err(Error::ProtocolLogic(format!(
                "node {id} in round topology is not alive"
            )));
        }
    }

    let mut flow = Flow::new(network);
    flow.clusters(&topology)?;
    flow.backbone(&topology)?;
    let Flow {
        breakdown,
        packets,
        log,
        ..
    } = flow;

    let mut deaths = Vec::new();
    for node in network.nodes.iter_mut() {
        if node.alive && node.residual_energy <= 0.0 {
            node.residual_energy = 0.0;
            node.alive = false;
            node.role = None;
            deaths.push(node.id);
        }
    }
    network.round_index += 1;

    Ok(RoundReport {
        outcome: RoundOutcome {
            round: network.round_index,
            energy_spent: breakdown.total(),
            packets_delivered_to_bs: packets,
            deaths,
            breakdown,
        },
        topology,
        transmissions: log,
    })
}

/// Charges one round's traffic against the network.
struct Flow<'a> {
    network: &'a mut Network,
    breakdown: EnergyBreakdown,
    packets: u64,
    log: Vec<Transmission>,
    /// Per beta node: packets received and cluster aggregates carried.
    inbound: BTreeMap<usize, (usize, u64)>,
}

#[derive(Clone, Copy)]
enum Bucket {
    MemberTx,
    ChRx,
    ChAgg,
    ChTx,
    BetaRx,
    BetaAgg,
    BetaTx,
}

impl<'a> Flow<'a> {
    fn new(network: &'a mut Network) -> Self {
        Self {
            network,
            breakdown: EnergyBreakdown::default(),
            packets: 0,
            log: Vec::new(),
            inbound: BTreeMap::new(),
        }
    }

    fn bits(&self) -> u64 {
        self.network.config.packet_bits
    }

    fn spend(&mut self, id: usize, cost: f64, bucket: Bucket) -> Result<()> {
        let deducted = charge(&mut self.network.nodes[id], cost)?;
        let slot = match bucket {
            Bucket::MemberTx => &mut self.breakdown.member_tx,
            Bucket::ChRx => &mut self.breakdown.ch_rx,
            Bucket::ChAgg => &mut self.breakdown.ch_agg,
            Bucket::ChTx => &mut self.breakdown.ch_tx,
            Bucket::BetaRx => &mut self.breakdown.beta_rx,
            Bucket::BetaAgg => &mut self.breakdown.beta_agg,
            Bucket::BetaTx => &mut self.breakdown.beta_tx,
        };
        *slot += deducted;
        Ok(())
    }

    fn transmit(&mut self, from: usize, to: Hop, kind: LinkKind, bucket: Bucket) -> Result<()> {
        let origin = self.network.nodes[from].position;
        let target = match to {
            Hop::Node(id) => self.network.nodes[id].position,
            Hop::BaseStation => self.network.bs(),
        };
        let distance = origin.distance(&target);
        let cost = self.network.config.radio.tx_energy(self.bits(), distance)?;
        self.spend(from, cost, bucket)?;
        self.log.push(Transmission {
            from,
            to,
            kind,
            distance,
        });
        Ok(())
    }

    fn receive(&mut self, id: usize, count: usize, bucket: Bucket) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        let cost = self.network.config.radio.rx_energy(self.bits())? * count as f64;
        self.spend(id, cost, bucket)
    }

    fn aggregate(&mut self, id: usize, signals: usize, bucket: Bucket) -> Result<()> {
        let cost = self.network.config.radio.aggregation_energy(self.bits(), signals)?;
        self.spend(id, cost, bucket)
    }

    fn nearest_beta(&self, from: usize, beta_ids: &[usize]) -> usize {
        let pos = self.network.nodes[from].position;
        let mut best = beta_ids[0];
        let mut best_d = pos.distance(&self.network.nodes[best].position);
        for &b in &beta_ids[1..] {
            let d = pos.distance(&self.network.nodes[b].position);
            if d < best_d {
                best = b;
                best_d = d;
            }
        }
        best
    }

    /// Members report to heads; heads fuse and forward.
    fn clusters(&mut self, topology: &RoundTopology) -> Result<()> {
        let cluster = &topology.cluster;
        for (&member, &head) in &cluster.membership {
            self.transmit(member, Hop::Node(head), LinkKind::MemberToHead, Bucket::MemberTx)?;
        }
        for &head in &cluster.ch_ids {
            let members = cluster.member_counts[&head];
            self.receive(head, members, Bucket::ChRx)?;
            // the head's own reading is fused with its members'
            self.aggregate(head, members + 1, Bucket::ChAgg)?;
            if topology.beta_ids.is_empty() {
                self.transmit(head, Hop::BaseStation, LinkKind::HeadToBs, Bucket::ChTx)?;
                self.packets += 1;
            } else {
                let beta = self.nearest_beta(head, &topology.beta_ids);
                self.transmit(head, Hop::Node(beta), LinkKind::HeadToBeta, Bucket::ChTx)?;
                self.receive(beta, 1, Bucket::BetaRx)?;
                let slot = self.inbound.entry(beta).or_default();
                slot.0 += 1;
                slot.1 += 1;
            }
        }
        Ok(())
    }

    /// Beta nodes fuse what they hold and pass it toward the leader,
    /// farthest hops first. A beta node with nothing to fuse stays idle.
    fn backbone(&mut self, topology: &RoundTopology) -> Result<()> {
        let Some(chain) = &topology.chain else {
            return Ok(());
        };
        let mut order: Vec<(usize, usize)> = chain
            .chain
            .members
            .iter()
            .map(|&m| {
                let depth = chain
                    .hops_to_leader(m)
                    .ok_or_else(|| Error::Topology(format!("beta {m} cannot reach the leader")))?;
                Ok((depth, m))
            })
            .collect::<Result<_>>()?;
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        let senses = self.network.config.beta_senses;
        for (_, beta) in order {
            let (received, carried) = self.inbound.remove(&beta).unwrap_or_default();
            let signals = received + usize::from(senses);
            if signals == 0 {
                continue;
            }
            self.aggregate(beta, signals, Bucket::BetaAgg)?;
            match chain.next_hop[&beta] {
                Hop::Node(next) => {
                    self.transmit(beta, Hop::Node(next), LinkKind::BetaToBeta, Bucket::BetaTx)?;
                    self.receive(next, 1, Bucket::BetaRx)?;
                    let slot = self.inbound.entry(next).or_default();
                    slot.0 += 1;
                    slot.1 += carried;
                }
                Hop::BaseStation => {
                    self.transmit(beta, Hop::BaseStation, LinkKind::LeaderToBs, Bucket::BetaTx)?;
                    self.packets += carried;
                }
            }
        }
        Ok(())
    }
}

fn run_one(network: &mut Network, protocol: Protocol) -> Result<RoundOutcome> {
    Ok(RoundEngine::new(network, protocol)?.run_round(network)?.outcome)
}

pub fn run_round_deec(network: &mut Network) -> Result<RoundOutcome> {
    run_one(network, Protocol::Deec)
}

pub fn run_round_sep(network: &mut Network) -> Result<RoundOutcome> {
    run_one(network, Protocol::Sep)
}

pub fn run_round_hdeec(network: &mut Network) -> Result<RoundOutcome> {
    run_one(network, Protocol::Hdeec)
}

pub fn run_round_mhdeec(network: &mut Network) -> Result<RoundOutcome> {
    run_one(network, Protocol::Mhdeec)
}

/// Runs until `max_rounds` rounds have been simulated or every node is dead.
pub fn run_simulation(
    network: &mut Network,
    protocol: Protocol,
    max_rounds: u64,
) -> Result<MetricsSeries> {
    run_simulation_with(network, protocol, max_rounds, |_| {})
}

/// Like [`run_simulation`], handing every round's report to `observe`.
pub fn run_simulation_with(
    network: &mut Network,
    protocol: Protocol,
    max_rounds: u64,
    mut observe: impl FnMut(&RoundReport),
) -> Result<MetricsSeries> {
    let engine = RoundEngine::new(network, protocol)?;
    let mut series = MetricsSeries::new(network.nodes.len(), max_rounds, network.total_initial_energy());
    let mut cumulative = 0;
    while network.round_index < max_rounds && network.alive_count() > 0 {
        let report = engine.run_round(network)?;
        let outcome = &report.outcome;
        cumulative += outcome.packets_delivered_to_bs;
        series.push(MetricsRecord {
            round: outcome.round,
            alive: network.alive_count(),
            cluster_heads: report.topology.cluster.ch_ids.len(),
            packets_bs_round: outcome.packets_delivered_to_bs,
            packets_bs_cum: cumulative,
            energy_residual_total: network.residual_total(),
            energy_spent_round: outcome.energy_spent,
        });
        observe(&report);
    }
    Ok(series)
}
