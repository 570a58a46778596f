//! Domain types shared by every module and deterministic network setup.
//!
//! All randomness flows through [`ChaCha8Rng`] streams so that a fixed
//! `(config, seed)` pair yields the same trajectory on every platform.
//! Node placement, initial energies and the per-round protocol draws use
//! three independent streams; see [`SeedPlan`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::radio::RadioParams;

/// A point in the deployment plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Position {
        Position::new(self.x * factor, self.y * factor)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// How extra initial energy is distributed over the population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Heterogeneity {
    /// Every node draws its extra fraction `a_i` from `Uniform[0, a_max]`.
    UniformRandom { a_max: f64 },
    /// `round(advanced_fraction * N)` randomly chosen nodes get
    /// `a_i = advanced_factor`, the rest get `a_i = 0`.
    TwoLevel {
        advanced_fraction: f64,
        advanced_factor: f64,
    },
}

impl Default for Heterogeneity {
    fn default() -> Self {
        Heterogeneity::UniformRandom { a_max: 1.0 }
    }
}

/// Two-level parameters used by the SEP election.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepParams {
    /// Fraction `m` of advanced nodes.
    pub advanced_fraction: f64,
    /// Extra energy factor `a` of advanced nodes.
    pub advanced_factor: f64,
}

impl Default for SepParams {
    fn default() -> Self {
        Self {
            advanced_fraction: 0.1,
            advanced_factor: 1.0,
        }
    }
}

impl SepParams {
    /// Number of nodes that count as advanced in a population of `n`.
    pub fn advanced_count(&self, n: usize) -> usize {
        ((self.advanced_fraction * n as f64).round() as usize).min(n)
    }
}

/// Everything needed to deploy and simulate a network.
///
/// [`Default`] yields the reference setup: 100 nodes on a 100 m square,
/// base station at (30, 150), 4000-bit packets, `p_opt = 0.1`, `E0 = 0.5 J`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub node_count: usize,
    /// Side length of the square field, meters.
    pub field_side: f64,
    pub bs_position: Position,
    pub p_opt: f64,
    pub packet_bits: u64,
    /// Base initial energy `E0`, joules.
    pub base_energy: f64,
    /// Fraction of alive nodes promoted to beta (relay) duty each round.
    pub beta_fraction: f64,
    /// Whether beta nodes fuse a reading of their own into what they relay.
    /// When false they forward only what they receive and idle otherwise.
    pub beta_senses: bool,
    pub max_rounds: u64,
    pub heterogeneity: Heterogeneity,
    pub sep: SepParams,
    /// Weight of the energy term in the leader weight.
    pub weight_w1: f64,
    /// Weight of the distance term in the leader weight.
    pub weight_w2: f64,
    pub radio: RadioParams,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            node_count: 100,
            field_side: 100.0,
            bs_position: Position::new(30.0, 150.0),
            p_opt: 0.1,
            packet_bits: 4000,
            base_energy: 0.5,
            beta_fraction: 0.10,
            beta_senses: true,
            max_rounds: 4000,
            heterogeneity: Heterogeneity::default(),
            sep: SepParams::default(),
            weight_w1: 0.5,
            weight_w2: 0.5,
            radio: RadioParams::default(),
        }
    }
}

fn in_open_unit(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

impl NetworkConfig {
    /// Checks every invariant, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.node_count < 2 {
            return fail("nodes must be at least 2");
        }
        if !(self.field_side > 0.0 && self.field_side.is_finite()) {
            return fail("field must be > 0");
        }
        if !(self.bs_position.x.is_finite() && self.bs_position.y.is_finite()) {
            return fail("bs must be a finite position");
        }
        if !in_open_unit(self.p_opt) {
            return fail("p_opt must be in (0,1)");
        }
        if self.packet_bits == 0 {
            return fail("packet_bits must be > 0");
        }
        if !(self.base_energy > 0.0 && self.base_energy.is_finite()) {
            return fail("e0 must be > 0");
        }
        if !in_open_unit(self.beta_fraction) {
            return fail("beta_fraction must be in (0,1)");
        }
        let w_ok = |w: f64| (0.0..=1.0).contains(&w);
        if !w_ok(self.weight_w1) || !w_ok(self.weight_w2) {
            return fail("w1 and w2 must be in [0,1]");
        }
        if (self.weight_w1 + self.weight_w2 - 1.0).abs() > 1e-12 {
            return fail("w1 + w2 must equal 1");
        }
        match self.heterogeneity {
            Heterogeneity::UniformRandom { a_max } => {
                if !(a_max >= 0.0 && a_max.is_finite()) {
                    return fail("a_max must be >= 0");
                }
            }
            Heterogeneity::TwoLevel {
                advanced_fraction,
                advanced_factor,
            } => {
                if !(0.0..=1.0).contains(&advanced_fraction) {
                    return fail("sep_m must be in [0,1]");
                }
                if !(advanced_factor >= 0.0 && advanced_factor.is_finite()) {
                    return fail("sep_a must be >= 0");
                }
            }
        }
        if !(0.0..=1.0).contains(&self.sep.advanced_fraction) {
            return fail("sep_m must be in [0,1]");
        }
        if !(self.sep.advanced_factor >= 0.0 && self.sep.advanced_factor.is_finite()) {
            return fail("sep_a must be >= 0");
        }
        self.radio.validate()
    }
}

/// Duty a node holds in the current round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Normal,
    ClusterHead,
    Beta,
    BetaLeader,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub position: Position,
    pub initial_energy: f64,
    pub residual_energy: f64,
    /// Extra energy fraction `a_i`; `initial_energy = E0 * (1 + a_i)`.
    pub extra_fraction: f64,
    pub alive: bool,
    /// `None` once the node is dead.
    pub role: Option<Role>,
    /// Last round (0-based) in which the node served as cluster head.
    pub last_ch_round: Option<u64>,
}

impl Node {
    pub fn new(id: usize, position: Position, base_energy: f64, extra_fraction: f64) -> Self {
        let initial_energy = base_energy * (1.0 + extra_fraction);
        Self {
            id,
            position,
            initial_energy,
            residual_energy: initial_energy,
            extra_fraction,
            alive: true,
            role: Some(Role::Normal),
            last_ch_round: None,
        }
    }

    /// Rounds elapsed since the node last served as cluster head, if ever.
    pub fn rounds_since_ch(&self, round: u64) -> Option<u64> {
        self.last_ch_round.map(|last| round.saturating_sub(last))
    }
}

/// Seeds for the three independent random streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub placement: u64,
    pub energy: u64,
    pub protocol: u64,
}

impl SeedPlan {
    /// One seed drives all three streams.
    pub fn uniform(seed: u64) -> Self {
        Self {
            placement: seed,
            energy: seed,
            protocol: seed,
        }
    }
}

const PLACEMENT_STREAM: u64 = 1;
const ENERGY_STREAM: u64 = 2;
const PROTOCOL_STREAM: u64 = 3;

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct Network {
    pub config: NetworkConfig,
    pub nodes: Vec<Node>,
    pub rng: ChaCha8Rng,
    /// Index of the next round to simulate, starting at 0.
    pub round_index: u64,
    /// Nodes treated as advanced by the SEP election.
    pub sep_advanced: Vec<bool>,
}

/// Deploys `config.node_count` nodes with a single seed for every stream.
pub fn init_network(config: NetworkConfig, seed: u64) -> Result<Network> {
    init_network_with_seeds(config, SeedPlan::uniform(seed))
}

pub fn init_network_with_seeds(config: NetworkConfig, seeds: SeedPlan) -> Result<Network> {
    config.validate()?;
    let n = config.node_count;

    let mut placement = stream(seeds.placement, PLACEMENT_STREAM);
    let positions: Vec<Position> = (0..n)
        .map(|_| {
            let x = placement.random::<f64>() * config.field_side;
            let y = placement.random::<f64>() * config.field_side;
            Position::new(x, y)
        })
        .collect();

    let mut energy = stream(seeds.energy, ENERGY_STREAM);
    let extras: Vec<f64> = match config.heterogeneity {
        Heterogeneity::UniformRandom { a_max } => {
            (0..n).map(|_| energy.random::<f64>() * a_max).collect()
        }
        Heterogeneity::TwoLevel {
            advanced_fraction,
            advanced_factor,
        } => {
            let k = ((advanced_fraction * n as f64).round() as usize).min(n);
            let mut ids: Vec<usize> = (0..n).collect();
            // partial Fisher-Yates: the first k slots become advanced
            for i in 0..k {
                let j = energy.random_range(i..n);
                ids.swap(i, j);
            }
            let mut extras = vec![0.0; n];
            for &id in &ids[..k] {
                extras[id] = advanced_factor;
            }
            extras
        }
    };

    let nodes: Vec<Node> = positions
        .into_iter()
        .zip(extras)
        .enumerate()
        .map(|(id, (pos, a))| Node::new(id, pos, config.base_energy, a))
        .collect();

    let sep_advanced = sep_classes(&nodes, config.sep.advanced_count(n));

    Ok(Network {
        rng: stream(seeds.protocol, PROTOCOL_STREAM),
        config,
        nodes,
        round_index: 0,
        sep_advanced,
    })
}

/// Marks the `k` nodes with the largest extra fraction as advanced (ties by id).
fn sep_classes(nodes: &[Node], k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        nodes[b]
            .extra_fraction
            .total_cmp(&nodes[a].extra_fraction)
            .then(a.cmp(&b))
    });
    let mut advanced = vec![false; nodes.len()];
    for &id in &order[..k] {
        advanced[id] = true;
    }
    advanced
}

impl Network {
    /// Builds a network from explicit nodes. Ids are reassigned to positions
    /// in the list.
    pub fn from_nodes(config: NetworkConfig, mut nodes: Vec<Node>, seed: u64) -> Result<Network> {
        config.validate()?;
        if nodes.len() != config.node_count {
            return Err(Error::Config(format!(
                "nodes must equal the number of supplied nodes ({})",
                nodes.len()
            )));
        }
        for (id, node) in nodes.iter_mut().enumerate() {
            node.id = id;
        }
        let sep_advanced = sep_classes(&nodes, config.sep.advanced_count(nodes.len()));
        Ok(Network {
            rng: stream(seed, PROTOCOL_STREAM),
            config,
            nodes,
            round_index: 0,
            sep_advanced,
        })
    }

    pub fn total_initial_energy(&self) -> f64 {
        total_initial_energy(self)
    }

    pub fn residual_total(&self) -> f64 {
        self.nodes.iter().map(|n| n.residual_energy).sum()
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn alive_ids(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.alive).map(|n| n.id).collect()
    }

    pub fn bs(&self) -> Position {
        self.config.bs_position
    }
}

/// Sum of initial energies; constant for the life of a run.
pub fn total_initial_energy(network: &Network) -> f64 {
    network.nodes.iter().map(|n| n.initial_energy).sum()
}
