//! Round-based simulation of clustered routing in heterogeneous wireless
//! sensor networks.
//!
//! Four protocols share one energy model and one election machinery:
//! DEEC and SEP send cluster aggregates straight to the base station, while
//! H-DEEC and MH-DEEC relay them over a backbone of the highest-energy
//! ("beta") nodes, a greedy chain and a multi-edge tree respectively.
//!
//! ```
//! use hdeec::{init_network, run_simulation, NetworkConfig, Protocol};
//!
//! let mut net = init_network(NetworkConfig::default(), 42).unwrap();
//! let series = run_simulation(&mut net, Protocol::Mhdeec, 200).unwrap();
//! assert_eq!(series.len(), 200);
//! assert!(series.records.iter().all(|r| r.alive <= 100));
//! ```

pub mod chain;
pub mod cli;
pub mod clustering;
pub mod error;
pub mod metrics;
pub mod model;
pub mod protocols;
pub mod radio;

pub use chain::{ChainTopology, Hop};
pub use error::{Error, Result};
pub use metrics::{aggregate_seeds, summarize, LifetimeSummary, MetricsRecord, MetricsSeries};
pub use model::{
    init_network, init_network_with_seeds, total_initial_energy, Heterogeneity, Network,
    NetworkConfig, Node, Position, Role, SeedPlan, SepParams,
};
pub use protocols::{run_simulation, run_simulation_with, Protocol, RoundEngine, RoundOutcome};
pub use radio::RadioParams;
