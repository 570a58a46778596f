//! Runs every protocol over a handful of seeds until the network dies and
//! prints mean lifetime statistics.
//!
//! cargo run --release --example compare -- [seeds] [max_rounds]

use hdeec::metrics::aggregate_seeds;
use hdeec::{init_network, run_simulation, NetworkConfig, Protocol};

fn main() -> hdeec::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let max_rounds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20_000);

    println!("protocol\tfnd\thnd\tlnd\tunstability\tpackets");
    for protocol in Protocol::ALL {
        let mut summaries = Vec::new();
        for seed in 1..=seeds {
            let mut net = init_network(NetworkConfig::default(), seed)?;
            summaries.push(run_simulation(&mut net, protocol, max_rounds)?.summarize()?);
        }
        let agg = aggregate_seeds(&summaries)?;
        let m = |s: hdeec::metrics::FieldStats| s.mean.map_or("-".into(), |v| format!("{v:.1}"));
        println!(
            "{protocol}\t{}\t{}\t{}\t{}\t{}",
            m(agg.fnd),
            m(agg.hnd),
            m(agg.lnd),
            m(agg.unstability),
            m(agg.total_packets)
        );
    }
    Ok(())
}
