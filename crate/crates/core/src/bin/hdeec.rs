use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hdeec::cli::{parse_config, run_batch, CliError, Overrides};

/// Simulate DEEC, SEP, H-DEEC and MH-DEEC over one or more seeds and write
/// per-round CSV files plus a lifetime summary.
#[derive(Debug, Parser)]
#[command(name = "hdeec", version)]
struct Args {
    /// Protocol to run (deec, sep, hdeec, mhdeec or all); repeatable.
    #[arg(long = "protocol", value_name = "NAME")]
    protocols: Vec<String>,
    /// Random seed; repeatable.
    #[arg(long = "seed", value_name = "N")]
    seeds: Vec<u64>,
    /// Maximum number of rounds per run.
    #[arg(long)]
    rounds: Option<u64>,
    /// Number of sensor nodes.
    #[arg(long)]
    nodes: Option<usize>,
    /// Side of the square field in meters.
    #[arg(long)]
    field: Option<f64>,
    /// Base station position.
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    bs: Option<String>,
    /// `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write per-round backbone edge lists.
    #[arg(long)]
    dump_topology: bool,
}

fn run(args: Args) -> Result<(), CliError> {
    let text = match &args.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?),
        None => None,
    };
    let flags = Overrides {
        protocols: args.protocols,
        seeds: args.seeds,
        rounds: args.rounds,
        nodes: args.nodes,
        field: args.field,
        bs: args.bs,
        out: args.out,
        dump_topology: args.dump_topology,
    };
    let spec = parse_config(text.as_deref(), &flags)?;
    let report = run_batch(&spec)?;
    print!("{}", report.summary_text);
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdeec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
