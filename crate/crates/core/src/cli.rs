//! Configuration resolution and batch execution behind the `hdeec` binary.
//!
//! Settings are resolved in three layers: built-in defaults, then a
//! `key = value` config file (`#` starts a comment), then command-line
//! flags. Every resolved value is echoed into the summary file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::error::Error;
use crate::metrics::{aggregate_seeds, FieldStats, LifetimeSummary, MetricsSeries};
use crate::model::{init_network, Heterogeneity, NetworkConfig, Position};
use crate::protocols::{run_simulation_with, Protocol, RoundReport};

pub const CSV_HEADER: &str = "round,alive,cluster_heads,packets_bs_round,packets_bs_cum,energy_residual_total,energy_spent_round";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Simulation(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Simulation(_) => 1,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Values given on the command line; `None`/empty means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub protocols: Vec<String>,
    pub seeds: Vec<u64>,
    pub rounds: Option<u64>,
    pub nodes: Option<usize>,
    pub field: Option<f64>,
    pub bs: Option<String>,
    pub out: Option<PathBuf>,
    pub dump_topology: bool,
}

/// A fully resolved batch of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub protocols: Vec<Protocol>,
    pub seeds: Vec<u64>,
    pub config: NetworkConfig,
    pub out_dir: PathBuf,
    pub dump_topology: bool,
}

impl RunSpec {
    pub fn max_rounds(&self) -> u64 {
        self.config.max_rounds
    }

    /// `key = value` lines for every resolved setting, in a stable order.
    pub fn resolved_lines(&self) -> Vec<String> {
        let c = &self.config;
        let list = |v: Vec<String>| v.join(",");
        let mut lines = vec![
            ("protocol", list(self.protocols.iter().map(|p| p.to_string()).collect())),
            ("seeds", list(self.seeds.iter().map(|s| s.to_string()).collect())),
            ("rounds", c.max_rounds.to_string()),
            ("nodes", c.node_count.to_string()),
            ("field", c.field_side.to_string()),
            ("bs", format!("{},{}", c.bs_position.x, c.bs_position.y)),
            ("p_opt", c.p_opt.to_string()),
            ("packet_bits", c.packet_bits.to_string()),
            ("e0", c.base_energy.to_string()),
            ("beta_fraction", c.beta_fraction.to_string()),
            ("beta_senses", c.beta_senses.to_string()),
        ];
        match c.heterogeneity {
            Heterogeneity::UniformRandom { a_max } => {
                lines.push(("heterogeneity", "uniform".into()));
                lines.push(("a_max", a_max.to_string()));
            }
            Heterogeneity::TwoLevel { .. } => lines.push(("heterogeneity", "two-level".into())),
        }
        lines.extend([
            ("sep_m", c.sep.advanced_fraction.to_string()),
            ("sep_a", c.sep.advanced_factor.to_string()),
            ("w1", c.weight_w1.to_string()),
            ("w2", c.weight_w2.to_string()),
            ("e_elec", c.radio.e_elec.to_string()),
            ("eps_fs", c.radio.eps_fs.to_string()),
            ("eps_mp", c.radio.eps_mp.to_string()),
            ("d0", c.radio.d0.to_string()),
            ("e_da", c.radio.e_da.to_string()),
            ("out", self.out_dir.display().to_string()),
            ("dump_topology", self.dump_topology.to_string()),
        ]);
        lines.into_iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }
}

const KEYS: &[&str] = &[
    "protocol", "seeds", "rounds", "nodes", "field", "bs", "p_opt", "packet_bits", "e0",
    "beta_fraction", "beta_senses", "heterogeneity", "a_max", "sep_m", "sep_a", "w1", "w2",
    "e_elec", "eps_fs", "eps_mp", "d0", "e_da", "out", "dump_topology",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = match key {
        "protocols" => "protocol",
        "seed" => "seeds",
        "max_rounds" => "rounds",
        "node_count" => "nodes",
        "field_side" => "field",
        "bs_position" => "bs",
        "base_energy" => "e0",
        other => other,
    };
    KEYS.iter().copied().find(|k| *k == key)
}

/// Parses `key = value` lines into a map, later lines winning.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<&'static str, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let canon = canonical_key(key).ok_or_else(|| usage(format!("unknown key `{key}`")))?;
        map.insert(canon, value.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| usage(format!("{key}: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(usage(format!("{key}: cannot parse `{value}` as a boolean"))),
    }
}

pub fn parse_position(value: &str) -> Result<Position, CliError> {
    let (x, y) = value
        .split_once(',')
        .ok_or_else(|| usage(format!("bs: expected `X,Y`, got `{value}`")))?;
    Ok(Position::new(parse_num("bs", x.trim())?, parse_num("bs", y.trim())?))
}

pub fn parse_protocols(value: &str) -> Result<Vec<Protocol>, CliError> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(Protocol::ALL);
        } else {
            out.push(item.parse().map_err(|e: Error| usage(e.to_string()))?);
        }
    }
    out.dedup();
    if out.is_empty() {
        return Err(usage("protocol: at least one protocol is required"));
    }
    Ok(out)
}

fn parse_seeds(value: &str) -> Result<Vec<u64>, CliError> {
    let seeds = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num("seeds", s))
        .collect::<Result<Vec<u64>, _>>()?;
    if seeds.is_empty() {
        return Err(usage("seeds: at least one seed is required"));
    }
    Ok(seeds)
}

/// Resolves defaults, then the optional config file text, then `flags`.
pub fn parse_config(file_text: Option<&str>, flags: &Overrides) -> Result<RunSpec, CliError> {
    let mut kv = match file_text {
        Some(text) => parse_key_values(text)?,
        None => BTreeMap::new(),
    };
    if !flags.protocols.is_empty() {
        kv.insert("protocol", flags.protocols.join(","));
    }
    if !flags.seeds.is_empty() {
        let seeds: Vec<String> = flags.seeds.iter().map(u64::to_string).collect();
        kv.insert("seeds", seeds.join(","));
    }
    if let Some(r) = flags.rounds {
        kv.insert("rounds", r.to_string());
    }
    if let Some(n) = flags.nodes {
        kv.insert("nodes", n.to_string());
    }
    if let Some(f) = flags.field {
        kv.insert("field", f.to_string());
    }
    if let Some(bs) = &flags.bs {
        kv.insert("bs", bs.clone());
    }
    if let Some(out) = &flags.out {
        kv.insert("out", out.display().to_string());
    }
    if flags.dump_topology {
        kv.insert("dump_topology", "true".into());
    }
    resolve(&kv)
}

fn resolve(kv: &BTreeMap<&'static str, String>) -> Result<RunSpec, CliError> {
    let mut c = NetworkConfig::default();
    let mut protocols = Protocol::ALL.to_vec();
    let mut seeds = vec![1];
    let mut out_dir = PathBuf::from("results");
    let mut dump_topology = false;
    let mut a_max = match c.heterogeneity {
        Heterogeneity::UniformRandom { a_max } => a_max,
        Heterogeneity::TwoLevel { .. } => 1.0,
    };
    let mut two_level = false;

    for (&key, value) in kv {
        match key {
            "protocol" => protocols = parse_protocols(value)?,
            "seeds" => seeds = parse_seeds(value)?,
            "rounds" => c.max_rounds = parse_num(key, value)?,
            "nodes" => c.node_count = parse_num(key, value)?,
            "field" => c.field_side = parse_num(key, value)?,
            "bs" => c.bs_position = parse_position(value)?,
            "p_opt" => c.p_opt = parse_num(key, value)?,
            "packet_bits" => c.packet_bits = parse_num(key, value)?,
            "e0" => c.base_energy = parse_num(key, value)?,
            "beta_fraction" => c.beta_fraction = parse_num(key, value)?,
            "beta_senses" => c.beta_senses = parse_bool(key, value)?,
            "heterogeneity" => {
                two_level = match value.to_ascii_lowercase().as_str() {
                    "uniform" | "uniform-random" => false,
                    "two-level" | "two_level" | "sep" => true,
                    _ => return Err(usage(format!("heterogeneity: expected `uniform` or `two-level`, got `{value}`"))),
                }
            }
            "a_max" => a_max = parse_num(key, value)?,
            "sep_m" => c.sep.advanced_fraction = parse_num(key, value)?,
            "sep_a" => c.sep.advanced_factor = parse_num(key, value)?,
            "w1" | "w2" => {}
            "e_elec" => c.radio.e_elec = parse_num(key, value)?,
            "eps_fs" => c.radio.eps_fs = parse_num(key, value)?,
            "eps_mp" => c.radio.eps_mp = parse_num(key, value)?,
            "d0" => c.radio.d0 = parse_num(key, value)?,
            "e_da" => c.radio.e_da = parse_num(key, value)?,
            "out" => out_dir = PathBuf::from(value),
            "dump_topology" => dump_topology = parse_bool(key, value)?,
            other => unreachable!("unhandled key {other}"),
        }
    }

    // a lone weight implies its complement
    match (kv.get("w1"), kv.get("w2")) {
        (Some(w1), Some(w2)) => {
            c.weight_w1 = parse_num("w1", w1)?;
            c.weight_w2 = parse_num("w2", w2)?;
        }
        (Some(w1), None) => {
            c.weight_w1 = parse_num("w1", w1)?;
            c.weight_w2 = 1.0 - c.weight_w1;
        }
        (None, Some(w2)) => {
            c.weight_w2 = parse_num("w2", w2)?;
            c.weight_w1 = 1.0 - c.weight_w2;
        }
        (None, None) => {}
    }

    c.heterogeneity = if two_level {
        Heterogeneity::TwoLevel {
            advanced_fraction: c.sep.advanced_fraction,
            advanced_factor: c.sep.advanced_factor,
        }
    } else {
        Heterogeneity::UniformRandom { a_max }
    };
    c.validate().map_err(|e| usage(e.to_string()))?;

    Ok(RunSpec {
        protocols,
        seeds,
        config: c,
        out_dir,
        dump_topology,
    })
}

/// Writes one CSV row per simulated round.
pub fn write_csv<W: Write>(series: &MetricsSeries, mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &series.records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.round,
            r.alive,
            r.cluster_heads,
            r.packets_bs_round,
            r.packets_bs_cum,
            r.energy_residual_total,
            r.energy_spent_round
        )?;
    }
    w.flush()
}

pub fn csv_file_name(protocol: Protocol, seed: u64) -> String {
    format!("{protocol}_seed{seed}.csv")
}

pub fn topology_file_name(protocol: Protocol, seed: u64) -> String {
    format!("{protocol}_seed{seed}_topology.txt")
}

fn append_topology(buf: &mut String, report: &RoundReport) {
    let round = report.outcome.round;
    match &report.topology.chain {
        Some(chain) => {
            let _ = writeln!(buf, "# round {round} leader {}", chain.leader);
            for &(u, v) in &chain.chain.edges {
                let _ = writeln!(buf, "{u} {v}");
            }
        }
        None => {
            let _ = writeln!(buf, "# round {round}");
        }
    }
}

/// One finished run of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub protocol: Protocol,
    pub seed: u64,
    pub rounds: usize,
    pub summary: LifetimeSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub runs: Vec<RunResult>,
    /// Contents of `summary.tsv`.
    pub summary_text: String,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn run_one(spec: &RunSpec, protocol: Protocol, seed: u64) -> Result<RunResult, CliError> {
    let mut network = init_network(spec.config.clone(), seed)?;
    let mut dump = String::new();
    let series = run_simulation_with(&mut network, protocol, spec.max_rounds(), |report| {
        if spec.dump_topology {
            append_topology(&mut dump, report);
        }
    })?;

    let path = spec.out_dir.join(csv_file_name(protocol, seed));
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_csv(&series, BufWriter::new(file)).map_err(|e| CliError::io(&path, e))?;
    if spec.dump_topology {
        write_file(&spec.out_dir.join(topology_file_name(protocol, seed)), dump.as_bytes())?;
    }

    let summary = if series.is_empty() {
        LifetimeSummary {
            fnd: None,
            hnd: None,
            lnd: None,
            total_packets: 0,
        }
    } else {
        series.summarize()?
    };
    Ok(RunResult {
        protocol,
        seed,
        rounds: series.len(),
        summary,
    })
}

/// Runs every (protocol, seed) pair in parallel, writing one CSV per run
/// plus `summary.tsv` and `lifetimes.csv` into the output directory.
pub fn run_batch(spec: &RunSpec) -> Result<BatchReport, CliError> {
    fs::create_dir_all(&spec.out_dir).map_err(|e| CliError::io(&spec.out_dir, e))?;
    let jobs: Vec<(Protocol, u64)> = spec
        .protocols
        .iter()
        .flat_map(|&p| spec.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(p, s)| run_one(spec, p, s))
        .collect::<Result<Vec<_>, _>>()?;

    let summary_text = format_summary(spec, &runs);
    write_file(&spec.out_dir.join("summary.tsv"), summary_text.as_bytes())?;
    write_file(
        &spec.out_dir.join("lifetimes.csv"),
        format_lifetimes(spec.max_rounds(), &runs).as_bytes(),
    )?;
    Ok(BatchReport { runs, summary_text })
}

fn text_or(v: Option<u64>) -> String {
    v.map_or_else(|| "not_reached".to_string(), |v| v.to_string())
}

fn stat_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "not_reached".to_string(), |v| v.to_string())
}

pub fn format_summary(spec: &RunSpec, runs: &[RunResult]) -> String {
    let mut s = String::new();
    for line in spec.resolved_lines() {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "protocol\tseed\tfnd\thnd\tlnd\tunstability\ttotal_packets");
    for r in runs {
        let l = &r.summary;
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.protocol,
            r.seed,
            text_or(l.fnd),
            text_or(l.hnd),
            text_or(l.lnd),
            text_or(l.unstability_period()),
            l.total_packets
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "protocol\tstat\tfnd\thnd\tlnd\tunstability\ttotal_packets");
    for &p in &spec.protocols {
        let summaries: Vec<LifetimeSummary> =
            runs.iter().filter(|r| r.protocol == p).map(|r| r.summary).collect();
        let Ok(agg) = aggregate_seeds(&summaries) else {
            continue;
        };
        let fields = [agg.fnd, agg.hnd, agg.lnd, agg.unstability, agg.total_packets];
        let row = |name: &str, cell: &dyn Fn(&FieldStats) -> String| {
            let cells: Vec<String> = fields.iter().map(cell).collect();
            format!("{p}\t{name}\t{}\n", cells.join("\t"))
        };
        s += &row("mean", &|f| stat_cell(f.mean));
        s += &row("min", &|f| text_or(f.min));
        s += &row("max", &|f| text_or(f.max));
        s += &row("excluded", &|f| f.excluded.to_string());
    }
    s
}

/// Lifetime table with unreached events written as `max_rounds + 1`.
pub fn format_lifetimes(max_rounds: u64, runs: &[RunResult]) -> String {
    let sentinel = max_rounds + 1;
    let v = |x: Option<u64>| x.unwrap_or(sentinel);
    let mut s = String::from("protocol,seed,fnd,hnd,lnd,unstability,total_packets\n");
    for r in runs {
        let l = &r.summary;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.protocol,
            r.seed,
            v(l.fnd),
            v(l.hnd),
            v(l.lnd),
            v(l.unstability_period()),
            l.total_packets
        );
    }
    s
}
