//! Per-round records and lifetime statistics.
//!
//! * FND: first round in which fewer than `N` nodes are alive.
//! * HND: first round in which at most `floor(N / 2)` nodes are alive.
//! * LND: first round in which no node is alive.
//!
//! The stability period is FND; the unstability period is `LND - FND`.

use crate::error::{Error, Result};

/// State of the network after one simulated round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    /// 1-based round number.
    pub round: u64,
    pub alive: usize,
    pub cluster_heads: usize,
    pub packets_bs_round: u64,
    pub packets_bs_cum: u64,
    pub energy_residual_total: f64,
    pub energy_spent_round: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub node_count: usize,
    pub max_rounds: u64,
    pub initial_energy: f64,
    pub records: Vec<MetricsRecord>,
}

impl MetricsSeries {
    pub fn new(node_count: usize, max_rounds: u64, initial_energy: f64) -> Self {
        Self {
            node_count,
            max_rounds,
            initial_energy,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: MetricsRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summarize(&self) -> Result<LifetimeSummary> {
        summarize(&self.records, self.node_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LifetimeSummary {
    pub fnd: Option<u64>,
    pub hnd: Option<u64>,
    pub lnd: Option<u64>,
    pub total_packets: u64,
}

impl LifetimeSummary {
    pub fn stability_period(&self) -> Option<u64> {
        self.fnd
    }

    pub fn unstability_period(&self) -> Option<u64> {
        Some(self.lnd? - self.fnd?)
    }
}

pub fn summarize(records: &[MetricsRecord], node_count: usize) -> Result<LifetimeSummary> {
    if records.is_empty() {
        return Err(Error::Argument("metrics series is empty".into()));
    }
    if let Some((i, r)) = records
        .iter()
        .enumerate()
        .find(|(i, r)| r.round != *i as u64 + 1)
    {
        return Err(Error::Argument(format!(
            "rounds must be consecutive from 1: record {i} has round {}",
            r.round
        )));
    }
    let first = |pred: &dyn Fn(usize) -> bool| records.iter().find(|r| pred(r.alive)).map(|r| r.round);
    Ok(LifetimeSummary {
        fnd: first(&|alive| alive < node_count),
        hnd: first(&|alive| alive <= node_count / 2),
        lnd: first(&|alive| alive == 0),
        total_packets: records.last().map_or(0, |r| r.packets_bs_cum),
    })
}

/// Mean, min and max of one summary field across runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    /// `None` when no run reached the event.
    pub mean: Option<f64>,
    pub min: Option<u64>,
    pub max: Option<u64>,
    /// Runs left out because the event was not reached.
    pub excluded: usize,
}

impl FieldStats {
    pub fn from_values(values: impl IntoIterator<Item = Option<u64>>) -> Self {
        let mut reached = Vec::new();
        let mut excluded = 0;
        for v in values {
            match v {
                Some(v) => reached.push(v),
                None => excluded += 1,
            }
        }
        let mean = if reached.is_empty() {
            None
        } else {
            Some(reached.iter().map(|&v| v as f64).sum::<f64>() / reached.len() as f64)
        };
        Self {
            mean,
            min: reached.iter().copied().min(),
            max: reached.iter().copied().max(),
            excluded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedAggregate {
    pub runs: usize,
    pub fnd: FieldStats,
    pub hnd: FieldStats,
    pub lnd: FieldStats,
    pub unstability: FieldStats,
    pub total_packets: FieldStats,
}

pub fn aggregate_seeds(summaries: &[LifetimeSummary]) -> Result<SeedAggregate> {
    if summaries.is_empty() {
        return Err(Error::Argument("no summaries to aggregate".into()));
    }
    let field = |f: fn(&LifetimeSummary) -> Option<u64>| FieldStats::from_values(summaries.iter().map(f));
    Ok(SeedAggregate {
        runs: summaries.len(),
        fnd: field(|s| s.fnd),
        hnd: field(|s| s.hnd),
        lnd: field(|s| s.lnd),
        unstability: field(|s| s.unstability_period()),
        total_packets: field(|s| Some(s.total_packets)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(alive: &[usize]) -> Vec<MetricsRecord> {
        alive
            .iter()
            .enumerate()
            .map(|(i, &a)| MetricsRecord {
                round: i as u64 + 1,
                alive: a,
                cluster_heads: 0,
                packets_bs_round: 1,
                packets_bs_cum: i as u64 + 1,
                energy_residual_total: 0.0,
                energy_spent_round: 0.0,
            })
            .collect()
    }

    #[test]
    fn hand_trace() {
        let s = summarize(&series(&[3, 3, 2, 1, 0]), 3).unwrap();
        assert_eq!(s.fnd, Some(3));
        assert_eq!(s.hnd, Some(4));
        assert_eq!(s.lnd, Some(5));
        assert_eq!(s.unstability_period(), Some(2));
        assert_eq!(s.stability_period(), Some(3));
        assert_eq!(s.total_packets, 5);
    }

    #[test]
    fn no_deaths() {
        let s = summarize(&series(&[4, 4, 4]), 4).unwrap();
        assert_eq!(s.fnd, None);
        assert_eq!(s.hnd, None);
        assert_eq!(s.lnd, None);
        assert_eq!(s.unstability_period(), None);
    }

    #[test]
    fn sudden_death() {
        let s = summarize(&series(&[5, 5, 0]), 5).unwrap();
        assert_eq!(s.fnd, Some(3));
        assert_eq!(s.lnd, Some(3));
        assert_eq!(s.unstability_period(), Some(0));
    }

    #[test]
    fn half_uses_floor_for_odd_population() {
        // N = 5: half dead once alive <= 2
        let s = summarize(&series(&[5, 4, 3, 2, 1]), 5).unwrap();
        assert_eq!(s.hnd, Some(4));
    }

    #[test]
    fn empty_and_gapped_series_rejected() {
        assert!(summarize(&[], 3).is_err());
        let mut s = series(&[3, 2]);
        s[1].round = 5;
        assert!(summarize(&s, 3).is_err());
    }

    #[test]
    fn aggregate_single_and_pair() {
        let a = LifetimeSummary {
            fnd: Some(10),
            hnd: Some(20),
            lnd: Some(30),
            total_packets: 100,
        };
        let one = aggregate_seeds(&[a]).unwrap();
        assert_eq!(one.fnd.mean, Some(10.0));
        assert_eq!(one.fnd.min, Some(10));
        assert_eq!(one.fnd.max, Some(10));
        assert_eq!(one.unstability.mean, Some(20.0));

        let b = LifetimeSummary {
            fnd: Some(20),
            hnd: None,
            lnd: None,
            total_packets: 50,
        };
        let two = aggregate_seeds(&[a, b]).unwrap();
        assert_eq!(two.fnd.mean, Some(15.0));
        assert_eq!(two.hnd.mean, Some(20.0));
        assert_eq!(two.hnd.excluded, 1);
        assert_eq!(two.lnd.excluded, 1);
        assert_eq!(two.total_packets.mean, Some(75.0));
        assert!(aggregate_seeds(&[]).is_err());
    }
}
