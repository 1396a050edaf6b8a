//! User-experienced latency and aggregated network load, folded from a trace.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::codec::PacketType;
use crate::routing::NodeId;
use crate::simnet::{Direction, LinkRef, Mode, Trace};
use crate::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no deliveries; latency is undefined")]
    NoDeliveries,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &[SimTime]) -> Result<Self, MetricsError> {
        if samples.is_empty() {
            return Err(MetricsError::NoDeliveries);
        }
        let mut v = samples.to_vec();
        v.sort_unstable();
        let n = v.len();
        let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        };
        // Nearest rank.
        let rank = (0.95 * n as f64).ceil() as usize;
        let p95 = v[rank.clamp(1, n) - 1] as f64;
        Ok(Self { count: n, mean, median, p95 })
    }
}

fn content_type(mode: Mode) -> PacketType {
    match mode {
        Mode::PubSub => PacketType::Publish,
        Mode::Pull => PacketType::Data,
    }
}

/// Time each content item was published (pubsub) or made available (pull).
fn publication_times(trace: &Trace, mode: Mode) -> BTreeMap<u32, SimTime> {
    let ptype = content_type(mode);
    let mut out = BTreeMap::new();
    for r in trace {
        if r.direction == Direction::App && r.ptype == Some(ptype) && !r.is_snippet() {
            if let Some(c) = r.content {
                out.entry(c).or_insert(r.time);
            }
        }
    }
    out
}

/// First delivery of each content item at each node.
fn first_deliveries(trace: &Trace, mode: Mode) -> BTreeMap<(NodeId, u32), SimTime> {
    let ptype = content_type(mode);
    let mut out = BTreeMap::new();
    for r in trace {
        if r.direction == Direction::Deliver && r.ptype == Some(ptype) && !r.is_snippet() {
            if let Some(c) = r.content {
                out.entry((r.node, c)).or_insert(r.time);
            }
        }
    }
    out
}

/// One latency sample per (node, item) delivery, in delivery-key order.
pub fn latency_samples(trace: &Trace, mode: Mode) -> Vec<SimTime> {
    let published = publication_times(trace, mode);
    first_deliveries(trace, mode)
        .into_iter()
        .filter_map(|((_, c), t)| published.get(&c).map(|&p| t.saturating_sub(p)))
        .collect()
}

pub fn latency(trace: &Trace, mode: Mode) -> Result<LatencyStats, MetricsError> {
    LatencyStats::from_samples(&latency_samples(trace, mode))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Load {
    pub bytes: u64,
    pub frames: u64,
}

/// Sums tx records on radio links, plus controller sync when `include_sync`.
pub fn network_load(trace: &Trace, include_sync: bool) -> Load {
    let mut load = Load::default();
    for r in trace {
        let counted = match r.link {
            Some(LinkRef::Radio(..)) => true,
            Some(LinkRef::Controller) => include_sync,
            None => false,
        };
        if r.direction == Direction::Tx && counted {
            load.bytes += r.size as u64;
            load.frames += 1;
        }
    }
    load
}

/// Distinct (subscriber, item) deliveries over the number expected.
pub fn delivery_ratio(trace: &Trace, mode: Mode, subscribers: &[NodeId], items: u32) -> f64 {
    let expected = subscribers.len() as u64 * u64::from(items);
    if expected == 0 {
        return 0.0;
    }
    let subs: BTreeSet<_> = subscribers.iter().collect();
    let got = first_deliveries(trace, mode)
        .keys()
        .filter(|(n, _)| subs.contains(n))
        .count() as u64;
    (got as f64 / expected as f64).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub subscribers: usize,
    pub mode: Mode,
    /// `None` when nothing was delivered.
    pub latency: Option<LatencyStats>,
    pub load: Load,
    pub delivery_ratio: f64,
}

impl MetricsReport {
    pub fn from_trace(trace: &Trace, mode: Mode, subscribers: &[NodeId], items: u32, include_sync: bool) -> Self {
        Self {
            subscribers: subscribers.len(),
            mode,
            latency: latency(trace, mode).ok(),
            load: network_load(trace, include_sync),
            delivery_ratio: delivery_ratio(trace, mode, subscribers, items),
        }
    }
}
