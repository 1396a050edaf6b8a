use std::fmt::{self, Write as _};

use crate::codec::PacketType;
use crate::routing::NodeId;
use crate::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Tx,
    Rx,
    Deliver,
    Drop,
    /// An application action (publish, subscribe, poll, content production).
    App,
    Wake,
    Sleep,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Tx => "tx",
            Direction::Rx => "rx",
            Direction::Deliver => "deliver",
            Direction::Drop => "drop",
            Direction::App => "app",
            Direction::Wake => "wake",
            Direction::Sleep => "sleep",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkRef {
    /// Radio link, endpoints in ascending order.
    Radio(NodeId, NodeId),
    /// The logical one-hop channel to the controller.
    Controller,
}

impl LinkRef {
    pub fn radio(a: NodeId, b: NodeId) -> Self {
        LinkRef::Radio(a.min(b), a.max(b))
    }
}

impl fmt::Display for LinkRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkRef::Radio(a, b) => write!(f, "{a}-{b}"),
            LinkRef::Controller => f.write_str("ctrl"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub direction: Direction,
    pub ptype: Option<PacketType>,
    pub size: usize,
    pub link: Option<LinkRef>,
    /// Pairs a tx record with its rx (or loss) record.
    pub frame: Option<u64>,
    /// Publication counter of the content the record concerns.
    pub content: Option<u32>,
    /// Drop reason or other qualifier.
    pub detail: Option<&'static str>,
}

impl TraceRecord {
    pub fn new(time: SimTime, node: NodeId, direction: Direction) -> Self {
        Self {
            time,
            node,
            direction,
            ptype: None,
            size: 0,
            link: None,
            frame: None,
            content: None,
            detail: None,
        }
    }

    pub fn is_snippet(&self) -> bool {
        self.detail == Some(SNIPPET)
    }
}

pub const SNIPPET: &str = "snippet";

/// Append-only, time-ordered record of one simulation run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<TraceRecord>,
    /// Publications evicted from full controller buffers.
    pub controller_evictions: u64,
}

pub const CSV_HEADER: &str = "time_ms,node,direction,ptype,size,link";

impl Trace {
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.time <= record.time));
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceRecord> {
        self.records.iter()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let ptype = r.ptype.map_or("-", PacketType::as_str);
            let link = r.link.map_or_else(|| "-".to_string(), |l| l.to_string());
            let _ = writeln!(out, "{},{},{},{},{},{}", r.time, r.node, r.direction, ptype, r.size, link);
        }
        out
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a TraceRecord;
    type IntoIter = std::slice::Iter<'a, TraceRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}
