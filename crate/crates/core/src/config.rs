//! Experiment configuration: a line-oriented `key = value` format with
//! `[section]` headers and `#` comments.
//!
//! ```text
//! [topology]
//! link = 1 2 10 0.0        # a b delay_ms loss
//! rp = max-degree          # max-degree | always-awake | always-awake-strict | node <id>
//!
//! [catalog]
//! root = /iot
//! kinds = 10
//! pull_prefix = /data
//!
//! [workload]               # repeatable, one distribution each
//! dist = zipf
//! param = 1.0
//!
//! [run]
//! mode = both              # pubsub | pull | both
//! publisher = 1
//! subscribers = 1..9       # sweep of counts, or `ids 4 5 8`
//! seeds = 1..5
//! ```
//!
//! Every problem found is reported, each naming the `section.key` it concerns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::EngineConfig;
use crate::naming::Name;
use crate::routing::{self, Link, NodeId, RpPolicy, Topology};
use crate::simnet::{ControllerConfig, Mode, Scenario};
use crate::traffic::{ContentCatalog, Distribution};
use crate::SimTime;

/// The reconstructed nine-node evaluation setup shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../paper.cfg");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigIssue {
    Parse { line: usize, message: String },
    Validation { key: String, message: String },
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigIssue::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigIssue::Validation { key, message } => write!(f, "{key}: {message}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Invalid(v) => v,
            ConfigError::Io { .. } => &[],
        }
    }

    /// True if some issue names `key` (either `section.key` or bare `key`).
    pub fn mentions(&self, key: &str) -> bool {
        self.issues().iter().any(|i| match i {
            ConfigIssue::Validation { key: k, .. } => k == key || k.rsplit('.').next() == Some(key),
            ConfigIssue::Parse { message, .. } => message.contains(key),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubscriberSpec {
    /// Subscriber counts `from..=to`, filled in sweep order.
    Sweep { from: usize, to: usize },
    Fixed(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub rp_policy: RpPolicy,
    pub catalog: ContentCatalog,
    pub pull_prefix: Name,
    pub workloads: Vec<Distribution>,
    pub modes: Vec<Mode>,
    pub publisher: NodeId,
    pub subscribers: SubscriberSpec,
    pub publications: u32,
    pub publish_interval: SimTime,
    pub start: SimTime,
    pub poll_interval: SimTime,
    pub poll_phase: Option<SimTime>,
    pub sleep: BTreeMap<NodeId, Vec<(SimTime, SimTime)>>,
    pub controller: ControllerConfig,
    pub include_sync: bool,
    pub engine: EngineConfig,
    pub seeds: Vec<u64>,
    pub horizon: SimTime,
}

impl ExperimentConfig {
    /// Nodes in the order a subscriber sweep adds them: every other node
    /// ascending, then the publisher's own node.
    pub fn sweep_order(&self) -> Vec<NodeId> {
        let mut order: Vec<_> = self.topology.nodes().iter().copied().filter(|n| *n != self.publisher).collect();
        order.push(self.publisher);
        order
    }

    pub fn subscriber_sets(&self) -> Vec<Vec<NodeId>> {
        match &self.subscribers {
            SubscriberSpec::Fixed(ids) => vec![ids.clone()],
            SubscriberSpec::Sweep { from, to } => {
                let order = self.sweep_order();
                (*from..=*to).map(|n| order[..n].to_vec()).collect()
            }
        }
    }

    pub fn scenario(&self, distribution: Distribution, mode: Mode, subscribers: Vec<NodeId>) -> Scenario {
        Scenario {
            topology: self.topology.clone(),
            rp_policy: self.rp_policy.clone(),
            catalog: self.catalog.clone(),
            pull_prefix: self.pull_prefix.clone(),
            distribution,
            mode,
            publisher: self.publisher,
            subscribers,
            publications: self.publications,
            publish_interval: self.publish_interval,
            start: self.start,
            poll_interval: self.poll_interval,
            poll_phase: self.poll_phase,
            sleep: self.sleep.clone(),
            controller: self.controller,
            engine: self.engine,
            horizon: self.horizon,
        }
    }

    pub fn default_config() -> Self {
        parse_config(DEFAULT_CONFIG).expect("shipped default config is valid")
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

struct Entry {
    line: usize,
    value: String,
}

/// Raw entries per section instance; `[workload]` may appear several times.
#[derive(Default)]
struct Raw {
    sections: BTreeMap<String, BTreeMap<String, Vec<Entry>>>,
    workloads: Vec<BTreeMap<String, Vec<Entry>>>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("topology", &["nodes", "link", "rp"]),
    ("catalog", &["root", "kinds", "pull_prefix"]),
    ("workload", &["dist", "param"]),
    (
        "run",
        &[
            "mode",
            "publisher",
            "subscribers",
            "publications",
            "publish_interval",
            "start",
            "poll_interval",
            "poll_phase",
            "seeds",
            "horizon",
        ],
    ),
    ("sleep", &["window"]),
    ("controller", &["enabled", "buffer", "include_sync"]),
    ("engine", &["pit_lifetime", "cs_capacity", "dedup_window"]),
];
const REPEATABLE: &[&str] = &["link", "window"];

fn lex(text: &str, issues: &mut Vec<ConfigIssue>) -> Raw {
    let mut raw = Raw::default();
    let mut section: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut perr = |message: String| issues.push(ConfigIssue::Parse { line: line_no, message });
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if KEYS.iter().any(|(s, _)| *s == name) {
                if name == "workload" {
                    raw.workloads.push(BTreeMap::new());
                }
                section = Some(name.to_string());
            } else {
                perr(format!("unknown section [{name}]"));
                section = None;
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            perr(format!("expected `key = value`, got {line:?}"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.as_deref() else {
            perr(format!("key `{key}` outside a known section"));
            continue;
        };
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map_or(&[][..], |(_, k)| k);
        if !allowed.contains(&key) {
            perr(format!("unknown key `{sec}.{key}`"));
            continue;
        }
        let map = if sec == "workload" {
            raw.workloads.last_mut().expect("pushed on section header")
        } else {
            raw.sections.entry(sec.to_string()).or_default()
        };
        let slot = map.entry(key.to_string()).or_default();
        if !slot.is_empty() && !REPEATABLE.contains(&key) {
            perr(format!("duplicate key `{sec}.{key}`"));
            continue;
        }
        slot.push(Entry {
            line: line_no,
            value: value.to_string(),
        });
    }
    raw
}

struct Ctx {
    issues: Vec<ConfigIssue>,
}

impl Ctx {
    fn invalid(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue::Validation {
            key: key.to_string(),
            message: message.into(),
        });
    }

    /// Parses a scalar value, recording an issue and returning `None` on failure.
    fn parse<T: FromStr>(&mut self, key: &str, entry: &Entry) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        match entry.value.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.invalid(key, format!("line {}: cannot parse {:?}: {e}", entry.line, entry.value));
                None
            }
        }
    }
}

fn get<'a>(map: Option<&'a BTreeMap<String, Vec<Entry>>>, key: &str) -> Option<&'a Entry> {
    map.and_then(|m| m.get(key)).and_then(|v| v.first())
}

fn all<'a>(map: Option<&'a BTreeMap<String, Vec<Entry>>>, key: &str) -> &'a [Entry] {
    map.and_then(|m| m.get(key)).map_or(&[], Vec::as_slice)
}

/// `a..b` (inclusive) or a whitespace-separated list.
fn parse_list<T>(s: &str) -> Result<Vec<T>, String>
where
    T: FromStr + Copy + Into<u64> + TryFrom<u64>,
    T::Err: fmt::Display,
{
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return (a..=b).map(|x| T::try_from(x).map_err(|_| format!("{x} out of range"))).collect();
    }
    s.split_whitespace().map(|t| t.parse::<T>().map_err(|e| format!("{t:?}: {e}"))).collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got {s:?}")),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut issues = Vec::new();
    let raw = lex(text, &mut issues);
    let mut cx = Ctx { issues };
    let sec = |s: &str| raw.sections.get(s);

    // [topology]
    let topo_sec = sec("topology");
    let mut links = Vec::new();
    for e in all(topo_sec, "link") {
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            [a, b, d, l] => (|| Some(Link {
                a: NodeId(a.parse().ok()?),
                b: NodeId(b.parse().ok()?),
                delay: d.parse().ok()?,
                loss: l.parse().ok()?,
            }))(),
            _ => None,
        };
        match parsed {
            Some(link) => links.push(link),
            None => cx.invalid("topology.link", format!("line {}: expected `a b delay_ms loss`, got {:?}", e.line, e.value)),
        }
    }
    let mut nodes: BTreeSet<NodeId> = links.iter().flat_map(|l| [l.a, l.b]).collect();
    if let Some(e) = get(topo_sec, "nodes") {
        match parse_list::<u16>(&e.value) {
            Ok(ids) => nodes.extend(ids.into_iter().map(NodeId)),
            Err(m) => cx.invalid("topology.nodes", m),
        }
    }
    let topology = match Topology::new(nodes, links) {
        Ok(t) => Some(t),
        Err(e) => {
            cx.invalid("topology.link", e.to_string());
            None
        }
    };
    let node_ok = |n: NodeId| topology.as_ref().is_none_or(|t| t.contains(n));

    // [catalog]
    let cat_sec = sec("catalog");
    let root: Name = match get(cat_sec, "root") {
        Some(e) => cx.parse("catalog.root", e),
        None => "/iot".parse().ok(),
    }
    .unwrap_or_else(|| "/iot".parse().expect("literal"));
    let pull_prefix: Name = match get(cat_sec, "pull_prefix") {
        Some(e) => cx.parse("catalog.pull_prefix", e),
        None => "/data".parse().ok(),
    }
    .unwrap_or_else(|| "/data".parse().expect("literal"));
    let kinds: usize = get(cat_sec, "kinds").and_then(|e| cx.parse("catalog.kinds", e)).unwrap_or(10);
    let catalog = match ContentCatalog::standard(root.clone(), kinds) {
        Ok(c) => match c.check_mtu(&pull_prefix) {
            Ok(()) => Some(c),
            Err(e) => {
                cx.invalid("catalog.kinds", e.to_string());
                None
            }
        },
        Err(e) => {
            cx.invalid("catalog.kinds", e.to_string());
            None
        }
    };

    // [workload]*
    let mut workloads = Vec::new();
    if raw.workloads.is_empty() {
        cx.invalid("workload", "at least one [workload] section is required");
    }
    for w in &raw.workloads {
        let Some(dist) = get(Some(w), "dist") else {
            cx.invalid("workload.dist", "missing");
            continue;
        };
        let param = match get(Some(w), "param") {
            Some(e) => match cx.parse::<f64>("workload.param", e) {
                Some(p) => Some(p),
                None => continue,
            },
            None => None,
        };
        match Distribution::from_kind(&dist.value, param) {
            Ok(d) => workloads.push(d),
            Err(e) => {
                let key = if param.is_some() && ["zipf", "geometric", "uniform", "binomial"].contains(&dist.value.as_str()) {
                    "workload.param"
                } else {
                    "workload.dist"
                };
                cx.invalid(key, format!("line {}: {e}", dist.line));
            }
        }
    }

    // [run]
    let run = sec("run");
    let modes = match get(run, "mode").map(|e| e.value.as_str()) {
        None | Some("both") => vec![Mode::PubSub, Mode::Pull],
        Some("pubsub") => vec![Mode::PubSub],
        Some("pull") => vec![Mode::Pull],
        Some(other) => {
            cx.invalid("run.mode", format!("expected pubsub, pull or both, got {other:?}"));
            Vec::new()
        }
    };
    let publisher = match get(run, "publisher") {
        Some(e) => cx.parse::<u16>("run.publisher", e).map(NodeId),
        None => {
            cx.invalid("run.publisher", "missing");
            None
        }
    };
    if let Some(p) = publisher {
        if !node_ok(p) {
            cx.invalid("run.publisher", format!("node {p} is not in the topology"));
        } else if p.0 > u16::from(u8::MAX) {
            cx.invalid("run.publisher", "publisher id must be at most 255");
        }
    }
    let node_count = topology.as_ref().map_or(0, |t| t.nodes().len());
    let subscribers = match get(run, "subscribers") {
        None => {
            cx.invalid("run.subscribers", "missing");
            None
        }
        Some(e) => {
            if let Some(ids) = e.value.strip_prefix("ids") {
                match parse_list::<u16>(ids.trim()) {
                    Ok(ids) if ids.is_empty() => {
                        cx.invalid("run.subscribers", "empty subscriber list");
                        None
                    }
                    Ok(ids) => {
                        let ids: Vec<NodeId> = ids.into_iter().map(NodeId).collect();
                        for &n in &ids {
                            if !node_ok(n) {
                                cx.invalid("run.subscribers", format!("node {n} is not in the topology"));
                            }
                        }
                        if ids.iter().collect::<BTreeSet<_>>().len() != ids.len() {
                            cx.invalid("run.subscribers", "duplicate subscriber id");
                        }
                        Some(SubscriberSpec::Fixed(ids))
                    }
                    Err(m) => {
                        cx.invalid("run.subscribers", m);
                        None
                    }
                }
            } else {
                let (a, b) = e.value.split_once("..").unwrap_or((&e.value, &e.value));
                match (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
                    (Ok(from), Ok(to)) if from >= 1 && from <= to => {
                        if topology.is_some() && to > node_count {
                            cx.invalid(
                                "run.subscribers",
                                format!("sweep up to {to} exceeds the {node_count} nodes of the topology"),
                            );
                        }
                        Some(SubscriberSpec::Sweep { from, to })
                    }
                    _ => {
                        cx.invalid(
                            "run.subscribers",
                            format!("expected a count range `a..b` with 1 <= a <= b or `ids ...`, got {:?}", e.value),
                        );
                        None
                    }
                }
            }
        }
    };
    let num = |cx: &mut Ctx, key: &str, default: u64| -> u64 {
        get(run, key).and_then(|e| cx.parse(&format!("run.{key}"), e)).unwrap_or(default)
    };
    let publications = num(&mut cx, "publications", 100);
    let publish_interval = num(&mut cx, "publish_interval", 1000);
    let start = num(&mut cx, "start", 1000);
    let poll_interval = num(&mut cx, "poll_interval", 1000);
    let publications = match u32::try_from(publications) {
        Ok(p) if p <= crate::codec::PublicationId::MAX_COUNTER => p,
        _ => {
            cx.invalid("run.publications", "too many publications");
            0
        }
    };
    if publish_interval == 0 {
        cx.invalid("run.publish_interval", "must be positive");
    }
    if poll_interval == 0 {
        cx.invalid("run.poll_interval", "must be positive");
    }
    let poll_phase = match get(run, "poll_phase") {
        None => None,
        Some(e) if e.value == "random" => None,
        Some(e) => {
            let p: Option<SimTime> = cx.parse("run.poll_phase", e);
            if p.is_some_and(|p| poll_interval > 0 && p >= poll_interval) {
                cx.invalid("run.poll_phase", "must be below the poll interval");
            }
            p
        }
    };
    let seeds = match get(run, "seeds") {
        None => vec![1],
        Some(e) => match parse_list::<u64>(&e.value) {
            Ok(s) if !s.is_empty() => s,
            Ok(_) => {
                cx.invalid("run.seeds", "at least one seed is required");
                Vec::new()
            }
            Err(m) => {
                cx.invalid("run.seeds", m);
                Vec::new()
            }
        },
    };
    let default_horizon = start + u64::from(publications) * publish_interval + 5000;
    let horizon = get(run, "horizon").and_then(|e| cx.parse("run.horizon", e)).unwrap_or(default_horizon);

    // [sleep]
    let mut sleep: BTreeMap<NodeId, Vec<(SimTime, SimTime)>> = BTreeMap::new();
    for e in all(sec("sleep"), "window") {
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            [n, a, b] => (|| Some((NodeId(n.parse().ok()?), a.parse().ok()?, b.parse().ok()?)))(),
            _ => None,
        };
        match parsed {
            Some((n, a, b)) if a < b && node_ok(n) => sleep.entry(n).or_default().push((a, b)),
            Some((n, _, _)) if !node_ok(n) => cx.invalid("sleep.window", format!("node {n} is not in the topology")),
            _ => cx.invalid("sleep.window", format!("line {}: expected `node from_ms until_ms` with from < until", e.line)),
        }
    }

    // [topology] rp, resolved once the catalog root is known.
    let rp_policy = match get(topo_sec, "rp").map(|e| e.value.as_str()) {
        None | Some("max-degree") => Some(RpPolicy::MaxDegree),
        Some("always-awake") => Some(RpPolicy::AlwaysAwakePreferred { strict: false }),
        Some("always-awake-strict") => Some(RpPolicy::AlwaysAwakePreferred { strict: true }),
        Some(v) => match v.strip_prefix("node").map(|n| n.trim().parse::<u16>()) {
            Some(Ok(n)) if node_ok(NodeId(n)) => Some(RpPolicy::Explicit(BTreeMap::from([(root.clone(), NodeId(n))]))),
            Some(Ok(n)) => {
                cx.invalid("topology.rp", format!("node {n} is not in the topology"));
                None
            }
            _ => {
                cx.invalid("topology.rp", format!("unknown policy {v:?}"));
                None
            }
        },
    };
    if let (Some(t), Some(policy)) = (&topology, &rp_policy) {
        let sleepers = sleep.keys().copied().collect();
        if let Err(e) = routing::assign_rp(t, std::slice::from_ref(&root), policy, &sleepers) {
            cx.invalid("topology.rp", e.to_string());
        }
        if let Some(&first) = t.nodes().iter().next() {
            if let Err(e) = routing::build_tree(t, first) {
                cx.invalid("topology.link", e.to_string());
            }
        }
    }

    // [controller], [engine]
    let ctl = sec("controller");
    let flag = |cx: &mut Ctx, key: &str| -> bool {
        get(ctl, key).is_some_and(|e| match parse_bool(&e.value) {
            Ok(b) => b,
            Err(m) => {
                cx.invalid(&format!("controller.{key}"), m);
                false
            }
        })
    };
    let enabled = flag(&mut cx, "enabled");
    let include_sync = flag(&mut cx, "include_sync");
    let buffer_capacity = get(ctl, "buffer")
        .and_then(|e| cx.parse("controller.buffer", e))
        .unwrap_or(ControllerConfig::default().buffer_capacity);
    let eng = sec("engine");
    let d = EngineConfig::default();
    let engine = EngineConfig {
        pit_lifetime: get(eng, "pit_lifetime").and_then(|e| cx.parse("engine.pit_lifetime", e)).unwrap_or(d.pit_lifetime),
        cs_capacity: get(eng, "cs_capacity").and_then(|e| cx.parse("engine.cs_capacity", e)).unwrap_or(d.cs_capacity),
        dedup_window: get(eng, "dedup_window").and_then(|e| cx.parse("engine.dedup_window", e)).unwrap_or(d.dedup_window),
    };

    if !cx.issues.is_empty() {
        return Err(ConfigError::Invalid(cx.issues));
    }
    let missing = "validated above";
    Ok(ExperimentConfig {
        topology: topology.expect(missing),
        rp_policy: rp_policy.expect(missing),
        catalog: catalog.expect(missing),
        pull_prefix,
        workloads,
        modes,
        publisher: publisher.expect(missing),
        subscribers: subscribers.expect(missing),
        publications,
        publish_interval,
        start,
        poll_interval,
        poll_phase,
        sleep,
        controller: ControllerConfig { enabled, buffer_capacity },
        include_sync,
        engine,
        seeds,
        horizon,
    })
}
