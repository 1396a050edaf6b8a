//! Topology, rendezvous-point assignment and centrally computed routing.
//!
//! Routing is a root-oriented shortest-delay tree per root (an RP for the
//! pub/sub plane, a producer for the query plane). Parent choice is
//! deterministic: minimum cumulative delay, ties to the lower parent id.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

use crate::naming::{FaceId, FibTable, Name};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u16);

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    /// One-way propagation delay in milliseconds.
    pub delay: u64,
    /// Independent per-frame loss probability.
    pub loss: f64,
}

impl Link {
    pub fn other(&self, node: NodeId) -> Option<NodeId> {
        if node == self.a {
            Some(self.b)
        } else if node == self.b {
            Some(self.a)
        } else {
            None
        }
    }

    /// Canonical label `lo-hi`.
    pub fn label(&self) -> String {
        let (lo, hi) = if self.a <= self.b { (self.a, self.b) } else { (self.b, self.a) };
        format!("{lo}-{hi}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("topology has no nodes")]
    EmptyTopology,
    #[error("link {0}-{1} references an unknown node")]
    UnknownLinkEndpoint(NodeId, NodeId),
    #[error("self-link on node {0}")]
    SelfLink(NodeId),
    #[error("duplicate link {0}-{1}")]
    DuplicateLink(NodeId, NodeId),
    #[error("link {0}-{1} has non-positive delay")]
    BadDelay(NodeId, NodeId),
    #[error("link {0}-{1} has loss outside [0, 1]")]
    BadLoss(NodeId, NodeId),
    #[error("node {0} is not in the topology")]
    UnknownNode(NodeId),
    #[error("node {0} is unreachable from root {1}")]
    Disconnected(NodeId, NodeId),
    #[error("no CD prefixes to assign")]
    NoPrefixes,
    #[error("no explicit RP for prefix {0}")]
    MissingRp(Name),
    #[error("no node is eligible to host an RP")]
    NoEligibleNode,
}

/// Undirected graph with per-link delay and loss.
///
/// Each node numbers its faces by neighbor: the face towards the i-th
/// neighbor in ascending id order is `FaceId(FaceId::FIRST_LINK + i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: BTreeSet<NodeId>,
    links: Vec<Link>,
    neighbors: BTreeMap<NodeId, Vec<(NodeId, usize)>>,
}

impl Topology {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>, links: Vec<Link>) -> Result<Self, RoutingError> {
        let nodes: BTreeSet<NodeId> = nodes.into_iter().collect();
        if nodes.is_empty() {
            return Err(RoutingError::EmptyTopology);
        }
        let mut neighbors: BTreeMap<NodeId, Vec<(NodeId, usize)>> =
            nodes.iter().map(|n| (*n, Vec::new())).collect();
        let mut seen = BTreeSet::new();
        for (idx, l) in links.iter().enumerate() {
            if !nodes.contains(&l.a) || !nodes.contains(&l.b) {
                return Err(RoutingError::UnknownLinkEndpoint(l.a, l.b));
            }
            if l.a == l.b {
                return Err(RoutingError::SelfLink(l.a));
            }
            if l.delay == 0 {
                return Err(RoutingError::BadDelay(l.a, l.b));
            }
            if !(0.0..=1.0).contains(&l.loss) {
                return Err(RoutingError::BadLoss(l.a, l.b));
            }
            if !seen.insert((l.a.min(l.b), l.a.max(l.b))) {
                return Err(RoutingError::DuplicateLink(l.a, l.b));
            }
            neighbors.get_mut(&l.a).unwrap().push((l.b, idx));
            neighbors.get_mut(&l.b).unwrap().push((l.a, idx));
        }
        for adj in neighbors.values_mut() {
            adj.sort();
        }
        Ok(Self { nodes, links, neighbors })
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.neighbors.get(&node).map_or(0, Vec::len)
    }

    /// Neighbors of `node` in ascending id order.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbors.get(&node).into_iter().flatten().map(|(n, _)| *n)
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<&Link> {
        self.neighbors
            .get(&a)?
            .iter()
            .find(|(n, _)| *n == b)
            .map(|(_, idx)| &self.links[*idx])
    }

    pub fn face_to(&self, node: NodeId, neighbor: NodeId) -> Option<FaceId> {
        let pos = self.neighbors.get(&node)?.iter().position(|(n, _)| *n == neighbor)?;
        Some(FaceId(FaceId::FIRST_LINK + pos as u32))
    }

    /// The neighbor reached through `face`, and the link used.
    pub fn via_face(&self, node: NodeId, face: FaceId) -> Option<(NodeId, &Link)> {
        let idx = face.0.checked_sub(FaceId::FIRST_LINK)? as usize;
        let (n, link) = self.neighbors.get(&node)?.get(idx)?;
        Some((*n, &self.links[*link]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RpPolicy {
    Explicit(BTreeMap<Name, NodeId>),
    MaxDegree,
    /// Prefer nodes without a sleep schedule; fall back to max-degree over
    /// all nodes unless `strict`.
    AlwaysAwakePreferred { strict: bool },
}

/// CD prefix to the node hosting its rendezvous point.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RpAssignment {
    pub table: BTreeMap<Name, NodeId>,
}

impl RpAssignment {
    pub fn rp_for(&self, prefix: &Name) -> Option<NodeId> {
        self.table.get(prefix).copied()
    }
}

fn max_degree(topology: &Topology, candidates: impl Iterator<Item = NodeId>) -> Option<NodeId> {
    // Highest degree, then lowest id.
    candidates.max_by_key(|n| (topology.degree(*n), Reverse(*n)))
}

pub fn assign_rp(
    topology: &Topology,
    cd_prefixes: &[Name],
    policy: &RpPolicy,
    sleepers: &BTreeSet<NodeId>,
) -> Result<RpAssignment, RoutingError> {
    if cd_prefixes.is_empty() {
        return Err(RoutingError::NoPrefixes);
    }
    let mut table = BTreeMap::new();
    for prefix in cd_prefixes {
        let node = match policy {
            RpPolicy::Explicit(explicit) => {
                let node = *explicit
                    .get(prefix)
                    .ok_or_else(|| RoutingError::MissingRp(prefix.clone()))?;
                if !topology.contains(node) {
                    return Err(RoutingError::UnknownNode(node));
                }
                node
            }
            RpPolicy::MaxDegree => max_degree(topology, topology.nodes().iter().copied())
                .ok_or(RoutingError::NoEligibleNode)?,
            RpPolicy::AlwaysAwakePreferred { strict } => {
                let awake = topology.nodes().iter().copied().filter(|n| !sleepers.contains(n));
                match max_degree(topology, awake) {
                    Some(n) => n,
                    None if *strict => return Err(RoutingError::NoEligibleNode),
                    None => max_degree(topology, topology.nodes().iter().copied())
                        .ok_or(RoutingError::NoEligibleNode)?,
                }
            }
        };
        table.insert(prefix.clone(), node);
    }
    Ok(RpAssignment { table })
}

/// Parent table of the shortest-delay tree rooted at `root`; the root is its
/// own parent.
pub fn build_tree(topology: &Topology, root: NodeId) -> Result<BTreeMap<NodeId, NodeId>, RoutingError> {
    if !topology.contains(root) {
        return Err(RoutingError::UnknownNode(root));
    }
    let mut dist: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, root)));
    while let Some(Reverse((d, n))) = heap.pop() {
        if dist.contains_key(&n) {
            continue;
        }
        dist.insert(n, d);
        for m in topology.neighbors(n) {
            if !dist.contains_key(&m) {
                let w = topology.link_between(n, m).expect("neighbor has link").delay;
                heap.push(Reverse((d + w, m)));
            }
        }
    }
    if let Some(missing) = topology.nodes().iter().find(|n| !dist.contains_key(n)) {
        return Err(RoutingError::Disconnected(*missing, root));
    }
    let mut parents = BTreeMap::new();
    for &n in topology.nodes() {
        if n == root {
            parents.insert(n, n);
            continue;
        }
        // Neighbors come in ascending order, so the first optimal one is the lowest id.
        let parent = topology
            .neighbors(n)
            .find(|m| dist[m] + topology.link_between(*m, n).unwrap().delay == dist[&n])
            .expect("some neighbor lies on a shortest path");
        parents.insert(n, parent);
    }
    Ok(parents)
}

/// Installs, on every node, routes towards each RP (for CD prefixes) and
/// towards each producer (for content prefixes). The producer itself routes
/// its prefix to its local producer face.
pub fn install_fibs(
    topology: &Topology,
    rp: &RpAssignment,
    producer_prefixes: &BTreeMap<Name, NodeId>,
) -> Result<BTreeMap<NodeId, FibTable>, RoutingError> {
    let mut fibs: BTreeMap<NodeId, FibTable> =
        topology.nodes().iter().map(|n| (*n, FibTable::new())).collect();
    let mut trees: BTreeMap<NodeId, BTreeMap<NodeId, NodeId>> = BTreeMap::new();
    let mut tree_for = |root: NodeId| -> Result<BTreeMap<NodeId, NodeId>, RoutingError> {
        if let Some(t) = trees.get(&root) {
            return Ok(t.clone());
        }
        let t = build_tree(topology, root)?;
        trees.insert(root, t.clone());
        Ok(t)
    };
    let mut install = |prefix: &Name, root: NodeId, local: Option<FaceId>| -> Result<(), RoutingError> {
        let parents = tree_for(root)?;
        for (&n, &parent) in &parents {
            let face = if n == root {
                match local {
                    Some(f) => f,
                    None => continue,
                }
            } else {
                topology.face_to(n, parent).expect("tree edges are links")
            };
            fibs.get_mut(&n).unwrap().insert(prefix, face);
        }
        Ok(())
    };
    for (prefix, &node) in &rp.table {
        install(prefix, node, None)?;
    }
    for (prefix, &node) in producer_prefixes {
        if !topology.contains(node) {
            return Err(RoutingError::UnknownNode(node));
        }
        install(prefix, node, Some(FaceId::PRODUCER))?;
    }
    Ok(fibs)
}
