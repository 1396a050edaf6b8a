//! Random small networks and packet scripts, and a driver that plays a
//! script through any set of per-node forwarders.

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;

use copsslite::codec::{Data, Interest, Packet, PublicationId, Publish};
use copsslite::engine::{Action, EngineConfig, NodeState};
use copsslite::naming::{ContentDescriptor, FaceId, FibTable, Name};
use copsslite::routing::{self, Link, NodeId, RpAssignment, Topology};
use rand::seq::SliceRandom;
use rand::Rng;

use super::reference::RefNode;

pub fn name(s: &str) -> Name {
    s.parse().unwrap()
}

pub fn cd(s: &str) -> ContentDescriptor {
    s.parse().unwrap()
}

pub trait Forwarder {
    fn handle(&mut self, in_face: FaceId, packet: Packet, now: u64) -> Vec<Action>;
    fn power_down(&mut self);
    fn wake(&mut self);
}

impl Forwarder for NodeState {
    fn handle(&mut self, in_face: FaceId, packet: Packet, now: u64) -> Vec<Action> {
        NodeState::handle(self, in_face, packet, now)
    }
    fn power_down(&mut self) {
        NodeState::power_down(self)
    }
    fn wake(&mut self) {
        self.awake = true;
    }
}

impl Forwarder for RefNode {
    fn handle(&mut self, in_face: FaceId, packet: Packet, now: u64) -> Vec<Action> {
        RefNode::handle(self, in_face, packet, now)
    }
    fn power_down(&mut self) {
        RefNode::power_down(self)
    }
    fn wake(&mut self) {
        self.awake = true;
    }
}

#[derive(Debug, Clone)]
pub enum Step {
    Inject { node: NodeId, face: FaceId, packet: Packet },
    PowerDown(NodeId),
    Wake(NodeId),
}

#[derive(Debug, Clone)]
pub struct World {
    pub topology: Topology,
    pub rp: RpAssignment,
    pub fibs: BTreeMap<NodeId, FibTable>,
    pub config: EngineConfig,
    pub script: Vec<(u64, Step)>,
}

pub const NAMES: &[&str] = &["/d", "/d/1", "/d/2", "/d/2/3", "/a/x", "/q"];
pub const CDS: &[&str] = &["/a", "/a/x", "/a/y", "/b", "/b/z", "/c"];

pub fn random_topology<R: Rng>(rng: &mut R, max_nodes: u16) -> Topology {
    let n = rng.gen_range(1..=max_nodes);
    let mut links = Vec::new();
    let delay = |rng: &mut R| rng.gen_range(1..=20);
    for i in 2..=n {
        let parent = rng.gen_range(1..i);
        let d = delay(rng);
        links.push(Link { a: NodeId(parent), b: NodeId(i), delay: d, loss: 0.0 });
    }
    for a in 1..=n {
        for b in a + 1..=n {
            let exists = links.iter().any(|l| (l.a.0, l.b.0) == (a, b) || (l.a.0, l.b.0) == (b, a));
            if !exists && rng.gen_bool(0.25) {
                let d = delay(rng);
                links.push(Link { a: NodeId(a), b: NodeId(b), delay: d, loss: 0.0 });
            }
        }
    }
    Topology::new((1..=n).map(NodeId), links).unwrap()
}

fn random_packet<R: Rng>(rng: &mut R) -> Packet {
    match rng.gen_range(0..10) {
        0..=2 => Packet::Interest(Interest {
            name: name(NAMES.choose(rng).unwrap()),
            nonce: rng.gen(),
            hop_limit: rng.gen_range(0..=16),
        }),
        3 => Packet::Data(Data {
            name: name(NAMES.choose(rng).unwrap()),
            payload: vec![rng.gen(); rng.gen_range(0..8)],
        }),
        4..=5 => Packet::Subscribe { cd: cd(CDS.choose(rng).unwrap()) },
        6 => Packet::Unsubscribe { cd: cd(CDS.choose(rng).unwrap()) },
        _ => {
            let k = rng.gen_range(1..=3);
            Packet::Publish(Publish {
                cds: (0..k).map(|_| cd(CDS.choose(rng).unwrap())).collect(),
                payload: vec![rng.gen(); rng.gen_range(0..8)],
                snippet: rng.gen_bool(0.2),
                seq: PublicationId::new(rng.gen_range(1..=3), rng.gen_range(1..=6)).seq(),
            })
        }
    }
}

/// A random network of at most `max_nodes` nodes with RPs for `/a` and
/// `/b`, a producer for `/d`, an occasional extra multi-face FIB entry, and
/// a script of at most `max_steps` injections and power changes.
pub fn random_world<R: Rng>(rng: &mut R, max_nodes: u16, max_steps: usize) -> World {
    let topology = random_topology(rng, max_nodes);
    let nodes: Vec<NodeId> = topology.nodes().iter().copied().collect();
    let rp = RpAssignment {
        table: BTreeMap::from([
            (name("/a"), *nodes.choose(rng).unwrap()),
            (name("/b"), *nodes.choose(rng).unwrap()),
        ]),
    };
    let producers = BTreeMap::from([(name("/d"), *nodes.choose(rng).unwrap())]);
    let mut fibs = routing::install_fibs(&topology, &rp, &producers).unwrap();
    for &n in &nodes {
        let deg = topology.degree(n) as u32;
        if deg >= 2 && rng.gen_bool(0.3) {
            let fib = fibs.get_mut(&n).unwrap();
            fib.insert(&name("/d/2"), FaceId(2));
            fib.insert(&name("/d/2"), FaceId(2 + rng.gen_range(1..deg)));
        }
    }
    let config = EngineConfig {
        pit_lifetime: rng.gen_range(50..=4000),
        cs_capacity: rng.gen_range(0..=3),
        dedup_window: rng.gen_range(0..=6),
    };
    let mut t = 0;
    let mut script = Vec::new();
    for _ in 0..rng.gen_range(1..=max_steps) {
        t += rng.gen_range(0..=1500);
        let node = *nodes.choose(rng).unwrap();
        let step = match rng.gen_range(0..20) {
            0 => Step::PowerDown(node),
            1 => Step::Wake(node),
            _ => {
                let deg = topology.degree(node) as u32;
                let face = match rng.gen_range(0..10) {
                    0..=3 => FaceId::APP,
                    4..=6 => FaceId::PRODUCER,
                    7 if deg == 0 => FaceId(2),
                    7 => FaceId(2 + deg),
                    _ if deg == 0 => FaceId::APP,
                    _ => FaceId(2 + rng.gen_range(0..deg)),
                };
                Step::Inject { node, face, packet: random_packet(rng) }
            }
        };
        script.push((t, step));
    }
    World { topology, rp, fibs, config, script }
}

impl World {
    pub fn rp_for(&self, node: NodeId) -> Vec<Name> {
        self.rp.table.iter().filter(|(_, n)| **n == node).map(|(p, _)| p.clone()).collect()
    }

    pub fn engines(&self) -> BTreeMap<NodeId, NodeState> {
        self.topology
            .nodes()
            .iter()
            .map(|&n| {
                let mut s = NodeState::new(n, self.fibs[&n].clone(), self.config);
                s.is_rp_for = self.rp_for(n).into_iter().map(ContentDescriptor::new).collect();
                (n, s)
            })
            .collect()
    }

    pub fn references(&self) -> BTreeMap<NodeId, RefNode> {
        self.topology
            .nodes()
            .iter()
            .map(|&n| {
                let fib = self.fibs[&n]
                    .entries()
                    .into_iter()
                    .map(|(p, faces)| (p, faces.into_iter().map(|f| f.0).collect()))
                    .collect();
                let r = RefNode::new(
                    fib,
                    self.rp_for(n),
                    self.config.cs_capacity,
                    self.config.pit_lifetime,
                    self.config.dedup_window,
                );
                (n, r)
            })
            .collect()
    }
}

/// One handled packet: when, where, from which face, and what came out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Handled {
    pub time: u64,
    pub node: NodeId,
    pub in_face: FaceId,
    pub packet: Packet,
    pub actions: Vec<Action>,
}

/// Plays `script` through the forwarders, carrying every Transmit across
/// the topology. Stops after `max_events` handled packets.
pub fn drive<F: Forwarder>(
    topology: &Topology,
    nodes: &mut BTreeMap<NodeId, F>,
    script: &[(u64, Step)],
    max_events: usize,
) -> Vec<Handled> {
    let mut queue = BinaryHeap::new();
    let mut seq = 0u64;
    for (t, step) in script {
        queue.push(Reverse((*t, seq, StepKey(step.clone()))));
        seq += 1;
    }
    let mut log = Vec::new();
    while let Some(Reverse((now, _, StepKey(step)))) = queue.pop() {
        match step {
            Step::PowerDown(n) => nodes.get_mut(&n).unwrap().power_down(),
            Step::Wake(n) => nodes.get_mut(&n).unwrap().wake(),
            Step::Inject { node, face, packet } => {
                if log.len() >= max_events {
                    break;
                }
                let actions = nodes.get_mut(&node).unwrap().handle(face, packet.clone(), now);
                for a in &actions {
                    // A local producer answers any Interest handed to it.
                    if let Action::DeliverLocal { packet: Packet::Interest(i) } = a {
                        let data = Data { name: i.name.clone(), payload: vec![i.name.len() as u8; 3] };
                        let step = Step::Inject { node, face: FaceId::PRODUCER, packet: Packet::Data(data) };
                        queue.push(Reverse((now + 1, seq, StepKey(step))));
                        seq += 1;
                    }
                    if let Action::Transmit { face, packet } = a {
                        if let Some((peer, link)) = topology.via_face(node, *face) {
                            let in_face = topology.face_to(peer, node).unwrap();
                            let step = Step::Inject { node: peer, face: in_face, packet: packet.clone() };
                            queue.push(Reverse((now + link.delay, seq, StepKey(step))));
                            seq += 1;
                        }
                    }
                }
                log.push(Handled { time: now, node, in_face: face, packet, actions });
            }
        }
    }
    log
}

/// Orders queue entries by (time, seq) only.
#[derive(Debug, Clone)]
struct StepKey(Step);

impl PartialEq for StepKey {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for StepKey {}
impl PartialOrd for StepKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for StepKey {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

/// Runs one world through both implementations; returns the first
/// divergence, if any.
pub fn compare(world: &World, max_events: usize) -> Result<usize, String> {
    let mut engines = world.engines();
    let mut refs = world.references();
    let a = drive(&world.topology, &mut engines, &world.script, max_events);
    let b = drive(&world.topology, &mut refs, &world.script, max_events);
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        if x != y {
            return Err(format!("step {i} diverges:\n engine:    {x:?}\n reference: {y:?}"));
        }
    }
    if a.len() != b.len() {
        return Err(format!("trace lengths differ: engine {} vs reference {}", a.len(), b.len()));
    }
    Ok(a.len())
}
