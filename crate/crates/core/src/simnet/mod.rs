//! Deterministic discrete-event simulator.
//!
//! Events are ordered by `(time, insertion sequence)`, randomness comes only
//! from generators seeded by the caller, and the kernel is single threaded, so
//! a run is a pure function of its inputs.

mod trace;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use self::trace::{Direction, LinkRef, Trace, TraceRecord, CSV_HEADER, SNIPPET};
use crate::codec::{self, CodecError, Data, Packet, PacketType, PublicationId, Publish, WireFrame, MTU};
use crate::engine::{Action, EngineConfig, NodeState, SubscriptionTable};
use crate::naming::{ContentDescriptor, FaceId, FibTable, Name};
use crate::routing::{self, Link, NodeId, RoutingError, RpAssignment, RpPolicy, Topology};
use crate::traffic::{self, ContentCatalog, Distribution, PollingClient, Sampler};
use crate::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Sends `frame` over `link`: `Some(arrival time)` unless the frame is lost.
/// Exactly one uniform draw is taken from `rng` per call.
pub fn transmit<R: Rng + ?Sized>(
    link: &Link,
    frame: &[u8],
    now: SimTime,
    rng: &mut R,
) -> Result<Option<SimTime>, CodecError> {
    if frame.len() > MTU {
        return Err(CodecError::OversizeFrame(frame.len()));
    }
    let u: f64 = rng.gen();
    Ok((u >= link.loss).then_some(now + link.delay))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerConfig {
    pub enabled: bool,
    pub buffer_capacity: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            buffer_capacity: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NodeSnapshot {
    st: SubscriptionTable,
    fib: FibTable,
}

/// State the controller holds for sleeping nodes.
#[derive(Debug, Clone, Default)]
pub struct ControllerState {
    config: ControllerConfig,
    registry: BTreeMap<NodeId, NodeSnapshot>,
    buffers: BTreeMap<NodeId, VecDeque<(FaceId, WireFrame)>>,
    pub evictions: u64,
}

impl ControllerState {
    pub fn new(config: ControllerConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    pub fn buffered(&self, node: NodeId) -> usize {
        self.buffers.get(&node).map_or(0, VecDeque::len)
    }

    /// Queues a frame for `node`; returns true if the oldest one was evicted.
    fn buffer(&mut self, node: NodeId, in_face: FaceId, frame: WireFrame) -> bool {
        let queue = self.buffers.entry(node).or_default();
        queue.push_back((in_face, frame));
        if queue.len() > self.config.buffer_capacity {
            queue.pop_front();
            self.evictions += 1;
            return true;
        }
        false
    }
}

/// Something an application does at a node.
#[derive(Debug, Clone, PartialEq)]
pub enum AppAction {
    Subscribe(ContentDescriptor),
    Unsubscribe(ContentDescriptor),
    Publish(Publish),
    /// Pull mode: the producer makes item `seq` (of catalog kind `kind`) available.
    Produce { seq: u32, payload: Vec<u8> },
    /// Pull mode: the node's polling client issues its scheduled poll.
    Poll,
}

#[derive(Debug, Clone)]
enum EventKind {
    FrameArrival {
        from: NodeId,
        to: NodeId,
        in_face: FaceId,
        frame: WireFrame,
        frame_id: u64,
        content: Option<u32>,
    },
    Wake(NodeId),
    Sleep(NodeId),
    App(NodeId, AppAction),
    ControllerSync(NodeId),
}

#[derive(Debug)]
struct Event {
    time: SimTime,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Debug, Clone, Default)]
struct Producer {
    prefix: Option<Name>,
    items: BTreeMap<u32, Vec<u8>>,
}

/// The simulation kernel: nodes, applications, the controller and the event queue.
pub struct Simulator {
    topology: Topology,
    nodes: BTreeMap<NodeId, NodeState>,
    controller: ControllerState,
    queue: BinaryHeap<Event>,
    next_event: u64,
    next_frame: u64,
    next_nonce: u32,
    now: SimTime,
    loss_rng: ChaCha8Rng,
    trace: Trace,
    producers: BTreeMap<NodeId, Producer>,
    clients: BTreeMap<NodeId, PollingClient>,
    local_subs: BTreeMap<NodeId, BTreeSet<ContentDescriptor>>,
}

impl Simulator {
    /// Builds a network whose routing is already computed. Every node starts
    /// asleep and is woken at time 0.
    pub fn new(
        topology: Topology,
        rp: &RpAssignment,
        producer_prefixes: &BTreeMap<Name, NodeId>,
        engine: EngineConfig,
        controller: ControllerConfig,
        loss_rng: ChaCha8Rng,
    ) -> Result<Self, SimError> {
        let mut fibs = routing::install_fibs(&topology, rp, producer_prefixes)?;
        let mut nodes = BTreeMap::new();
        for &id in topology.nodes() {
            let mut state = NodeState::new(id, fibs.remove(&id).unwrap_or_default(), engine);
            state.awake = false;
            state.is_rp_for = rp
                .table
                .iter()
                .filter(|(_, n)| **n == id)
                .map(|(p, _)| ContentDescriptor::new(p.clone()))
                .collect();
            nodes.insert(id, state);
        }
        let mut producers = BTreeMap::new();
        for (prefix, node) in producer_prefixes {
            producers.insert(
                *node,
                Producer {
                    prefix: Some(prefix.clone()),
                    items: BTreeMap::new(),
                },
            );
        }
        let mut sim = Self {
            topology,
            nodes,
            controller: ControllerState::new(controller),
            queue: BinaryHeap::new(),
            next_event: 0,
            next_frame: 0,
            next_nonce: 1,
            now: 0,
            loss_rng,
            trace: Trace::default(),
            producers,
            clients: BTreeMap::new(),
            local_subs: BTreeMap::new(),
        };
        let ids: Vec<NodeId> = sim.nodes.keys().copied().collect();
        for id in ids {
            sim.push(0, EventKind::Wake(id));
        }
        Ok(sim)
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.nodes.get(&id)
    }

    pub fn controller(&self) -> &ControllerState {
        &self.controller
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    fn push(&mut self, time: SimTime, kind: EventKind) {
        let seq = self.next_event;
        self.next_event += 1;
        self.queue.push(Event { time, seq, kind });
    }

    pub fn schedule_app(&mut self, time: SimTime, node: NodeId, action: AppAction) {
        self.push(time, EventKind::App(node, action));
    }

    pub fn schedule_sleep(&mut self, from: SimTime, until: SimTime, node: NodeId) {
        self.push(from, EventKind::Sleep(node));
        self.push(until, EventKind::Wake(node));
    }

    /// Attaches a polling client to `node` and schedules its polls.
    pub fn add_polling_client(&mut self, node: NodeId, client: PollingClient, horizon: SimTime) {
        for t in client.poll_times(horizon) {
            self.schedule_app(t, node, AppAction::Poll);
        }
        self.clients.insert(node, client);
    }

    /// Processes every event with time `<= horizon`.
    pub fn run_until(mut self, horizon: SimTime) -> Trace {
        while let Some(ev) = self.queue.peek() {
            if ev.time > horizon {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            self.now = ev.time;
            self.dispatch(ev.kind);
        }
        self.trace.controller_evictions = self.controller.evictions;
        self.trace
    }

    fn record(&mut self, node: NodeId, direction: Direction) -> TraceRecord {
        TraceRecord::new(self.now, node, direction)
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::FrameArrival { from, to, in_face, frame, frame_id, content } => {
                self.on_frame(from, to, in_face, frame, frame_id, content)
            }
            EventKind::Wake(node) => self.wake_node(node),
            EventKind::Sleep(node) => self.sleep_node(node),
            EventKind::App(node, action) => self.on_app(node, action),
            EventKind::ControllerSync(node) => self.controller_sync(node),
        }
    }

    /// Powers `node` down. With the controller enabled its ST and FIB are
    /// saved first; PIT, CS and ST are lost either way.
    pub fn sleep_node(&mut self, node: NodeId) {
        let Some(state) = self.nodes.get_mut(&node) else { return };
        if !state.awake {
            return;
        }
        if self.controller.config.enabled {
            self.controller.registry.insert(
                node,
                NodeSnapshot {
                    st: state.st.clone(),
                    fib: state.fib.clone(),
                },
            );
        }
        state.power_down();
        let rec = self.record(node, Direction::Sleep);
        self.trace.push(rec);
    }

    /// Powers `node` up. With the controller enabled a sync follows at the
    /// same instant; without it the node's applications re-subscribe.
    pub fn wake_node(&mut self, node: NodeId) {
        let Some(state) = self.nodes.get_mut(&node) else { return };
        if state.awake {
            return;
        }
        state.awake = true;
        let rec = self.record(node, Direction::Wake);
        self.trace.push(rec);
        if self.controller.config.enabled {
            if self.controller.registry.contains_key(&node) {
                self.push(self.now, EventKind::ControllerSync(node));
            }
        } else {
            let subs: Vec<_> = self.local_subs.get(&node).into_iter().flatten().cloned().collect();
            for cd in subs {
                self.inject(node, FaceId::APP, Packet::Subscribe { cd }, None);
            }
        }
    }

    fn controller_sync(&mut self, node: NodeId) {
        let Some(snapshot) = self.controller.registry.get(&node).cloned() else { return };
        let Some(state) = self.nodes.get_mut(&node) else { return };
        if !state.awake {
            return;
        }
        let state_bytes: usize = snapshot
            .st
            .iter()
            .map(|(cd, faces)| faces.len() * codec::encoded_len(&Packet::Subscribe { cd: cd.clone() }))
            .sum();
        state.st = snapshot.st;
        state.fib = snapshot.fib;
        let mut rec = self.record(node, Direction::Tx);
        rec.size = state_bytes;
        rec.link = Some(LinkRef::Controller);
        rec.detail = Some("state-sync");
        self.trace.push(rec);

        let buffered: Vec<_> = self.controller.buffers.remove(&node).unwrap_or_default().into();
        for (in_face, frame) in buffered {
            let Ok(packet) = codec::decode(frame.as_bytes()) else { continue };
            let content = content_of(&packet);
            let mut rec = self.record(node, Direction::Tx);
            rec.ptype = Some(frame.packet_type());
            rec.size = frame.len();
            rec.link = Some(LinkRef::Controller);
            rec.content = content;
            rec.detail = Some("replay");
            self.trace.push(rec);
            self.inject(node, in_face, packet, content);
        }
    }

    fn on_frame(
        &mut self,
        from: NodeId,
        to: NodeId,
        in_face: FaceId,
        frame: WireFrame,
        frame_id: u64,
        content: Option<u32>,
    ) {
        let link = LinkRef::radio(from, to);
        let awake = self.nodes.get(&to).is_some_and(|s| s.awake);
        let mut rec = self.record(to, Direction::Rx);
        rec.ptype = Some(frame.packet_type());
        rec.size = frame.len();
        rec.link = Some(link);
        rec.frame = Some(frame_id);
        rec.content = content;
        if !awake {
            rec.direction = Direction::Drop;
            rec.detail = Some("asleep");
            if self.should_buffer(to, in_face, &frame) {
                rec.detail = Some("buffered");
                self.trace.push(rec);
                if self.controller.buffer(to, in_face, frame) {
                    let mut ev = self.record(to, Direction::Drop);
                    ev.ptype = Some(PacketType::Publish);
                    ev.detail = Some("evicted");
                    self.trace.push(ev);
                }
            } else {
                self.trace.push(rec);
            }
            return;
        }
        self.trace.push(rec);
        match codec::decode(frame.as_bytes()) {
            Ok(packet) => self.inject(to, in_face, packet, content),
            Err(_) => {
                let mut rec = self.record(to, Direction::Drop);
                rec.detail = Some("malformed");
                self.trace.push(rec);
            }
        }
    }

    fn should_buffer(&self, node: NodeId, in_face: FaceId, frame: &WireFrame) -> bool {
        if !self.controller.config.enabled || frame.packet_type() != PacketType::Publish {
            return false;
        }
        let Some(snapshot) = self.controller.registry.get(&node) else { return false };
        let Ok(Packet::Publish(p)) = codec::decode(frame.as_bytes()) else { return false };
        let mut faces = snapshot.st.matching_faces(&p.cds);
        faces.remove(&in_face);
        !faces.is_empty()
    }

    fn on_app(&mut self, node: NodeId, action: AppAction) {
        let awake = self.nodes.get(&node).is_some_and(|s| s.awake);
        let mut rec = self.record(node, Direction::App);
        match action {
            AppAction::Subscribe(cd) => {
                self.local_subs.entry(node).or_default().insert(cd.clone());
                rec.ptype = Some(PacketType::Subscribe);
                self.trace.push(rec);
                if awake {
                    self.inject(node, FaceId::APP, Packet::Subscribe { cd }, None);
                } else {
                    self.drop_asleep(node);
                }
            }
            AppAction::Unsubscribe(cd) => {
                if let Some(subs) = self.local_subs.get_mut(&node) {
                    subs.remove(&cd);
                }
                rec.ptype = Some(PacketType::Unsubscribe);
                self.trace.push(rec);
                if awake {
                    self.inject(node, FaceId::APP, Packet::Unsubscribe { cd }, None);
                } else {
                    self.drop_asleep(node);
                }
            }
            AppAction::Publish(publish) => {
                let content = Some(publish.id().counter);
                rec.ptype = Some(PacketType::Publish);
                rec.size = codec::encoded_len(&Packet::Publish(publish.clone()));
                rec.content = content;
                if publish.snippet {
                    rec.detail = Some(SNIPPET);
                }
                self.trace.push(rec);
                if awake {
                    self.inject(node, FaceId::PRODUCER, Packet::Publish(publish), content);
                } else {
                    self.drop_asleep(node);
                }
            }
            AppAction::Produce { seq, payload } => {
                rec.ptype = Some(PacketType::Data);
                rec.size = payload.len();
                rec.content = Some(seq);
                self.trace.push(rec);
                self.producers.entry(node).or_default().items.insert(seq, payload);
            }
            AppAction::Poll => {
                if !awake || !self.clients.contains_key(&node) {
                    return;
                }
                self.poll(node);
            }
        }
    }

    fn drop_asleep(&mut self, node: NodeId) {
        let mut rec = self.record(node, Direction::Drop);
        rec.detail = Some("asleep");
        self.trace.push(rec);
    }

    fn poll(&mut self, node: NodeId) {
        let nonce = self.next_nonce;
        self.next_nonce = self.next_nonce.wrapping_add(1);
        let interest = self.clients[&node].interest(self.now, nonce);
        let mut rec = self.record(node, Direction::App);
        rec.ptype = Some(PacketType::Interest);
        rec.size = codec::encoded_len(&Packet::Interest(interest.clone()));
        self.trace.push(rec);
        self.inject(node, FaceId::APP, Packet::Interest(interest), None);
    }

    /// Hands `packet` to the forwarder of `node` and carries out its actions.
    fn inject(&mut self, node: NodeId, in_face: FaceId, packet: Packet, content: Option<u32>) {
        let Some(state) = self.nodes.get_mut(&node) else { return };
        let actions = state.handle(in_face, packet, self.now);
        for action in actions {
            self.execute(node, action, content);
        }
    }

    fn execute(&mut self, node: NodeId, action: Action, content: Option<u32>) {
        match action {
            Action::Transmit { face, packet } => self.send(node, face, packet, content),
            Action::DeliverLocal { packet } => self.deliver_local(node, packet),
            Action::Drop { reason } => {
                let mut rec = self.record(node, Direction::Drop);
                rec.content = content;
                rec.detail = Some(reason.as_str());
                self.trace.push(rec);
            }
        }
    }

    fn send(&mut self, node: NodeId, face: FaceId, packet: Packet, content: Option<u32>) {
        let content = content.or_else(|| content_of(&packet));
        let frame = match codec::encode(&packet) {
            Ok(f) => f,
            Err(_) => {
                let mut rec = self.record(node, Direction::Drop);
                rec.ptype = Some(packet.packet_type());
                rec.detail = Some("oversize");
                self.trace.push(rec);
                return;
            }
        };
        let Some((peer, link)) = self.topology.via_face(node, face) else {
            let mut rec = self.record(node, Direction::Drop);
            rec.ptype = Some(packet.packet_type());
            rec.detail = Some("no-face");
            self.trace.push(rec);
            return;
        };
        let link = link.clone();
        let frame_id = self.next_frame;
        self.next_frame += 1;
        let mut rec = self.record(node, Direction::Tx);
        rec.ptype = Some(frame.packet_type());
        rec.size = frame.len();
        rec.link = Some(LinkRef::radio(node, peer));
        rec.frame = Some(frame_id);
        rec.content = content;
        self.trace.push(rec.clone());
        match transmit(&link, frame.as_bytes(), self.now, &mut self.loss_rng) {
            Ok(Some(arrival)) => {
                let in_face = self.topology.face_to(peer, node).expect("links are symmetric");
                self.push(
                    arrival,
                    EventKind::FrameArrival {
                        from: node,
                        to: peer,
                        in_face,
                        frame,
                        frame_id,
                        content,
                    },
                );
            }
            Ok(None) | Err(_) => {
                rec.direction = Direction::Drop;
                rec.detail = Some("lost");
                self.trace.push(rec);
            }
        }
    }

    fn deliver_local(&mut self, node: NodeId, packet: Packet) {
        match packet {
            Packet::Publish(p) => {
                let mut rec = self.record(node, Direction::Deliver);
                rec.ptype = Some(PacketType::Publish);
                rec.size = p.payload.len();
                rec.content = Some(p.id().counter);
                if p.snippet {
                    rec.detail = Some(SNIPPET);
                }
                self.trace.push(rec);
            }
            Packet::Data(d) => {
                let Some(client) = self.clients.get_mut(&node) else { return };
                let Some(got) = client.on_data(&d) else { return };
                let mut rec = self.record(node, Direction::Deliver);
                rec.ptype = Some(PacketType::Data);
                rec.size = d.payload.len();
                rec.content = Some(got.seq);
                self.trace.push(rec);
                if got.more {
                    self.poll(node);
                }
            }
            Packet::Interest(i) => self.answer_interest(node, i.name),
            Packet::Subscribe { .. } | Packet::Unsubscribe { .. } => {}
        }
    }

    fn answer_interest(&mut self, node: NodeId, name: Name) {
        let Some(producer) = self.producers.get(&node) else { return };
        let Some(prefix) = producer.prefix.as_ref() else { return };
        let answer = traffic::parse_poll_name(prefix, &name).and_then(|(seq, _)| {
            let latest = producer.items.keys().next_back().copied().unwrap_or(0);
            producer
                .items
                .get(&seq)
                .map(|content| (seq, traffic::encode_pull_payload(latest, content)))
        });
        match answer {
            Some((seq, payload)) => self.inject(node, FaceId::PRODUCER, Packet::Data(Data { name, payload }), Some(seq)),
            None => {
                let mut rec = self.record(node, Direction::Drop);
                rec.ptype = Some(PacketType::Interest);
                rec.detail = Some("no-content");
                self.trace.push(rec);
            }
        }
    }
}

fn content_of(packet: &Packet) -> Option<u32> {
    match packet {
        Packet::Publish(p) => Some(p.id().counter),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    PubSub,
    Pull,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::PubSub => "pubsub",
            Mode::Pull => "pull",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One fully specified simulation run (a single point of an experiment sweep).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub rp_policy: RpPolicy,
    pub catalog: ContentCatalog,
    /// Name prefix the producer serves in pull mode.
    pub pull_prefix: Name,
    pub distribution: Distribution,
    pub mode: Mode,
    pub publisher: NodeId,
    pub subscribers: Vec<NodeId>,
    pub publications: u32,
    pub publish_interval: SimTime,
    pub start: SimTime,
    pub poll_interval: SimTime,
    /// Fixed poll phase for every client; `None` draws one per client.
    pub poll_phase: Option<SimTime>,
    pub sleep: BTreeMap<NodeId, Vec<(SimTime, SimTime)>>,
    pub controller: ControllerConfig,
    pub engine: EngineConfig,
    pub horizon: SimTime,
}

/// Independent generator streams derived from one seed.
pub mod streams {
    pub const WORKLOAD: u64 = 0;
    pub const LOSS: u64 = 1;
    pub const PHASE: u64 = 2;
}

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Scenario {
    /// Catalog kind of each publication `1..=publications`. Depends only on
    /// the seed, so both modes see the same workload.
    pub fn workload(&self, seed: u64) -> Vec<usize> {
        let sampler = Sampler::new(&self.distribution, self.catalog.len());
        let mut rng = rng_stream(seed, streams::WORKLOAD);
        (0..self.publications).map(|_| sampler.sample(&mut rng)).collect()
    }

    pub fn publication_time(&self, counter: u32) -> SimTime {
        self.start + SimTime::from(counter - 1) * self.publish_interval
    }

    fn check(&self) -> Result<u8, SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        for n in std::iter::once(&self.publisher).chain(&self.subscribers).chain(self.sleep.keys()) {
            if !self.topology.contains(*n) {
                return bad(format!("node {n} is not in the topology"));
            }
        }
        let Ok(publisher) = u8::try_from(self.publisher.0) else {
            return bad(format!("publisher id {} exceeds 255", self.publisher));
        };
        if self.publications > PublicationId::MAX_COUNTER {
            return bad("too many publications".into());
        }
        if self.publish_interval == 0 || self.poll_interval == 0 {
            return bad("intervals must be positive".into());
        }
        for windows in self.sleep.values() {
            if windows.iter().any(|(a, b)| a >= b) {
                return bad("sleep windows must have start < end".into());
            }
        }
        Ok(publisher)
    }
}

pub fn run(scenario: &Scenario, seed: u64) -> Result<Trace, SimError> {
    let publisher = scenario.check()?;
    let sleepers: BTreeSet<NodeId> = scenario.sleep.keys().copied().collect();
    let root = scenario.catalog.root.clone();
    let rp = routing::assign_rp(&scenario.topology, &[root], &scenario.rp_policy, &sleepers)?;
    let producers = BTreeMap::from([(scenario.pull_prefix.clone(), scenario.publisher)]);
    let mut sim = Simulator::new(
        scenario.topology.clone(),
        &rp,
        &producers,
        scenario.engine,
        scenario.controller,
        rng_stream(seed, streams::LOSS),
    )?;
    for (node, windows) in &scenario.sleep {
        for &(from, until) in windows {
            sim.schedule_sleep(from, until, *node);
        }
    }
    let kinds = scenario.workload(seed);
    match scenario.mode {
        Mode::PubSub => {
            for &s in &scenario.subscribers {
                sim.schedule_app(0, s, AppAction::Subscribe(scenario.catalog.root_cd()));
            }
            for (i, &kind) in kinds.iter().enumerate() {
                let counter = i as u32 + 1;
                let publish = Publish {
                    cds: scenario.catalog.item(kind).cds.clone(),
                    payload: scenario.catalog.payload(kind),
                    snippet: false,
                    seq: PublicationId::new(publisher, counter).seq(),
                };
                sim.schedule_app(scenario.publication_time(counter), scenario.publisher, AppAction::Publish(publish));
            }
        }
        Mode::Pull => {
            let mut phase_rng = rng_stream(seed, streams::PHASE);
            for &s in &scenario.subscribers {
                let phase = match scenario.poll_phase {
                    Some(p) => p,
                    None => phase_rng.gen_range(0..scenario.poll_interval),
                };
                let client = PollingClient::new(scenario.pull_prefix.clone(), scenario.poll_interval, phase);
                sim.add_polling_client(s, client, scenario.horizon);
            }
            for (i, &kind) in kinds.iter().enumerate() {
                let counter = i as u32 + 1;
                sim.schedule_app(
                    scenario.publication_time(counter),
                    scenario.publisher,
                    AppAction::Produce {
                        seq: counter,
                        payload: scenario.catalog.payload(kind),
                    },
                );
            }
        }
    }
    Ok(sim.run_until(scenario.horizon))
}
