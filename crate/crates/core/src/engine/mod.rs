//! Per-node forwarding state machine.
//!
//! One entry point, [`NodeState::handle`], dispatches on packet type: the
//! pub/sub core handles Subscribe, Unsubscribe and Publish against the
//! Subscription Table, and the query forwarder handles Interest and Data
//! against the CS, PIT and FIB.
//!
//! Output ordering is part of the contract: a handler emits `DeliverLocal`
//! before any `Transmit`, and transmissions in ascending face order.
//! Deliveries towards the two local faces ([`FaceId::APP`],
//! [`FaceId::PRODUCER`]) surface as `DeliverLocal` rather than `Transmit`.

mod tables;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use self::tables::{ContentStore, DedupWindow, Pit, PitEntry, SubscriptionTable};
use crate::codec::{Data, Interest, Packet, Publish};
use crate::naming::{ContentDescriptor, FaceId, FibTable};
use crate::routing::NodeId;
use crate::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub pit_lifetime: SimTime,
    pub cs_capacity: usize,
    pub dedup_window: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            pit_lifetime: 4_000,
            cs_capacity: 16,
            dedup_window: 64,
        }
    }
}

pub const DEFAULT_HOP_LIMIT: u8 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    NoRoute,
    HopLimit,
    Duplicate,
    Unsolicited,
    NotSubscribed,
    Asleep,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NoRoute => "no-route",
            DropReason::HopLimit => "hop-limit",
            DropReason::Duplicate => "duplicate",
            DropReason::Unsolicited => "unsolicited",
            DropReason::NotSubscribed => "not-subscribed",
            DropReason::Asleep => "asleep",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Transmit { face: FaceId, packet: Packet },
    DeliverLocal { packet: Packet },
    Drop { reason: DropReason },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub node_id: NodeId,
    pub cs: ContentStore,
    pub pit: Pit,
    pub fib: FibTable,
    pub st: SubscriptionTable,
    pub awake: bool,
    pub is_rp_for: BTreeSet<ContentDescriptor>,
    pub seen_pubs: DedupWindow,
    config: EngineConfig,
}

fn emit(face: FaceId, packet: Packet) -> Action {
    if face.is_local() {
        Action::DeliverLocal { packet }
    } else {
        Action::Transmit { face, packet }
    }
}

fn drop(reason: DropReason) -> Vec<Action> {
    vec![Action::Drop { reason }]
}

impl NodeState {
    pub fn new(node_id: NodeId, fib: FibTable, config: EngineConfig) -> Self {
        Self {
            node_id,
            cs: ContentStore::new(config.cs_capacity),
            pit: Pit::default(),
            fib,
            st: SubscriptionTable::default(),
            awake: true,
            is_rp_for: BTreeSet::new(),
            seen_pubs: DedupWindow::new(config.dedup_window),
            config,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// True if one of this node's RP prefixes covers `cd`.
    pub fn is_rp(&self, cd: &ContentDescriptor) -> bool {
        self.is_rp_for.iter().any(|rp| rp.name().is_prefix_of(cd.name()))
    }

    fn route(&self, cd: &ContentDescriptor, in_face: FaceId) -> BTreeSet<FaceId> {
        self.fib
            .longest_prefix_match(cd.name())
            .map(|(_, faces)| faces.iter().copied().filter(|f| *f != in_face).collect())
            .unwrap_or_default()
    }

    pub fn handle(&mut self, in_face: FaceId, packet: Packet, now: SimTime) -> Vec<Action> {
        if !self.awake {
            return drop(DropReason::Asleep);
        }
        match packet {
            Packet::Interest(i) => self.on_interest(in_face, i, now),
            Packet::Data(d) => self.on_data(in_face, d, now),
            Packet::Subscribe { cd } => self.on_subscribe(in_face, cd),
            Packet::Unsubscribe { cd } => self.on_unsubscribe(in_face, cd),
            Packet::Publish(p) => self.on_publish(in_face, p),
        }
    }

    pub fn on_interest(&mut self, in_face: FaceId, pkt: Interest, now: SimTime) -> Vec<Action> {
        self.pit.purge_expired(now);
        if let Some(payload) = self.cs.get(&pkt.name) {
            let data = Data {
                name: pkt.name,
                payload: payload.to_vec(),
            };
            return vec![emit(in_face, Packet::Data(data))];
        }
        if let Some(entry) = self.pit.get_mut(&pkt.name, now) {
            entry.faces.insert(in_face);
            return Vec::new();
        }
        let hop_limit = pkt.hop_limit.saturating_sub(1);
        if hop_limit == 0 {
            return drop(DropReason::HopLimit);
        }
        let faces: BTreeSet<FaceId> = match self.fib.longest_prefix_match(&pkt.name) {
            Some((_, faces)) => faces.iter().copied().filter(|f| *f != in_face).collect(),
            None => BTreeSet::new(),
        };
        if faces.is_empty() {
            return drop(DropReason::NoRoute);
        }
        self.pit.insert(pkt.name.clone(), in_face, now + self.config.pit_lifetime);
        let fwd = Interest { hop_limit, ..pkt };
        // Local faces sort first, so any DeliverLocal precedes the transmits.
        faces
            .into_iter()
            .map(|f| emit(f, Packet::Interest(fwd.clone())))
            .collect()
    }

    pub fn on_data(&mut self, in_face: FaceId, pkt: Data, now: SimTime) -> Vec<Action> {
        self.pit.purge_expired(now);
        if self.cs.contains(&pkt.name) {
            return drop(DropReason::Duplicate);
        }
        let Some(entry) = self.pit.remove(&pkt.name) else {
            return drop(DropReason::Unsolicited);
        };
        let out: Vec<Action> = entry
            .faces
            .into_iter()
            .filter(|f| *f != in_face)
            .map(|f| emit(f, Packet::Data(pkt.clone())))
            .collect();
        self.cs.insert(pkt.name, pkt.payload);
        out
    }

    pub fn on_subscribe(&mut self, in_face: FaceId, cd: ContentDescriptor) -> Vec<Action> {
        let aggregated = self.st.add(cd.clone(), in_face);
        if aggregated || self.is_rp(&cd) {
            return Vec::new();
        }
        let faces = self.route(&cd, in_face);
        if faces.is_empty() {
            return drop(DropReason::NoRoute);
        }
        faces
            .into_iter()
            .map(|face| Action::Transmit {
                face,
                packet: Packet::Subscribe { cd: cd.clone() },
            })
            .collect()
    }

    pub fn on_unsubscribe(&mut self, in_face: FaceId, cd: ContentDescriptor) -> Vec<Action> {
        match self.st.remove(&cd, in_face) {
            None => drop(DropReason::NotSubscribed),
            Some(false) => Vec::new(),
            Some(true) if self.is_rp(&cd) => Vec::new(),
            Some(true) => {
                let faces = self.route(&cd, in_face);
                if faces.is_empty() {
                    return drop(DropReason::NoRoute);
                }
                faces
                    .into_iter()
                    .map(|face| Action::Transmit {
                        face,
                        packet: Packet::Unsubscribe { cd: cd.clone() },
                    })
                    .collect()
            }
        }
    }

    pub fn on_publish(&mut self, in_face: FaceId, pkt: Publish) -> Vec<Action> {
        if !self.seen_pubs.insert(pkt.id()) {
            return drop(DropReason::Duplicate);
        }
        let mut faces = self.st.matching_faces(&pkt.cds);
        faces.remove(&in_face);
        let deliver_local = faces.remove(&FaceId::APP);
        faces.remove(&FaceId::PRODUCER);
        if !pkt.cds.iter().any(|cd| self.is_rp(cd)) {
            // Towards the RP along the first descriptor's route.
            let rp_ward = self.route(&pkt.cds[0], in_face);
            faces.extend(rp_ward.into_iter().filter(|f| !f.is_local()));
        }
        if faces.is_empty() && !deliver_local {
            if self.is_rp_route_back(&pkt, in_face) {
                return Vec::new();
            }
            return drop(DropReason::NoRoute);
        }
        let mut out = Vec::with_capacity(faces.len() + 1);
        if deliver_local {
            out.push(Action::DeliverLocal {
                packet: Packet::Publish(pkt.clone()),
            });
        }
        out.extend(faces.into_iter().map(|face| Action::Transmit {
            face,
            packet: Packet::Publish(pkt.clone()),
        }));
        out
    }

    /// A publication that came down from the RP direction and has nowhere
    /// further to go is consumed silently rather than reported unroutable.
    fn is_rp_route_back(&self, pkt: &Publish, in_face: FaceId) -> bool {
        !pkt.cds.iter().any(|cd| self.is_rp(cd))
            && self
                .fib
                .longest_prefix_match(pkt.cds[0].name())
                .is_some_and(|(_, faces)| faces.contains(&in_face))
    }

    /// Drops the soft state a node loses while powered down.
    pub fn power_down(&mut self) {
        self.awake = false;
        self.pit.clear();
        self.cs.clear();
        self.st.clear();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwoStepError {
    #[error("first publication must be a snippet")]
    NotSnippet,
    #[error("second publication must carry the full content")]
    FullIsSnippet,
    #[error("snippet and full content must carry the same descriptors")]
    CdMismatch,
    #[error("full content sequence must follow the snippet's")]
    SeqOrder,
}

/// Two-step communication: the snippet goes out at offset 0, the full
/// content `delay` later, giving receivers of the snippet time to subscribe.
/// Returns `(offset, publication)` pairs to be injected at the publisher.
pub fn publish_two_step(
    snippet: Publish,
    full: Publish,
    delay: SimTime,
) -> Result<Vec<(SimTime, Publish)>, TwoStepError> {
    if !snippet.snippet {
        return Err(TwoStepError::NotSnippet);
    }
    if full.snippet {
        return Err(TwoStepError::FullIsSnippet);
    }
    if snippet.cds != full.cds {
        return Err(TwoStepError::CdMismatch);
    }
    if full.seq <= snippet.seq {
        return Err(TwoStepError::SeqOrder);
    }
    Ok(vec![(0, snippet), (delay, full)])
}
