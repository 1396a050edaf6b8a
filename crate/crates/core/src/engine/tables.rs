use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::codec::PublicationId;
use crate::naming::{cd_matches, ContentDescriptor, FaceId, Name};
use crate::SimTime;

/// Bounded content cache with least-recently-used eviction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentStore {
    capacity: usize,
    clock: u64,
    entries: HashMap<Name, (Vec<u8>, u64)>,
    order: BTreeMap<u64, Name>,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            clock: 0,
            entries: HashMap::new(),
            order: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &Name) -> bool {
        self.entries.contains_key(name)
    }

    /// Looks up `name` and marks it most recently used.
    pub fn get(&mut self, name: &Name) -> Option<&[u8]> {
        self.clock += 1;
        let (payload, stamp) = self.entries.get_mut(name)?;
        self.order.remove(stamp);
        *stamp = self.clock;
        self.order.insert(self.clock, name.clone());
        Some(payload)
    }

    /// Inserts or refreshes `name`; returns the evicted name, if any.
    pub fn insert(&mut self, name: Name, payload: Vec<u8>) -> Option<Name> {
        if self.capacity == 0 {
            return None;
        }
        self.clock += 1;
        if let Some((old_payload, stamp)) = self.entries.get_mut(&name) {
            self.order.remove(stamp);
            *old_payload = payload;
            *stamp = self.clock;
            self.order.insert(self.clock, name);
            return None;
        }
        let mut evicted = None;
        if self.entries.len() >= self.capacity {
            let (_, oldest) = self.order.pop_first().expect("nonempty store");
            self.entries.remove(&oldest);
            evicted = Some(oldest);
        }
        self.order.insert(self.clock, name.clone());
        self.entries.insert(name, (payload, self.clock));
        evicted
    }

    /// Names from least to most recently used.
    pub fn names_lru_order(&self) -> Vec<Name> {
        self.order.values().cloned().collect()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.order.clear();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitEntry {
    pub faces: BTreeSet<FaceId>,
    pub expiry: SimTime,
}

/// Pending Interest Table. Entries whose expiry is at or before the current
/// time are treated as absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pit {
    entries: BTreeMap<Name, PitEntry>,
}

impl Pit {
    pub fn purge_expired(&mut self, now: SimTime) {
        self.entries.retain(|_, e| e.expiry > now);
    }

    pub fn get(&self, name: &Name, now: SimTime) -> Option<&PitEntry> {
        self.entries.get(name).filter(|e| e.expiry > now)
    }

    pub fn get_mut(&mut self, name: &Name, now: SimTime) -> Option<&mut PitEntry> {
        self.entries.get_mut(name).filter(|e| e.expiry > now)
    }

    pub fn insert(&mut self, name: Name, face: FaceId, expiry: SimTime) {
        self.entries.insert(
            name,
            PitEntry {
                faces: BTreeSet::from([face]),
                expiry,
            },
        );
    }

    pub fn remove(&mut self, name: &Name) -> Option<PitEntry> {
        self.entries.remove(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &PitEntry)> {
        self.entries.iter()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// Subscription Table: content descriptor to the faces with downstream
/// subscribers. Face sets are never empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubscriptionTable {
    entries: BTreeMap<ContentDescriptor, BTreeSet<FaceId>>,
}

impl SubscriptionTable {
    /// Adds `face`; returns whether the descriptor already had faces.
    pub fn add(&mut self, cd: ContentDescriptor, face: FaceId) -> bool {
        let faces = self.entries.entry(cd).or_default();
        let existed = !faces.is_empty();
        faces.insert(face);
        existed
    }

    /// Removes `face`. `None` if the pair was not present, otherwise whether
    /// the entry became empty (and was deleted).
    pub fn remove(&mut self, cd: &ContentDescriptor, face: FaceId) -> Option<bool> {
        let faces = self.entries.get_mut(cd)?;
        if !faces.remove(&face) {
            return None;
        }
        let emptied = faces.is_empty();
        if emptied {
            self.entries.remove(cd);
        }
        Some(emptied)
    }

    pub fn get(&self, cd: &ContentDescriptor) -> Option<&BTreeSet<FaceId>> {
        self.entries.get(cd)
    }

    /// Union of the faces of every entry whose descriptor matches the
    /// publication's descriptor list.
    pub fn matching_faces(&self, published: &[ContentDescriptor]) -> BTreeSet<FaceId> {
        self.entries
            .iter()
            .filter(|(cd, _)| cd_matches(cd, published))
            .flat_map(|(_, faces)| faces.iter().copied())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContentDescriptor, &BTreeSet<FaceId>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// Sliding window of recently seen publication ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupWindow {
    capacity: usize,
    order: VecDeque<PublicationId>,
    seen: HashSet<PublicationId>,
}

impl DedupWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            order: VecDeque::with_capacity(capacity),
            seen: HashSet::with_capacity(capacity),
        }
    }

    pub fn contains(&self, id: &PublicationId) -> bool {
        self.seen.contains(id)
    }

    /// Records `id`; returns false if it was already in the window.
    pub fn insert(&mut self, id: PublicationId) -> bool {
        if self.capacity == 0 || self.seen.contains(&id) {
            return self.capacity == 0;
        }
        if self.order.len() == self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.seen.remove(&old);
            }
        }
        self.order.push_back(id);
        self.seen.insert(id);
        true
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}
