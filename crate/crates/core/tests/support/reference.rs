//! Naive re-statement of the forwarding rules, kept deliberately dumb:
//! plain vectors, linear scans, no shared helpers with the engine beyond the
//! packet and action types.

use copsslite::codec::{Data, Interest, Packet, Publish};
use copsslite::engine::{Action, DropReason};
use copsslite::naming::FaceId;

type Comps = Vec<Vec<u8>>;

fn comps(name: &copsslite::naming::Name) -> Comps {
    name.components().to_vec()
}

fn starts_with(name: &Comps, prefix: &Comps) -> bool {
    prefix.len() <= name.len() && name[..prefix.len()] == prefix[..]
}

fn is_local(f: u32) -> bool {
    f < 2
}

fn out(face: u32, packet: Packet) -> Action {
    if is_local(face) {
        Action::DeliverLocal { packet }
    } else {
        Action::Transmit { face: FaceId(face), packet }
    }
}

fn sorted_unique(mut v: Vec<u32>) -> Vec<u32> {
    v.sort();
    v.dedup();
    v
}

pub struct RefNode {
    pub awake: bool,
    /// Least recently used first.
    cs: Vec<(Comps, Vec<u8>)>,
    cs_cap: usize,
    pit: Vec<(Comps, Vec<u32>, u64)>,
    pit_lifetime: u64,
    fib: Vec<(Comps, Vec<u32>)>,
    st: Vec<(Comps, Vec<u32>)>,
    rp_for: Vec<Comps>,
    seen: Vec<u32>,
    seen_cap: usize,
}

impl RefNode {
    pub fn new(
        fib: Vec<(copsslite::naming::Name, Vec<u32>)>,
        rp_for: Vec<copsslite::naming::Name>,
        cs_cap: usize,
        pit_lifetime: u64,
        seen_cap: usize,
    ) -> Self {
        Self {
            awake: true,
            cs: Vec::new(),
            cs_cap,
            pit: Vec::new(),
            pit_lifetime,
            fib: fib.iter().map(|(n, f)| (comps(n), f.clone())).collect(),
            st: Vec::new(),
            rp_for: rp_for.iter().map(comps).collect(),
            seen: Vec::new(),
            seen_cap,
        }
    }

    pub fn power_down(&mut self) {
        self.awake = false;
        self.cs.clear();
        self.pit.clear();
        self.st.clear();
    }

    fn lpm(&self, name: &Comps) -> Vec<u32> {
        let mut best: Option<&(Comps, Vec<u32>)> = None;
        for e in &self.fib {
            if starts_with(name, &e.0) && best.is_none_or(|b| e.0.len() > b.0.len()) {
                best = Some(e);
            }
        }
        best.map(|b| b.1.clone()).unwrap_or_default()
    }

    fn rp(&self, cd: &Comps) -> bool {
        self.rp_for.iter().any(|p| starts_with(cd, p))
    }

    pub fn handle(&mut self, in_face: FaceId, packet: Packet, now: u64) -> Vec<Action> {
        if !self.awake {
            return vec![Action::Drop { reason: DropReason::Asleep }];
        }
        let f = in_face.0;
        match packet {
            Packet::Interest(i) => self.interest(f, i, now),
            Packet::Data(d) => self.data(f, d, now),
            Packet::Subscribe { cd } => self.subscribe(f, comps(cd.name()), Packet::Subscribe { cd }),
            Packet::Unsubscribe { cd } => self.unsubscribe(f, comps(cd.name()), Packet::Unsubscribe { cd }),
            Packet::Publish(p) => self.publish(f, p),
        }
    }

    fn interest(&mut self, f: u32, i: Interest, now: u64) -> Vec<Action> {
        self.pit.retain(|e| e.2 > now);
        let name = comps(&i.name);
        if let Some(pos) = self.cs.iter().position(|e| e.0 == name) {
            let entry = self.cs.remove(pos);
            let payload = entry.1.clone();
            self.cs.push(entry);
            return vec![out(f, Packet::Data(Data { name: i.name, payload }))];
        }
        if let Some(e) = self.pit.iter_mut().find(|e| e.0 == name) {
            if !e.1.contains(&f) {
                e.1.push(f);
            }
            return vec![];
        }
        if i.hop_limit <= 1 {
            return vec![Action::Drop { reason: DropReason::HopLimit }];
        }
        let faces: Vec<u32> = sorted_unique(self.lpm(&name)).into_iter().filter(|x| *x != f).collect();
        if faces.is_empty() {
            return vec![Action::Drop { reason: DropReason::NoRoute }];
        }
        self.pit.push((name, vec![f], now + self.pit_lifetime));
        let fwd = Interest { hop_limit: i.hop_limit - 1, ..i };
        faces.into_iter().map(|x| out(x, Packet::Interest(fwd.clone()))).collect()
    }

    fn data(&mut self, f: u32, d: Data, now: u64) -> Vec<Action> {
        self.pit.retain(|e| e.2 > now);
        let name = comps(&d.name);
        if self.cs.iter().any(|e| e.0 == name) {
            return vec![Action::Drop { reason: DropReason::Duplicate }];
        }
        let Some(pos) = self.pit.iter().position(|e| e.0 == name) else {
            return vec![Action::Drop { reason: DropReason::Unsolicited }];
        };
        let (_, faces, _) = self.pit.remove(pos);
        let acts = sorted_unique(faces)
            .into_iter()
            .filter(|x| *x != f)
            .map(|x| out(x, Packet::Data(d.clone())))
            .collect();
        if self.cs_cap > 0 {
            if self.cs.len() == self.cs_cap {
                self.cs.remove(0);
            }
            self.cs.push((name, d.payload));
        }
        acts
    }

    fn upstream(&self, f: u32, cd: &Comps, packet: Packet) -> Vec<Action> {
        let faces: Vec<u32> = sorted_unique(self.lpm(cd)).into_iter().filter(|x| *x != f).collect();
        if faces.is_empty() {
            return vec![Action::Drop { reason: DropReason::NoRoute }];
        }
        faces
            .into_iter()
            .map(|x| Action::Transmit { face: FaceId(x), packet: packet.clone() })
            .collect()
    }

    fn subscribe(&mut self, f: u32, cd: Comps, packet: Packet) -> Vec<Action> {
        let already = match self.st.iter_mut().find(|e| e.0 == cd) {
            Some(e) => {
                if !e.1.contains(&f) {
                    e.1.push(f);
                }
                true
            }
            None => {
                self.st.push((cd.clone(), vec![f]));
                false
            }
        };
        if already || self.rp(&cd) {
            return vec![];
        }
        self.upstream(f, &cd, packet)
    }

    fn unsubscribe(&mut self, f: u32, cd: Comps, packet: Packet) -> Vec<Action> {
        let Some(pos) = self.st.iter().position(|e| e.0 == cd && e.1.contains(&f)) else {
            return vec![Action::Drop { reason: DropReason::NotSubscribed }];
        };
        self.st[pos].1.retain(|x| *x != f);
        if !self.st[pos].1.is_empty() {
            return vec![];
        }
        self.st.remove(pos);
        if self.rp(&cd) {
            return vec![];
        }
        self.upstream(f, &cd, packet)
    }

    fn publish(&mut self, f: u32, p: Publish) -> Vec<Action> {
        if self.seen_cap > 0 {
            if self.seen.contains(&p.seq) {
                return vec![Action::Drop { reason: DropReason::Duplicate }];
            }
            if self.seen.len() == self.seen_cap {
                self.seen.remove(0);
            }
            self.seen.push(p.seq);
        }
        let pub_cds: Vec<Comps> = p.cds.iter().map(|c| comps(c.name())).collect();
        let mut faces = Vec::new();
        for (sub, fs) in &self.st {
            if pub_cds.iter().any(|c| starts_with(c, sub)) {
                faces.extend(fs.iter().copied());
            }
        }
        faces.retain(|x| *x != f);
        let local = faces.contains(&0);
        faces.retain(|x| !is_local(*x));
        let at_rp = pub_cds.iter().any(|c| self.rp(c));
        let toward_rp = self.lpm(&pub_cds[0]);
        if !at_rp {
            faces.extend(toward_rp.iter().copied().filter(|x| *x != f && !is_local(*x)));
        }
        let faces = sorted_unique(faces);
        if faces.is_empty() && !local {
            if !at_rp && toward_rp.contains(&f) {
                return vec![];
            }
            return vec![Action::Drop { reason: DropReason::NoRoute }];
        }
        let mut acts = Vec::new();
        if local {
            acts.push(Action::DeliverLocal { packet: Packet::Publish(p.clone()) });
        }
        for x in faces {
            acts.push(Action::Transmit { face: FaceId(x), packet: Packet::Publish(p.clone()) });
        }
        acts
    }
}
