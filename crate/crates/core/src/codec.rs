//! TLV wire format for the five packet types.
//!
//! ```text
//! frame   = packet-type:u8 tlv*
//! tlv     = type:u8 length:u16be value[length]
//! ```
//!
//! Names are carried as a run of `NAME_COMPONENT` TLVs. A publication carries
//! one or more content descriptors, each opened by a zero-length `CD_BEGIN`
//! followed by its components. Fields appear in a fixed order per packet type
//! and the decoder accepts only that order; every frame is at most
//! [`MTU`] bytes.

use std::fmt;

use thiserror::Error;

use crate::naming::{ContentDescriptor, Name, NameError};

/// Link-layer MTU of the constrained radio.
pub const MTU: usize = 128;

/// Maximum number of content descriptors on one publication.
pub const MAX_CDS: usize = 4;

pub const TLV_HEADER_LEN: usize = 3;

pub mod tlv {
    pub const NAME_COMPONENT: u8 = 0x01;
    pub const CD_BEGIN: u8 = 0x02;
    pub const PAYLOAD: u8 = 0x03;
    pub const NONCE: u8 = 0x04;
    pub const HOP_LIMIT: u8 = 0x05;
    pub const SNIPPET: u8 = 0x06;
    pub const SEQ: u8 = 0x07;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum PacketType {
    Interest = 0x10,
    Data = 0x11,
    Subscribe = 0x12,
    Unsubscribe = 0x13,
    Publish = 0x14,
}

impl PacketType {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0x10 => Self::Interest,
            0x11 => Self::Data,
            0x12 => Self::Subscribe,
            0x13 => Self::Unsubscribe,
            0x14 => Self::Publish,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Interest => "interest",
            Self::Data => "data",
            Self::Subscribe => "subscribe",
            Self::Unsubscribe => "unsubscribe",
            Self::Publish => "publish",
        }
    }
}

impl fmt::Display for PacketType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interest {
    pub name: Name,
    pub nonce: u32,
    pub hop_limit: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Data {
    pub name: Name,
    pub payload: Vec<u8>,
}

/// A publication. `seq` packs the publisher id into its top 8 bits and a
/// per-publisher counter into the low 24; see [`PublicationId`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Publish {
    pub cds: Vec<ContentDescriptor>,
    pub payload: Vec<u8>,
    pub snippet: bool,
    pub seq: u32,
}

impl Publish {
    pub fn id(&self) -> PublicationId {
        PublicationId::from_seq(self.seq)
    }
}

/// Origin of a publication: `(publisher, counter)` packed into the wire `seq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicationId {
    pub publisher: u8,
    pub counter: u32,
}

impl PublicationId {
    pub const COUNTER_BITS: u32 = 24;
    pub const MAX_COUNTER: u32 = (1 << Self::COUNTER_BITS) - 1;

    pub fn new(publisher: u8, counter: u32) -> Self {
        assert!(counter <= Self::MAX_COUNTER, "publication counter overflow");
        Self { publisher, counter }
    }

    pub fn from_seq(seq: u32) -> Self {
        Self {
            publisher: (seq >> Self::COUNTER_BITS) as u8,
            counter: seq & Self::MAX_COUNTER,
        }
    }

    pub fn seq(self) -> u32 {
        (u32::from(self.publisher) << Self::COUNTER_BITS) | self.counter
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Packet {
    Interest(Interest),
    Data(Data),
    Subscribe { cd: ContentDescriptor },
    Unsubscribe { cd: ContentDescriptor },
    Publish(Publish),
}

impl Packet {
    pub fn packet_type(&self) -> PacketType {
        match self {
            Packet::Interest(_) => PacketType::Interest,
            Packet::Data(_) => PacketType::Data,
            Packet::Subscribe { .. } => PacketType::Subscribe,
            Packet::Unsubscribe { .. } => PacketType::Unsubscribe,
            Packet::Publish(_) => PacketType::Publish,
        }
    }
}

/// An encoded frame: 2..=128 bytes starting with a known packet type.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WireFrame(Vec<u8>);

impl WireFrame {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn packet_type(&self) -> PacketType {
        PacketType::from_code(self.0[0]).expect("frames are built by encode")
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Debug for WireFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("WireFrame(")?;
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("encoded frame would be {0} bytes (MTU {MTU})")]
    OversizeFrame(usize),
    #[error("publication carries {0} content descriptors (max {MAX_CDS})")]
    TooManyCds(usize),
    #[error("empty frame")]
    EmptyFrame,
    #[error("unknown packet type 0x{0:02x}")]
    UnknownPacketType(u8),
    #[error("TLV 0x{tlv_type:02x} declares {declared} bytes, {remaining} remain")]
    TruncatedTlv { tlv_type: u8, declared: usize, remaining: usize },
    #[error("required field {0} is absent")]
    MissingField(&'static str),
    #[error("field {0} appears more than once")]
    DuplicateField(&'static str),
    #[error("{0} trailing bytes do not form a TLV")]
    TrailingGarbage(usize),
    #[error("TLV type 0x{0:02x} is not valid here")]
    UnexpectedTlv(u8),
    #[error("field {field} has invalid value")]
    InvalidField { field: &'static str },
    #[error("invalid name: {0}")]
    InvalidName(#[from] NameError),
}

fn field_name(tlv_type: u8) -> &'static str {
    match tlv_type {
        tlv::NAME_COMPONENT => "name",
        tlv::CD_BEGIN => "cd",
        tlv::PAYLOAD => "payload",
        tlv::NONCE => "nonce",
        tlv::HOP_LIMIT => "hop_limit",
        tlv::SNIPPET => "snippet",
        tlv::SEQ => "seq",
        _ => "unknown",
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn tlv(&mut self, tlv_type: u8, value: &[u8]) -> Result<(), CodecError> {
        let len = u16::try_from(value.len())
            .map_err(|_| CodecError::OversizeFrame(self.0.len() + TLV_HEADER_LEN + value.len()))?;
        self.0.push(tlv_type);
        self.0.extend_from_slice(&len.to_be_bytes());
        self.0.extend_from_slice(value);
        Ok(())
    }

    fn name(&mut self, name: &Name) -> Result<(), CodecError> {
        for c in name.components() {
            self.tlv(tlv::NAME_COMPONENT, c)?;
        }
        Ok(())
    }
}

pub fn encode(packet: &Packet) -> Result<WireFrame, CodecError> {
    let mut w = Writer(vec![packet.packet_type() as u8]);
    match packet {
        Packet::Interest(i) => {
            w.name(&i.name)?;
            w.tlv(tlv::NONCE, &i.nonce.to_be_bytes())?;
            w.tlv(tlv::HOP_LIMIT, &[i.hop_limit])?;
        }
        Packet::Data(d) => {
            w.name(&d.name)?;
            w.tlv(tlv::PAYLOAD, &d.payload)?;
        }
        Packet::Subscribe { cd } | Packet::Unsubscribe { cd } => w.name(cd.name())?,
        Packet::Publish(p) => {
            if p.cds.len() > MAX_CDS {
                return Err(CodecError::TooManyCds(p.cds.len()));
            }
            if p.cds.is_empty() {
                return Err(CodecError::MissingField("cd"));
            }
            for cd in &p.cds {
                w.tlv(tlv::CD_BEGIN, &[])?;
                w.name(cd.name())?;
            }
            w.tlv(tlv::PAYLOAD, &p.payload)?;
            w.tlv(tlv::SNIPPET, &[u8::from(p.snippet)])?;
            w.tlv(tlv::SEQ, &p.seq.to_be_bytes())?;
        }
    }
    if w.0.len() > MTU {
        return Err(CodecError::OversizeFrame(w.0.len()));
    }
    Ok(WireFrame(w.0))
}

/// Size `packet` would encode to, ignoring the MTU.
pub fn encoded_len(packet: &Packet) -> usize {
    let name_len = |n: &Name| -> usize { n.components().iter().map(|c| TLV_HEADER_LEN + c.len()).sum() };
    1 + match packet {
        Packet::Interest(i) => name_len(&i.name) + (TLV_HEADER_LEN + 4) + (TLV_HEADER_LEN + 1),
        Packet::Data(d) => name_len(&d.name) + TLV_HEADER_LEN + d.payload.len(),
        Packet::Subscribe { cd } | Packet::Unsubscribe { cd } => name_len(cd.name()),
        Packet::Publish(p) => {
            p.cds.iter().map(|cd| TLV_HEADER_LEN + name_len(cd.name())).sum::<usize>()
                + TLV_HEADER_LEN
                + p.payload.len()
                + (TLV_HEADER_LEN + 1)
                + (TLV_HEADER_LEN + 4)
        }
    }
}

/// Walks the TLV list of one frame body in order.
struct Fields<'a> {
    tlvs: Vec<(u8, &'a [u8])>,
    pos: usize,
}

impl<'a> Fields<'a> {
    fn split(mut body: &'a [u8]) -> Result<Self, CodecError> {
        let mut tlvs = Vec::new();
        while !body.is_empty() {
            if body.len() < TLV_HEADER_LEN {
                return Err(CodecError::TrailingGarbage(body.len()));
            }
            let tlv_type = body[0];
            let declared = usize::from(u16::from_be_bytes([body[1], body[2]]));
            let rest = &body[TLV_HEADER_LEN..];
            if declared > rest.len() {
                return Err(CodecError::TruncatedTlv {
                    tlv_type,
                    declared,
                    remaining: rest.len(),
                });
            }
            tlvs.push((tlv_type, &rest[..declared]));
            body = &rest[declared..];
        }
        Ok(Self { tlvs, pos: 0 })
    }

    fn peek_type(&self) -> Option<u8> {
        self.tlvs.get(self.pos).map(|(t, _)| *t)
    }

    fn components(&mut self) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        while let Some((tlv::NAME_COMPONENT, v)) = self.tlvs.get(self.pos) {
            out.push(v.to_vec());
            self.pos += 1;
        }
        out
    }

    fn name(&mut self) -> Result<Name, CodecError> {
        let comps = self.components();
        if comps.is_empty() {
            return Err(self.missing(tlv::NAME_COMPONENT, &[]));
        }
        Ok(Name::from_components(comps)?)
    }

    /// Takes the next TLV, which must be `expected`. `seen` lists the fields
    /// already consumed so a repeat reports as a duplicate.
    fn take(&mut self, expected: u8, seen: &[u8]) -> Result<&'a [u8], CodecError> {
        match self.tlvs.get(self.pos) {
            Some((t, v)) if *t == expected => {
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.missing(expected, seen)),
        }
    }

    fn missing(&self, expected: u8, seen: &[u8]) -> CodecError {
        match self.peek_type() {
            None => CodecError::MissingField(field_name(expected)),
            Some(t) if seen.contains(&t) => CodecError::DuplicateField(field_name(t)),
            Some(t) if (tlv::NAME_COMPONENT..=tlv::SEQ).contains(&t) && t != expected => {
                if self.tlvs[self.pos..].iter().any(|(x, _)| *x == expected) {
                    CodecError::UnexpectedTlv(t)
                } else {
                    CodecError::MissingField(field_name(expected))
                }
            }
            Some(t) => CodecError::UnexpectedTlv(t),
        }
    }

    fn finish(&self, seen: &[u8]) -> Result<(), CodecError> {
        match self.peek_type() {
            None => Ok(()),
            Some(t) if seen.contains(&t) => Err(CodecError::DuplicateField(field_name(t))),
            Some(t) => Err(CodecError::UnexpectedTlv(t)),
        }
    }
}

fn fixed<const N: usize>(value: &[u8], field: &'static str) -> Result<[u8; N], CodecError> {
    value.try_into().map_err(|_| CodecError::InvalidField { field })
}

pub fn decode(frame: &[u8]) -> Result<Packet, CodecError> {
    let (&code, body) = frame.split_first().ok_or(CodecError::EmptyFrame)?;
    let ptype = PacketType::from_code(code).ok_or(CodecError::UnknownPacketType(code))?;
    if frame.len() > MTU {
        return Err(CodecError::OversizeFrame(frame.len()));
    }
    let mut f = Fields::split(body)?;
    use tlv::*;
    let packet = match ptype {
        PacketType::Interest => {
            let name = f.name()?;
            let nonce = u32::from_be_bytes(fixed(f.take(NONCE, &[NAME_COMPONENT])?, "nonce")?);
            let [hop_limit] = fixed(f.take(HOP_LIMIT, &[NAME_COMPONENT, NONCE])?, "hop_limit")?;
            f.finish(&[NAME_COMPONENT, NONCE, HOP_LIMIT])?;
            Packet::Interest(Interest { name, nonce, hop_limit })
        }
        PacketType::Data => {
            let name = f.name()?;
            let payload = f.take(PAYLOAD, &[NAME_COMPONENT])?.to_vec();
            f.finish(&[NAME_COMPONENT, PAYLOAD])?;
            Packet::Data(Data { name, payload })
        }
        PacketType::Subscribe | PacketType::Unsubscribe => {
            let cd = ContentDescriptor::new(f.name()?);
            f.finish(&[NAME_COMPONENT])?;
            if ptype == PacketType::Subscribe {
                Packet::Subscribe { cd }
            } else {
                Packet::Unsubscribe { cd }
            }
        }
        PacketType::Publish => {
            let mut cds = Vec::new();
            while f.peek_type() == Some(CD_BEGIN) {
                if !f.take(CD_BEGIN, &[])?.is_empty() {
                    return Err(CodecError::InvalidField { field: "cd" });
                }
                cds.push(ContentDescriptor::new(f.name()?));
            }
            if cds.is_empty() {
                return Err(f.missing(CD_BEGIN, &[]));
            }
            if cds.len() > MAX_CDS {
                return Err(CodecError::TooManyCds(cds.len()));
            }
            let payload = f.take(PAYLOAD, &[CD_BEGIN, NAME_COMPONENT])?.to_vec();
            let snippet = match fixed::<1>(f.take(SNIPPET, &[CD_BEGIN, NAME_COMPONENT, PAYLOAD])?, "snippet")? {
                [0] => false,
                [1] => true,
                _ => return Err(CodecError::InvalidField { field: "snippet" }),
            };
            let seq = u32::from_be_bytes(fixed(
                f.take(SEQ, &[CD_BEGIN, NAME_COMPONENT, PAYLOAD, SNIPPET])?,
                "seq",
            )?);
            f.finish(&[CD_BEGIN, NAME_COMPONENT, PAYLOAD, SNIPPET, SEQ])?;
            Packet::Publish(Publish { cds, payload, snippet, seq })
        }
    };
    Ok(packet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cd(s: &str) -> ContentDescriptor {
        s.parse().unwrap()
    }

    #[test]
    fn subscribe_bytes() {
        let frame = encode(&Packet::Subscribe { cd: cd("/a") }).unwrap();
        assert_eq!(frame.as_bytes(), &[0x12, 0x01, 0x00, 0x01, b'a']);
        assert_eq!(decode(frame.as_bytes()).unwrap(), Packet::Subscribe { cd: cd("/a") });
    }

    #[test]
    fn interest_layout() {
        let p = Packet::Interest(Interest {
            name: "/a".parse().unwrap(),
            nonce: 0,
            hop_limit: 16,
        });
        let frame = encode(&p).unwrap();
        assert_eq!(
            frame.as_bytes(),
            &[0x10, 0x01, 0x00, 0x01, b'a', 0x04, 0x00, 0x04, 0, 0, 0, 0, 0x05, 0x00, 0x01, 16]
        );
        assert_eq!(frame.len(), encoded_len(&p));
    }

    #[test]
    fn oversize_publish_is_rejected() {
        let p = Packet::Publish(Publish {
            cds: vec![cd("/s/a"), cd("/s/b")],
            payload: vec![0; 120],
            snippet: false,
            seq: 1,
        });
        assert!(matches!(encode(&p), Err(CodecError::OversizeFrame(_))));
    }

    #[test]
    fn too_many_cds() {
        let p = Packet::Publish(Publish {
            cds: (0..5).map(|i| cd(&format!("/c{i}"))).collect(),
            payload: vec![],
            snippet: false,
            seq: 1,
        });
        assert_eq!(encode(&p), Err(CodecError::TooManyCds(5)));
    }

    #[test]
    fn decode_error_examples() {
        assert_eq!(decode(&[0xFF]), Err(CodecError::UnknownPacketType(0xFF)));
        assert_eq!(
            decode(&[0x12, 0x01, 0x00, 0x05, b'a']),
            Err(CodecError::TruncatedTlv { tlv_type: 1, declared: 5, remaining: 1 })
        );
        assert_eq!(decode(&[]), Err(CodecError::EmptyFrame));
        assert_eq!(decode(&[0x12]), Err(CodecError::MissingField("name")));
        assert_eq!(decode(&[0x12, 0x01, 0x00, 0x01, b'a', 0x00]), Err(CodecError::TrailingGarbage(1)));
        // Interest without hop limit.
        assert_eq!(
            decode(&[0x10, 0x01, 0x00, 0x01, b'a', 0x04, 0x00, 0x04, 0, 0, 0, 0]),
            Err(CodecError::MissingField("hop_limit"))
        );
        // Nonce repeated where the hop limit belongs.
        assert_eq!(
            decode(&[0x10, 0x01, 0x00, 0x01, b'a', 0x04, 0x00, 0x04, 0, 0, 0, 0, 0x04, 0x00, 0x04, 0, 0, 0, 0]),
            Err(CodecError::DuplicateField("nonce"))
        );
        // Hop limit before nonce.
        assert_eq!(
            decode(&[0x10, 0x01, 0x00, 0x01, b'a', 0x05, 0x00, 0x01, 9, 0x04, 0x00, 0x04, 0, 0, 0, 0]),
            Err(CodecError::UnexpectedTlv(0x05))
        );
        // Wrong nonce width.
        assert_eq!(
            decode(&[0x10, 0x01, 0x00, 0x01, b'a', 0x04, 0x00, 0x01, 0, 0x05, 0x00, 0x01, 9]),
            Err(CodecError::InvalidField { field: "nonce" })
        );
        // Payload on a subscribe.
        assert_eq!(
            decode(&[0x12, 0x01, 0x00, 0x01, b'a', 0x03, 0x00, 0x00]),
            Err(CodecError::UnexpectedTlv(0x03))
        );
        // Empty name component.
        assert!(matches!(decode(&[0x12, 0x01, 0x00, 0x00]), Err(CodecError::InvalidName(_))));
    }

    #[test]
    fn publish_snippet_flag_must_be_boolean() {
        let p = Packet::Publish(Publish { cds: vec![cd("/s")], payload: vec![7], snippet: true, seq: 3 });
        let mut bytes = encode(&p).unwrap().into_bytes();
        let snippet_at = bytes.len() - 7 - 1;
        assert_eq!(bytes[snippet_at], 1);
        bytes[snippet_at] = 2;
        assert_eq!(decode(&bytes), Err(CodecError::InvalidField { field: "snippet" }));
    }

    #[test]
    fn publication_id_packing() {
        let id = PublicationId::new(3, 77);
        assert_eq!(id.seq(), (3 << 24) | 77);
        assert_eq!(PublicationId::from_seq(id.seq()), id);
    }

    use proptest::prelude::*;

    fn arb_name(max_comps: usize, max_len: usize) -> impl Strategy<Value = Name> {
        let comp = prop::collection::vec(any::<u8>().prop_filter("no slash", |b| *b != b'/'), 1..=max_len);
        prop::collection::vec(comp, 1..=max_comps).prop_map(|c| Name::from_components(c).unwrap())
    }

    fn arb_packet() -> impl Strategy<Value = Packet> {
        let cd = || arb_name(3, 8).prop_map(ContentDescriptor::new);
        prop_oneof![
            (arb_name(4, 12), any::<u32>(), any::<u8>())
                .prop_map(|(name, nonce, hop_limit)| Packet::Interest(Interest { name, nonce, hop_limit })),
            (arb_name(4, 12), prop::collection::vec(any::<u8>(), 0..60))
                .prop_map(|(name, payload)| Packet::Data(Data { name, payload })),
            cd().prop_map(|cd| Packet::Subscribe { cd }),
            cd().prop_map(|cd| Packet::Unsubscribe { cd }),
            (prop::collection::vec(cd(), 1..=MAX_CDS), prop::collection::vec(any::<u8>(), 0..40), any::<bool>(), any::<u32>())
                .prop_map(|(cds, payload, snippet, seq)| Packet::Publish(Publish { cds, payload, snippet, seq })),
        ]
    }

    proptest! {
        #[test]
        fn round_trip_or_oversize(p in arb_packet()) {
            match encode(&p) {
                Ok(frame) => {
                    prop_assert!(frame.len() <= MTU);
                    prop_assert_eq!(frame.len(), encoded_len(&p));
                    prop_assert_eq!(encode(&p).unwrap(), frame.clone());
                    prop_assert_eq!(decode(frame.as_bytes()).unwrap(), p);
                }
                Err(e) => prop_assert_eq!(e, CodecError::OversizeFrame(encoded_len(&p))),
            }
        }

        #[test]
        fn decode_is_total(bytes in prop::collection::vec(any::<u8>(), 0..=256)) {
            if let Ok(p) = decode(&bytes) {
                let frame = encode(&p).unwrap();
                prop_assert_eq!(frame.as_bytes(), &bytes[..]);
            }
        }
    }
}
