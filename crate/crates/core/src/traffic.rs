//! Publication workloads and the polling client of the query/response baseline.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::codec::{self, Data, Interest, Packet, Publish, MTU};
use crate::naming::{ContentDescriptor, Name};
use crate::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrafficError {
    #[error("rank {k} outside 1..={catalog}")]
    OutOfRange { k: usize, catalog: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
}

/// Content popularity over ranks `1..=K`, truncated and renormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Zipf { s: f64 },
    Geometric { p: f64 },
    Uniform,
    /// Binomial over `n` trials, support shifted by one; `None` means `K-1`.
    Binomial { n: Option<u32>, p: f64 },
}

impl Distribution {
    pub fn kind(&self) -> &'static str {
        match self {
            Distribution::Zipf { .. } => "zipf",
            Distribution::Geometric { .. } => "geometric",
            Distribution::Uniform => "uniform",
            Distribution::Binomial { .. } => "binomial",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            Distribution::Zipf { s } => Some(s),
            Distribution::Geometric { p } | Distribution::Binomial { p, .. } => Some(p),
            Distribution::Uniform => None,
        }
    }

    /// Builds a distribution from its config name and parameter.
    pub fn from_kind(kind: &str, param: Option<f64>) -> Result<Self, TrafficError> {
        let need = |what: &str| {
            param.ok_or_else(|| TrafficError::InvalidDistribution(format!("{kind} needs {what}")))
        };
        let dist = match kind {
            "zipf" => Distribution::Zipf { s: param.unwrap_or(1.0) },
            "geometric" => Distribution::Geometric { p: need("p")? },
            "uniform" => Distribution::Uniform,
            "binomial" => Distribution::Binomial { n: None, p: need("p")? },
            other => return Err(TrafficError::InvalidDistribution(format!("unknown distribution {other:?}"))),
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |m: &str| Err(TrafficError::InvalidDistribution(m.to_string()));
        match *self {
            Distribution::Zipf { s } if !(s > 0.0 && s.is_finite()) => bad("zipf exponent must be > 0"),
            Distribution::Geometric { p } if !(p > 0.0 && p < 1.0) => bad("geometric p must be in (0, 1)"),
            Distribution::Binomial { p, .. } if !(p > 0.0 && p < 1.0) => bad("binomial p must be in (0, 1)"),
            _ => Ok(()),
        }
    }

    fn weight(&self, k: usize, catalog: usize) -> f64 {
        match *self {
            Distribution::Zipf { s } => (k as f64).powf(-s),
            Distribution::Geometric { p } => p * (1.0 - p).powi(k as i32 - 1),
            Distribution::Uniform => 1.0,
            Distribution::Binomial { n, p } => {
                let n = n.unwrap_or(catalog as u32 - 1) as u64;
                let j = k as u64 - 1;
                if j > n {
                    return 0.0;
                }
                binomial_coefficient(n, j) * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)
            }
        }
    }

    /// The full table `pmf(1..=K)`.
    pub fn table(&self, catalog: usize) -> Vec<f64> {
        let weights: Vec<f64> = (1..=catalog).map(|k| self.weight(k, catalog)).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}({p})", self.kind()),
            None => f.write_str(self.kind()),
        }
    }
}

fn binomial_coefficient(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn pmf(dist: &Distribution, k: usize, catalog: usize) -> Result<f64, TrafficError> {
    if k == 0 || k > catalog {
        return Err(TrafficError::OutOfRange { k, catalog });
    }
    Ok(dist.table(catalog)[k - 1])
}

/// Inverse-CDF sampler over `1..=K`.
#[derive(Debug, Clone)]
pub struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new(dist: &Distribution, catalog: usize) -> Self {
        let mut acc = 0.0;
        let cdf = dist
            .table(catalog)
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|c| *c <= u);
        idx.min(self.cdf.len() - 1) + 1
    }
}

pub fn sample<R: Rng + ?Sized>(dist: &Distribution, catalog: usize, rng: &mut R) -> usize {
    Sampler::new(dist, catalog).sample(rng)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogItem {
    pub id: usize,
    pub cds: Vec<ContentDescriptor>,
    pub payload_size: usize,
}

/// The kinds of content a publisher emits. Item `k` is published under
/// `<root>/k<k>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentCatalog {
    pub root: Name,
    pub items: Vec<CatalogItem>,
}

/// Pull-mode payloads start with the producer's latest sequence number.
const PULL_HEADER_LEN: usize = 4;
/// Largest sequence / round numbers whose decimal form must still fit the MTU.
const MAX_NAME_NUMBER: u32 = 99_999_999;

impl ContentCatalog {
    /// Payload of kind `k` is `8 + 6 * (k - 1)` bytes.
    pub fn standard(root: Name, kinds: usize) -> Result<Self, TrafficError> {
        Self::with_sizes(root, (1..=kinds).map(|k| 8 + 6 * (k - 1)).collect())
    }

    pub fn with_sizes(root: Name, sizes: Vec<usize>) -> Result<Self, TrafficError> {
        if sizes.is_empty() {
            return Err(TrafficError::InvalidCatalog("catalog is empty".into()));
        }
        let items = sizes
            .into_iter()
            .enumerate()
            .map(|(i, payload_size)| {
                let cd = root
                    .child(format!("k{}", i + 1))
                    .map_err(|e| TrafficError::InvalidCatalog(e.to_string()))?;
                Ok(CatalogItem {
                    id: i + 1,
                    cds: vec![ContentDescriptor::new(cd)],
                    payload_size,
                })
            })
            .collect::<Result<Vec<_>, TrafficError>>()?;
        let catalog = Self { root, items };
        catalog.check_mtu(&"/data".parse().expect("static name"))?;
        Ok(catalog)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: usize) -> &CatalogItem {
        &self.items[id - 1]
    }

    pub fn root_cd(&self) -> ContentDescriptor {
        ContentDescriptor::new(self.root.clone())
    }

    /// Deterministic payload bytes of item `id`.
    pub fn payload(&self, id: usize) -> Vec<u8> {
        let item = self.item(id);
        (0..item.payload_size).map(|i| (id as u8).wrapping_mul(31).wrapping_add(i as u8)).collect()
    }

    /// Every item must fit the MTU as a publication and as a pull-mode Data.
    pub fn check_mtu(&self, pull_prefix: &Name) -> Result<(), TrafficError> {
        for item in &self.items {
            let publish = Packet::Publish(Publish {
                cds: item.cds.clone(),
                payload: vec![0; item.payload_size],
                snippet: false,
                seq: u32::MAX,
            });
            let data = Packet::Data(Data {
                name: poll_name(pull_prefix, MAX_NAME_NUMBER, u64::from(MAX_NAME_NUMBER)),
                payload: vec![0; PULL_HEADER_LEN + item.payload_size],
            });
            for p in [publish, data] {
                let len = codec::encoded_len(&p);
                if len > MTU {
                    return Err(TrafficError::InvalidCatalog(format!(
                        "item {} encodes to {len} bytes as {} (MTU {MTU})",
                        item.id,
                        p.packet_type()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn poll_name(prefix: &Name, seq: u32, round: u64) -> Name {
    prefix
        .child(seq.to_string())
        .and_then(|n| n.child(round.to_string()))
        .expect("poll prefix leaves room for two components")
}

/// Parses `<prefix>/<seq>/<round>`.
pub fn parse_poll_name(prefix: &Name, name: &Name) -> Option<(u32, u64)> {
    if !prefix.is_prefix_of(name) || name.len() != prefix.len() + 2 {
        return None;
    }
    let comp = |i: usize| std::str::from_utf8(&name.components()[prefix.len() + i]).ok();
    Some((comp(0)?.parse().ok()?, comp(1)?.parse().ok()?))
}

/// Producer response payload: latest published sequence number, then content.
pub fn encode_pull_payload(latest: u32, content: &[u8]) -> Vec<u8> {
    let mut out = latest.to_be_bytes().to_vec();
    out.extend_from_slice(content);
    out
}

pub fn decode_pull_payload(payload: &[u8]) -> Option<(u32, &[u8])> {
    let (head, rest) = payload.split_first_chunk::<PULL_HEADER_LEN>()?;
    Some((u32::from_be_bytes(*head), rest))
}

/// Query/response consumer that discovers new content by polling.
///
/// Each poll asks for `<prefix>/<next>/<round>` where `next` is the first
/// sequence number not yet obtained and `round` the poll period index; the
/// round component keeps every poll's name fresh so caches never answer it
/// with stale content, while clients polling in the same period share names
/// and aggregate in PITs. When a response shows the producer has more, the
/// client asks for the next item right away.
#[derive(Debug, Clone)]
pub struct PollingClient {
    prefix: Name,
    interval: SimTime,
    phase: SimTime,
    next_seq: u32,
}

/// One item obtained by a polling client.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Obtained {
    pub seq: u32,
    /// Whether the producer reported newer content still to fetch.
    pub more: bool,
}

impl PollingClient {
    pub fn new(prefix: Name, interval: SimTime, phase: SimTime) -> Self {
        assert!(interval > 0, "poll interval must be positive");
        Self {
            prefix,
            interval,
            phase: phase % interval,
            next_seq: 1,
        }
    }

    pub fn interval(&self) -> SimTime {
        self.interval
    }

    pub fn next_seq(&self) -> u32 {
        self.next_seq
    }

    /// Scheduled poll times in `[0, horizon)`.
    pub fn poll_times(&self, horizon: SimTime) -> impl Iterator<Item = SimTime> {
        (self.phase..horizon).step_by(self.interval as usize)
    }

    pub fn interest(&self, now: SimTime, nonce: u32) -> Interest {
        Interest {
            name: poll_name(&self.prefix, self.next_seq, now / self.interval),
            nonce,
            hop_limit: crate::engine::DEFAULT_HOP_LIMIT,
        }
    }

    /// Consumes a Data answering one of this client's polls.
    pub fn on_data(&mut self, data: &Data) -> Option<Obtained> {
        let (seq, _) = parse_poll_name(&self.prefix, &data.name)?;
        let (latest, content) = decode_pull_payload(&data.payload)?;
        if seq != self.next_seq || content.is_empty() {
            return None;
        }
        self.next_seq += 1;
        Some(Obtained {
            seq,
            more: latest >= self.next_seq,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pmf_examples() {
        assert_eq!(pmf(&Distribution::Uniform, 3, 10).unwrap(), 0.1);
        // 1 / H_10, H_10 = 7381/2520.
        let zipf = pmf(&Distribution::Zipf { s: 1.0 }, 1, 10).unwrap();
        assert!((zipf - 2520.0 / 7381.0).abs() < 1e-15);
        assert!((zipf - 0.34142).abs() < 1e-5);
        let binom = pmf(&Distribution::Binomial { n: None, p: 0.5 }, 1, 10).unwrap();
        assert!((binom - 1.0 / 512.0).abs() < 1e-15);
        assert_eq!(
            pmf(&Distribution::Uniform, 0, 10),
            Err(TrafficError::OutOfRange { k: 0, catalog: 10 })
        );
        assert_eq!(
            pmf(&Distribution::Uniform, 11, 10),
            Err(TrafficError::OutOfRange { k: 11, catalog: 10 })
        );
    }

    #[test]
    fn geometric_is_renormalized_truncation() {
        let p = 0.25f64;
        let mass = 1.0 - (1.0 - p).powi(10);
        let got = pmf(&Distribution::Geometric { p }, 4, 10).unwrap();
        assert!((got - p * (1.0 - p).powi(3) / mass).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_seeded() {
        let dist = Distribution::Zipf { s: 1.0 };
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample(&dist, 10, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
        assert!(draw(5).iter().all(|k| (1..=10).contains(k)));
    }

    #[test]
    fn uniform_frequencies() {
        let s = Sampler::new(&Distribution::Uniform, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 10];
        for _ in 0..100_000 {
            counts[s.sample(&mut rng) - 1] += 1;
        }
        for c in counts {
            assert!((c as f64 / 100_000.0 - 0.1).abs() < 0.01);
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::from_kind("zipf", Some(-1.0)).is_err());
        assert!(Distribution::from_kind("zipf", Some(0.0)).is_err());
        assert!(Distribution::from_kind("geometric", Some(1.0)).is_err());
        assert!(Distribution::from_kind("geometric", None).is_err());
        assert!(Distribution::from_kind("binomial", Some(0.0)).is_err());
        assert!(Distribution::from_kind("pareto", Some(1.0)).is_err());
        assert_eq!(Distribution::from_kind("uniform", None).unwrap(), Distribution::Uniform);
    }

    #[test]
    fn standard_catalog_fits_mtu() {
        let c = ContentCatalog::standard("/iot".parse().unwrap(), 10).unwrap();
        assert_eq!(c.len(), 10);
        assert_eq!(c.item(10).cds[0].to_string(), "/iot/k10");
        assert_eq!(c.payload(3).len(), 20);
        assert!(ContentCatalog::with_sizes("/iot".parse().unwrap(), vec![120]).is_err());
    }

    #[test]
    fn polling_client_progression() {
        let prefix: Name = "/data".parse().unwrap();
        let mut c = PollingClient::new(prefix.clone(), 1000, 500);
        assert_eq!(c.poll_times(3000).collect::<Vec<_>>(), vec![500, 1500, 2500]);
        let i = c.interest(1500, 9);
        assert_eq!(i.name.to_string(), "/data/1/1");
        let reply = |name: &Name, latest, content: &[u8]| Data {
            name: name.clone(),
            payload: encode_pull_payload(latest, content),
        };
        assert_eq!(c.on_data(&reply(&i.name, 0, &[])), None);
        assert_eq!(c.on_data(&reply(&i.name, 2, &[1])), Some(Obtained { seq: 1, more: true }));
        assert_eq!(c.next_seq(), 2);
        // A stale answer for seq 1 is ignored.
        assert_eq!(c.on_data(&reply(&i.name, 2, &[1])), None);
        let j = c.interest(1500, 10);
        assert_eq!(c.on_data(&reply(&j.name, 2, &[2])), Some(Obtained { seq: 2, more: false }));
    }
}
