//! COPSS-lite: content-oriented publish/subscribe on top of NDN-style
//! forwarding, for small multi-hop IoT networks, plus the deterministic
//! simulator used to evaluate it.
//!
//! - [`naming`]: hierarchical names, content descriptors, FIB trie
//! - [`codec`]: TLV wire format with a 128-byte MTU
//! - [`engine`]: per-node CS/PIT/FIB/ST forwarding rules
//! - [`routing`]: shortest-delay trees, RP placement, FIB installation
//! - [`simnet`]: event-driven network simulator with sleep and a controller
//! - [`traffic`]: popularity distributions, catalogs, polling clients
//! - [`metrics`], [`config`], [`suite`]: measurement and experiment runner

pub mod codec;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod naming;
pub mod routing;
pub mod simnet;
pub mod suite;
pub mod traffic;

/// Simulated time in milliseconds.
pub type SimTime = u64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Name(#[from] naming::NameError),
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
    #[error(transparent)]
    Routing(#[from] routing::RoutingError),
    #[error(transparent)]
    Traffic(#[from] traffic::TrafficError),
    #[error(transparent)]
    Sim(#[from] simnet::SimError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
}
