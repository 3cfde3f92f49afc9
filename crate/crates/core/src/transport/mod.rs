//! Point-to-point nonblocking messaging between N ranks with a
//! progress-poll contract.
//!
//! Two modes share one API: `VirtualTime` assigns deterministic virtual
//! costs to computation and message transfer, `RealTime` runs each rank on
//! its own thread and measures wall time. Collective code is written once
//! against [`Endpoint`] and runs under either mode.

mod config;
mod endpoint;
mod report;
mod world;

pub use endpoint::{Endpoint, Request};
pub use report::{Category, RankReport, RunReport, CATEGORIES};
pub use world::CommWorld;

use thiserror::Error;

pub type Rank = usize;
pub type Tag = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    VirtualTime,
    RealTime,
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("invalid rank {0} in a world of size {1}")]
    InvalidRank(Rank, usize),
    #[error("send to self is not supported")]
    SendToSelf,
    #[error("unknown or already-consumed request")]
    UnknownRequest,
    #[error("incoming message of {got} bytes exceeds posted maximum {max}")]
    MessageTooLong { got: usize, max: usize },
    #[error("nested charge")]
    NestedCharge,
    #[error("world shut down while waiting")]
    WorldShutDown,
    #[error("rank {0} panicked")]
    RankPanicked(Rank),
    #[error("messages left undelivered at quiescence")]
    UnconsumedMessages,
    #[error("config: {0}")]
    Config(String),
}

/// Cost model for the virtual-time mode.
///
/// Latency and bandwidth shape message transfer; the per-element and
/// per-byte costs price compression, decompression, reduction, and copies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Per-message latency, seconds.
    pub latency: f64,
    /// Link bandwidth, bytes per second.
    pub bandwidth: f64,
    /// Compression cost, seconds per input element.
    pub compress_cost: f64,
    /// Decompression cost, seconds per output element.
    pub decompress_cost: f64,
    /// Reduction cost, seconds per element.
    pub reduce_cost: f64,
    /// Copy cost, seconds per byte.
    pub memcpy_cost: f64,
}

impl Default for SimParams {
    /// Defaults shaped like a 100 Gbps fabric with a microsecond-scale
    /// latency and a fast single-thread codec.
    fn default() -> Self {
        Self {
            latency: 1e-6,
            bandwidth: 12.5e9,
            compress_cost: 5e-9,
            decompress_cost: 2.5e-9,
            reduce_cost: 1e-9,
            memcpy_cost: 0.1e-9,
        }
    }
}

impl SimParams {
    /// Reads parameters from a flat `key=value` config text.
    ///
    /// Keys: `latency_us`, `bandwidth_gbps`, `compress_cost_ns_per_elem`,
    /// `decompress_cost_ns_per_elem`, `reduce_cost_ns_per_elem`,
    /// `memcpy_cost_ns_per_byte`. Missing keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self, TransportError> {
        config::parse(text)
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        let nonneg = [
            self.latency,
            self.compress_cost,
            self.decompress_cost,
            self.reduce_cost,
            self.memcpy_cost,
        ];
        if nonneg.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(TransportError::Config("costs must be non-negative and finite".into()));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(TransportError::Config("bandwidth must be positive".into()));
        }
        Ok(())
    }
}
