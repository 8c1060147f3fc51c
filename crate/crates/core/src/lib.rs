//! Asynchronous, actor-based risk propagation over temporal contact graphs.
//!
//! Users exchange timestamped risk scores with their contacts. Each actor owns
//! a block of users and forwards a score only while it remains a meaningful
//! fraction of the sender's own initial message, so propagation stops by
//! itself without global iterations or barriers.
//!
//! * [`graph`]: risk scores, contacts and the contact graph.
//! * [`partition`]: user-to-actor assignment.
//! * [`engine`]: the actor runtime and message kernel.
//! * [`reachability`]: estimated and actual message reachability.
//! * [`synth`]: synthetic graphs and scores.
//! * [`io`]: CSV/JSON formats and SocioPatterns ingestion.
//! * [`experiment`]: parameter sweeps and scaling benchmarks.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod partition;
pub mod reachability;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

pub const DEFAULT_SEED: u64 = 12345;

/// Reference "now" used when none is given: 2020-09-13T12:26:40Z.
pub const DEFAULT_T_NOW: i64 = 1_600_000_000;
