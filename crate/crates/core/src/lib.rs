//! Packet-level datacenter network simulator and analytical throughput models
//! for delay-based congestion control under per-packet load balancing.
//!
//! The crate is organised bottom-up:
//!
//! * [`sim`]: virtual clock, event queue and seeded random streams.
//! * [`fabric`]: k-ary fat-tree topologies, FIFO port queues and routing policies.
//! * [`transport`]: Swift, LSwift and MSwift senders plus open-loop UDP sources.
//! * [`net`]: the event loop that ties fabric and transport together.
//! * [`models`]: closed-form throughput laws, the coupled fixed-point solver
//!   and the discrete sawtooth oracle.
//! * [`scenarios`], [`metrics`], [`experiment`]: workload generation,
//!   statistics and config-driven experiment runs.
//! * [`verify`]: the acceptance checks, shared by the test suite and the CLI.

pub mod error;
pub mod experiment;
pub mod fabric;
pub mod metrics;
pub mod models;
pub mod net;
pub mod scenarios;
pub mod sim;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use sim::SimTime;
