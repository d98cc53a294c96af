//! Endpoint logic: the Swift family of senders, the ACK-every-packet
//! receiver, and open-loop UDP sources.

mod config;
mod history;
mod swift;
mod udp;

pub use config::{flow_scaling_fraction, Cca, SwiftConfig};
pub use history::{history_size, median, DelayHistory, HistoryPolicy, MIN_WINDOW_HISTORY};
pub use swift::{
    AckInfo, AckOutcome, DecreaseCause, DecreaseEvent, SenderStats, SignalSnapshot, SwiftSender,
    Transmission,
};
pub use udp::{UdpSource, UdpSourceConfig};

/// Tracks which segments of a flow have arrived.
#[derive(Clone, Debug)]
pub struct Receiver {
    received: Vec<bool>,
    distinct: u32,
    bytes: u64,
}

impl Receiver {
    pub fn new(segments: u32) -> Self {
        Receiver { received: vec![false; segments as usize], distinct: 0, bytes: 0 }
    }

    /// Records an arrival; returns true the first time a segment shows up.
    pub fn on_data(&mut self, segment: u32, size_bytes: u32) -> bool {
        match self.received.get_mut(segment as usize) {
            Some(slot) if !*slot => {
                *slot = true;
                self.distinct += 1;
                self.bytes += size_bytes as u64;
                true
            }
            _ => false,
        }
    }

    pub fn bytes_received(&self) -> u64 {
        self.bytes
    }

    pub fn is_complete(&self) -> bool {
        self.distinct as usize == self.received.len()
    }
}
