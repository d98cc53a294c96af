use serde::{Deserialize, Serialize};

use super::NodeId;
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PacketKind {
    /// Congestion-controlled data, acknowledged per packet.
    Data,
    Ack,
    /// Open-loop datagram from a UDP source; never acknowledged.
    Datagram,
}

/// Path choices made so far, recorded for tracing and used by single-path routing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathTag {
    pub agg: Option<u8>,
    pub core: Option<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub flow: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: PacketKind,
    /// Byte offset of the payload within the flow. ACKs carry the acknowledged data offset.
    pub seq: u64,
    pub size_bytes: u32,
    /// When the sender handed this transmission to its NIC.
    pub sent_at: SimTime,
    /// Sender-local transmission counter; echoed back so the sender knows which copy arrived.
    pub tx_order: u64,
    /// For ACKs: `sent_at` of the data packet being acknowledged.
    pub echo_sent_at: SimTime,
    /// Links traversed so far.
    pub hops: u8,
    pub path: PathTag,
    /// Fixed path for single-path routing, chosen at flow start.
    pub pinned: Option<PathTag>,
}

impl Packet {
    pub fn is_ack(&self) -> bool {
        self.kind == PacketKind::Ack
    }

    /// Key under which per-flow routing state is kept; data and ACKs spray independently.
    pub fn routing_key(&self) -> (FlowId, bool) {
        (self.flow, self.is_ack())
    }
}
