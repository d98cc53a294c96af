//! Fat-tree fabric: topology construction, FIFO port queues and routing.

mod packet;
mod queue;
mod routing;
mod topology;

use serde::{Deserialize, Serialize};

pub use packet::{FlowId, Packet, PacketKind, PathTag};
pub use queue::{Enqueue, PortQueue};
pub use routing::{adaptive_choice, Router, RoutingKind, RoutingPolicy};
pub use topology::{build_fat_tree, link_delay_for_rtt, FatTreeTopology, Link, NextHops, Node, NodeKind, UpTier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

/// Identifies a directed link and the output queue in front of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PortId(pub u32);
