use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::topology::{NextHops, UpTier};
use super::{FlowId, NodeId, Packet, PathTag, PortId};
use crate::sim::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingKind {
    /// Every packet of a flow follows one path fixed at flow start.
    SinglePath,
    /// Successive packets of a flow cycle through the uplinks in port order.
    RoundRobinSpray,
    /// Uplink drawn uniformly per packet.
    RandomSpray,
    /// Uplink with the smallest quantized queue occupancy, ties drawn uniformly.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoutingPolicy {
    pub kind: RoutingKind,
    pub adaptive_quantum_bytes: u64,
}

/// Per-switch routing state for one run.
#[derive(Debug)]
pub struct Router {
    policy: RoutingPolicy,
    rng: RngStream,
    round_robin: HashMap<(NodeId, FlowId, bool), u32>,
}

impl Router {
    pub fn new(policy: RoutingPolicy, rng: RngStream) -> Self {
        assert!(
            policy.kind != RoutingKind::Adaptive || policy.adaptive_quantum_bytes > 0,
            "adaptive routing needs a positive quantum"
        );
        Router {
            policy,
            rng,
            round_robin: HashMap::new(),
        }
    }

    pub fn policy(&self) -> RoutingPolicy {
        self.policy
    }

    /// Draws a fixed path for a single-path flow.
    pub fn pin_path(&mut self, radix_half: u32) -> PathTag {
        PathTag {
            agg: Some(self.rng.below(radix_half as u64) as u8),
            core: Some(self.rng.below(radix_half as u64) as u8),
        }
    }

    /// Chooses the output port at switch `at`. Downlinks are deterministic; the
    /// policy only decides among equal-cost uplinks. Pinned packets ignore the policy.
    pub fn select_next_hop(
        &mut self,
        at: NodeId,
        packet: &mut Packet,
        next: NextHops<'_>,
        occupancy: impl Fn(PortId) -> u64,
    ) -> PortId {
        let (ports, tier) = match next {
            NextHops::Fixed(port) => return port,
            NextHops::Up { ports, tier } => (ports, tier),
        };
        let idx = if let Some(pin) = packet.pinned {
            let choice = match tier {
                UpTier::EdgeToAgg => pin.agg,
                UpTier::AggToCore => pin.core,
            };
            choice.expect("pinned path is complete") as usize % ports.len()
        } else {
            match self.policy.kind {
                RoutingKind::SinglePath => {
                    panic!("single-path routing requires a pinned path on every packet")
                }
                RoutingKind::RoundRobinSpray => {
                    let (flow, ack) = packet.routing_key();
                    let counter = self.round_robin.entry((at, flow, ack)).or_insert(0);
                    let idx = *counter as usize % ports.len();
                    *counter = counter.wrapping_add(1);
                    idx
                }
                RoutingKind::RandomSpray => self.rng.index(ports.len()),
                RoutingKind::Adaptive => {
                    let quanta: Vec<u64> = ports
                        .iter()
                        .map(|&p| occupancy(p) / self.policy.adaptive_quantum_bytes)
                        .collect();
                    adaptive_choice(&quanta, &mut self.rng)
                }
            }
        };
        match tier {
            UpTier::EdgeToAgg => packet.path.agg = Some(idx as u8),
            UpTier::AggToCore => packet.path.core = Some(idx as u8),
        }
        ports[idx]
    }
}

/// Index of a minimal entry, uniform among ties.
pub fn adaptive_choice(quanta: &[u64], rng: &mut RngStream) -> usize {
    let min = *quanta.iter().min().expect("at least one candidate port");
    let ties: Vec<usize> = quanta
        .iter()
        .enumerate()
        .filter(|(_, &q)| q == min)
        .map(|(i, _)| i)
        .collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.index(ties.len())]
    }
}
