use serde::Serialize;

use super::{NodeId, PortId};
use crate::error::{Error, Result};
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "tier", rename_all = "snake_case")]
pub enum NodeKind {
    Host { pod: u32, edge: u32, slot: u32 },
    Edge { pod: u32, index: u32 },
    Agg { pod: u32, index: u32 },
    /// Core `(group, index)` connects to aggregation switch `group` of every pod.
    Core { group: u32, index: u32 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub ports: Vec<PortId>,
}

/// A directed link; its [`PortId`] is also the id of the queue at its tail.
#[derive(Clone, Debug, Serialize)]
pub struct Link {
    pub id: PortId,
    pub from: NodeId,
    pub to: NodeId,
    pub speed_bps: u64,
    #[serde(rename = "delay_ps", serialize_with = "ser_ps")]
    pub delay: SimTime,
    /// Extra one-way delay used to make exactly one path slow.
    #[serde(rename = "extra_delay_ps", serialize_with = "ser_ps")]
    pub extra_delay: SimTime,
    pub capacity_bytes: u64,
}

fn ser_ps<S: serde::Serializer>(t: &SimTime, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(t.as_ps())
}

/// Where a packet can go next from a given node.
#[derive(Debug, Clone, Copy)]
pub enum NextHops<'a> {
    /// Deterministic downlink (or the host's single NIC port).
    Fixed(PortId),
    /// Equal-cost uplinks; a routing policy picks one.
    Up { ports: &'a [PortId], tier: UpTier },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpTier {
    EdgeToAgg,
    AggToCore,
}

/// Three-tier k-ary fat tree: `k` pods of `k/2` edge and `k/2` aggregation
/// switches, `(k/2)^2` cores and `k^3/4` hosts, every link at the same speed.
#[derive(Clone, Debug, Serialize)]
pub struct FatTreeTopology {
    pub radix_k: u32,
    pub link_speed_bps: u64,
    #[serde(rename = "link_delay_ps", serialize_with = "ser_ps")]
    pub link_delay: SimTime,
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
}

pub fn build_fat_tree(
    radix_k: u32,
    link_speed_bps: u64,
    link_delay: SimTime,
    queue_capacity_bytes: u64,
    host_queue_capacity_bytes: u64,
) -> Result<FatTreeTopology> {
    if radix_k < 4 || !radix_k.is_multiple_of(2) {
        return Err(Error::config(format!("fat-tree radix must be even and >= 4, got {radix_k}")));
    }
    if link_speed_bps == 0 {
        return Err(Error::config("link speed must be positive"));
    }
    let k = radix_k;
    let h = k / 2;
    let n_hosts = k * k * k / 4;
    let n_edge = k * h;
    let n_agg = k * h;
    let n_core = h * h;

    let mut nodes = Vec::with_capacity((n_hosts + n_edge + n_agg + n_core) as usize);
    for pod in 0..k {
        for edge in 0..h {
            for slot in 0..h {
                nodes.push(NodeKind::Host { pod, edge, slot });
            }
        }
    }
    for pod in 0..k {
        for index in 0..h {
            nodes.push(NodeKind::Edge { pod, index });
        }
    }
    for pod in 0..k {
        for index in 0..h {
            nodes.push(NodeKind::Agg { pod, index });
        }
    }
    for group in 0..h {
        for index in 0..h {
            nodes.push(NodeKind::Core { group, index });
        }
    }
    let mut topo = FatTreeTopology {
        radix_k,
        link_speed_bps,
        link_delay,
        nodes: nodes
            .into_iter()
            .enumerate()
            .map(|(i, kind)| Node { id: NodeId(i as u32), kind, ports: Vec::new() })
            .collect(),
        links: Vec::new(),
    };

    // Port order per node is part of the routing contract: edge and agg
    // switches list their k/2 downlinks first, then their k/2 uplinks.
    for host in 0..n_hosts {
        let (pod, edge, _) = topo.host_coords(NodeId(host));
        topo.add_link(NodeId(host), topo.edge(pod, edge), host_queue_capacity_bytes);
    }
    for pod in 0..k {
        for edge in 0..h {
            let e = topo.edge(pod, edge);
            for slot in 0..h {
                topo.add_link(e, topo.host(pod, edge, slot), queue_capacity_bytes);
            }
            for agg in 0..h {
                topo.add_link(e, topo.agg(pod, agg), queue_capacity_bytes);
            }
        }
    }
    for pod in 0..k {
        for agg in 0..h {
            let a = topo.agg(pod, agg);
            for edge in 0..h {
                topo.add_link(a, topo.edge(pod, edge), queue_capacity_bytes);
            }
            for index in 0..h {
                topo.add_link(a, topo.core(agg, index), queue_capacity_bytes);
            }
        }
    }
    for group in 0..h {
        for index in 0..h {
            let c = topo.core(group, index);
            for pod in 0..k {
                topo.add_link(c, topo.agg(pod, group), queue_capacity_bytes);
            }
        }
    }
    Ok(topo)
}

/// Per-link propagation delay that makes the empty-network inter-pod RTT
/// (6 data hops out, 6 ACK hops back, store-and-forward) equal `rtt`.
pub fn link_delay_for_rtt(rtt: SimTime, link_speed_bps: u64, data_bytes: u32, ack_bytes: u32) -> Result<SimTime> {
    let ser = SimTime::serialization(data_bytes as u64, link_speed_bps)
        + SimTime::serialization(ack_bytes as u64, link_speed_bps);
    let serialization_total = SimTime(ser.as_ps() * 6);
    if rtt <= serialization_total {
        return Err(Error::config(format!(
            "target RTT {rtt} is shorter than the serialization time {serialization_total}"
        )));
    }
    let remaining = rtt - serialization_total;
    Ok(SimTime((remaining.as_ps() + 6) / 12))
}

impl FatTreeTopology {
    fn add_link(&mut self, from: NodeId, to: NodeId, capacity_bytes: u64) {
        let id = PortId(self.links.len() as u32);
        self.links.push(Link {
            id,
            from,
            to,
            speed_bps: self.link_speed_bps,
            delay: self.link_delay,
            extra_delay: SimTime::ZERO,
            capacity_bytes,
        });
        self.nodes[from.0 as usize].ports.push(id);
    }

    pub fn half(&self) -> u32 {
        self.radix_k / 2
    }

    pub fn host_count(&self) -> u32 {
        self.radix_k * self.radix_k * self.radix_k / 4
    }

    pub fn core_count(&self) -> u32 {
        self.half() * self.half()
    }

    pub fn hosts(&self) -> impl Iterator<Item = NodeId> {
        (0..self.host_count()).map(NodeId)
    }

    pub fn is_host(&self, node: NodeId) -> bool {
        node.0 < self.host_count()
    }

    pub fn host(&self, pod: u32, edge: u32, slot: u32) -> NodeId {
        let h = self.half();
        NodeId(pod * h * h + edge * h + slot)
    }

    pub fn edge(&self, pod: u32, index: u32) -> NodeId {
        NodeId(self.host_count() + pod * self.half() + index)
    }

    pub fn agg(&self, pod: u32, index: u32) -> NodeId {
        let k = self.radix_k;
        NodeId(self.host_count() + k * self.half() + pod * self.half() + index)
    }

    pub fn core(&self, group: u32, index: u32) -> NodeId {
        let k = self.radix_k;
        NodeId(self.host_count() + 2 * k * self.half() + group * self.half() + index)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn link(&self, port: PortId) -> &Link {
        &self.links[port.0 as usize]
    }

    /// `(pod, edge, slot)` of a host.
    pub fn host_coords(&self, host: NodeId) -> (u32, u32, u32) {
        match self.node(host).kind {
            NodeKind::Host { pod, edge, slot } => (pod, edge, slot),
            other => panic!("{host:?} is not a host: {other:?}"),
        }
    }

    pub fn pod_of(&self, host: NodeId) -> u32 {
        self.host_coords(host).0
    }

    /// Global leaf (edge switch) index of a host.
    pub fn leaf_of(&self, host: NodeId) -> u32 {
        let (pod, edge, _) = self.host_coords(host);
        pod * self.half() + edge
    }

    pub fn hosts_under_leaf(&self, leaf: u32) -> impl Iterator<Item = NodeId> + '_ {
        let h = self.half();
        (0..h).map(move |slot| NodeId(leaf * h + slot))
    }

    /// Links on any shortest path between two hosts: 2 under one leaf, 4 within a pod, 6 across pods.
    pub fn hop_distance(&self, a: NodeId, b: NodeId) -> u8 {
        let (pa, ea, _) = self.host_coords(a);
        let (pb, eb, _) = self.host_coords(b);
        if a == b {
            0
        } else if pa == pb && ea == eb {
            2
        } else if pa == pb {
            4
        } else {
            6
        }
    }

    /// Number of distinct shortest paths between two hosts.
    pub fn path_count(&self, a: NodeId, b: NodeId) -> u32 {
        match self.hop_distance(a, b) {
            0 | 2 => 1,
            4 => self.half(),
            _ => self.half() * self.half(),
        }
    }

    pub fn next_hops(&self, at: NodeId, dst: NodeId) -> NextHops<'_> {
        let node = self.node(at);
        let h = self.half() as usize;
        let (dpod, dedge, dslot) = self.host_coords(dst);
        match node.kind {
            NodeKind::Host { .. } => NextHops::Fixed(node.ports[0]),
            NodeKind::Edge { pod, index } => {
                if pod == dpod && index == dedge {
                    NextHops::Fixed(node.ports[dslot as usize])
                } else {
                    NextHops::Up { ports: &node.ports[h..2 * h], tier: UpTier::EdgeToAgg }
                }
            }
            NodeKind::Agg { pod, .. } => {
                if pod == dpod {
                    NextHops::Fixed(node.ports[dedge as usize])
                } else {
                    NextHops::Up { ports: &node.ports[h..2 * h], tier: UpTier::AggToCore }
                }
            }
            NodeKind::Core { .. } => NextHops::Fixed(node.ports[dpod as usize]),
        }
    }

    /// The downlink from core `(group, index)` into `pod`.
    pub fn core_downlink(&self, group: u32, index: u32, pod: u32) -> PortId {
        self.node(self.core(group, index)).ports[pod as usize]
    }

    pub fn set_extra_delay(&mut self, port: PortId, extra: SimTime) {
        self.links[port.0 as usize].extra_delay = extra;
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const G100: u64 = 100_000_000_000;

    fn tree(k: u32) -> FatTreeTopology {
        build_fat_tree(k, G100, SimTime::from_us(1), 1 << 20, u64::MAX).unwrap()
    }

    #[test]
    fn host_counts() {
        assert_eq!(tree(4).host_count(), 16);
        assert_eq!(tree(6).host_count(), 54);
        assert_eq!(tree(10).host_count(), 250);
        assert_eq!(tree(22).host_count(), 2662);
    }

    #[test]
    fn rejects_bad_radix() {
        assert!(build_fat_tree(5, G100, SimTime::ZERO, 1, 1).is_err());
        assert!(build_fat_tree(2, G100, SimTime::ZERO, 1, 1).is_err());
    }

    #[test]
    fn every_switch_has_k_ports_and_hosts_one() {
        let t = tree(6);
        for node in &t.nodes {
            let expected = if t.is_host(node.id) { 1 } else { 6 };
            assert_eq!(node.ports.len(), expected, "{:?}", node.kind);
        }
        // 2 * (hosts + edge-agg + agg-core) directed links
        let undirected = 54 + 6 * 3 * 3 + 6 * 3 * 3;
        assert_eq!(t.links.len(), 2 * undirected);
    }

    #[test]
    fn non_blocking_capacity_per_tier() {
        let t = tree(8);
        for node in &t.nodes {
            if t.is_host(node.id) {
                continue;
            }
            let speeds: Vec<u64> = node.ports.iter().map(|&p| t.link(p).speed_bps).collect();
            if matches!(node.kind, NodeKind::Core { .. }) {
                continue;
            }
            let (down, up) = speeds.split_at(speeds.len() / 2);
            assert_eq!(down.iter().sum::<u64>(), up.iter().sum::<u64>());
        }
    }

    #[test]
    fn calibrated_link_delay_reproduces_rtt() {
        let d = link_delay_for_rtt(SimTime::from_us(14), G100, 4096, 64).unwrap();
        let ser = SimTime::serialization(4096, G100) + SimTime::serialization(64, G100);
        let rtt = d.as_ps() * 12 + ser.as_ps() * 6;
        assert!((rtt as i64 - 14_000_000).abs() <= 6, "rtt {rtt}");
        assert!(link_delay_for_rtt(SimTime::from_ns(1), G100, 4096, 64).is_err());
    }

    #[test]
    fn json_dump_lists_links() {
        let t = tree(4);
        let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["radix_k"], 4);
        assert_eq!(v["links"].as_array().unwrap().len(), t.links.len());
        assert_eq!(v["links"][0]["speed_bps"], G100);
    }
}
