use std::collections::VecDeque;

use super::Packet;

#[derive(Debug)]
pub enum Enqueue {
    Accepted,
    Dropped(Packet),
}

/// Tail-drop FIFO in front of one output port.
#[derive(Debug, Clone)]
pub struct PortQueue {
    capacity_bytes: u64,
    occupancy_bytes: u64,
    packets: VecDeque<Packet>,
    drops: u64,
}

impl PortQueue {
    pub fn new(capacity_bytes: u64) -> Self {
        PortQueue {
            capacity_bytes,
            occupancy_bytes: 0,
            packets: VecDeque::new(),
            drops: 0,
        }
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_bytes
    }

    pub fn occupancy_bytes(&self) -> u64 {
        self.occupancy_bytes
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn drops(&self) -> u64 {
        self.drops
    }

    /// Accepts iff the packet fits in the remaining capacity.
    pub fn enqueue(&mut self, packet: Packet) -> Enqueue {
        let size = packet.size_bytes as u64;
        if self.occupancy_bytes.saturating_add(size) > self.capacity_bytes {
            self.drops += 1;
            return Enqueue::Dropped(packet);
        }
        self.occupancy_bytes += size;
        self.packets.push_back(packet);
        Enqueue::Accepted
    }

    pub fn dequeue(&mut self) -> Option<Packet> {
        let packet = self.packets.pop_front()?;
        self.occupancy_bytes -= packet.size_bytes as u64;
        Some(packet)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.packets.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::{FlowId, NodeId, PacketKind, PathTag};
    use crate::sim::SimTime;

    fn pkt(id: u64, size: u32) -> Packet {
        Packet {
            id,
            flow: FlowId(0),
            src: NodeId(0),
            dst: NodeId(1),
            kind: PacketKind::Data,
            seq: 0,
            size_bytes: size,
            sent_at: SimTime::ZERO,
            tx_order: 0,
            echo_sent_at: SimTime::ZERO,
            hops: 0,
            path: PathTag::default(),
            pinned: None,
        }
    }

    #[test]
    fn empty_queue_accepts() {
        let mut q = PortQueue::new(4096);
        assert!(matches!(q.enqueue(pkt(0, 4096)), Enqueue::Accepted));
        assert_eq!(q.occupancy_bytes(), 4096);
    }

    #[test]
    fn full_queue_drops_without_changing_occupancy() {
        let mut q = PortQueue::new(8192);
        q.enqueue(pkt(0, 4096));
        q.enqueue(pkt(1, 4096));
        assert!(matches!(q.enqueue(pkt(2, 64)), Enqueue::Dropped(p) if p.id == 2));
        assert_eq!(q.occupancy_bytes(), 8192);
        assert_eq!(q.drops(), 1);
    }

    #[test]
    fn fifo_order() {
        let mut q = PortQueue::new(1 << 20);
        for i in 0..10 {
            q.enqueue(pkt(i, 100 + i as u32));
        }
        let out: Vec<u64> = std::iter::from_fn(|| q.dequeue()).map(|p| p.id).collect();
        assert_eq!(out, (0..10).collect::<Vec<_>>());
        assert_eq!(q.occupancy_bytes(), 0);
    }
}
