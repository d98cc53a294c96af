//! Packet-level network run: hosts, switches, links and endpoints driven by
//! the event engine.

use std::io::Write;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::fabric::{
    Enqueue, FatTreeTopology, FlowId, NodeId, Packet, PacketKind, PathTag, PortId, PortQueue, Router,
    RoutingKind, RoutingPolicy,
};
use crate::sim::{streams, Engine, EventPayload, RngStream, SimTime};
use crate::transport::{AckInfo, Cca, DecreaseCause, DecreaseEvent, Receiver, SwiftConfig, SwiftSender, UdpSource, UdpSourceConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FlowKind {
    Cca { cca: Cca, size_bytes: u64 },
    Udp { source: UdpSourceConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: FlowKind,
    pub start: SimTime,
    pub tracked: bool,
}

impl FlowSpec {
    pub fn is_elephant(&self) -> bool {
        matches!(self.kind, FlowKind::Udp { .. })
    }

    pub fn size_bytes(&self) -> u64 {
        match self.kind {
            FlowKind::Cca { size_bytes, .. } => size_bytes,
            FlowKind::Udp { .. } => 0,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            FlowKind::Cca { cca, .. } => cca.label(),
            FlowKind::Udp { .. } => "udp".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NetConfig {
    pub routing: RoutingPolicy,
    pub swift: SwiftConfig,
    pub seed: u64,
    /// Hard stop; CCA-driven runs normally end earlier, when every flow completes.
    pub deadline: SimTime,
    pub record_cwnd: bool,
}

#[derive(Debug)]
pub enum NetEvent {
    PacketArrival { node: NodeId, packet: Packet },
    DequeueReady { port: PortId },
    RtoExpiry { flow: FlowId },
    PacerTick { flow: FlowId },
    FlowStart { flow: FlowId },
}

impl EventPayload for NetEvent {
    fn kind(&self) -> &'static str {
        match self {
            NetEvent::PacketArrival { .. } => "PacketArrival",
            NetEvent::DequeueReady { .. } => "DequeueReady",
            NetEvent::RtoExpiry { .. } => "RtoExpiry",
            NetEvent::PacerTick { .. } => "PacerTick",
            NetEvent::FlowStart { .. } => "FlowStart",
        }
    }

    fn summary(&self) -> String {
        match self {
            NetEvent::PacketArrival { node, packet } => format!(
                "node={} pkt={} flow={} {:?} seq={} hops={}",
                node.0, packet.id, packet.flow.0, packet.kind, packet.seq, packet.hops
            ),
            NetEvent::DequeueReady { port } => format!("port={}", port.0),
            NetEvent::RtoExpiry { flow } | NetEvent::PacerTick { flow } | NetEvent::FlowStart { flow } => {
                format!("flow={}", flow.0)
            }
        }
    }
}

/// One row of the per-flow congestion-signal time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CwndSample {
    pub flow: u32,
    pub time_ns: f64,
    pub cwnd: f64,
    pub latest_delay_ns: f64,
    pub effective_delay_ns: f64,
    pub target_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowOutcome {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub label: String,
    pub size_bytes: u64,
    pub start: SimTime,
    pub end: Option<SimTime>,
    pub bytes_delivered: u64,
    pub data_packets_sent: u64,
    pub data_packets_dropped: u64,
    pub retransmissions: u64,
    pub rto_count: u64,
    pub decreases: DecreaseCounts,
    /// `None` for UDP flows.
    pub min_cwnd_seen: Option<f64>,
    pub tracked: bool,
    pub elephant: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DecreaseCounts {
    pub delay: u64,
    pub hole: u64,
    pub reordering: u64,
    pub timeout: u64,
}

impl DecreaseCounts {
    fn tally(events: &[DecreaseEvent]) -> Self {
        let mut c = DecreaseCounts::default();
        for e in events {
            match e.cause {
                DecreaseCause::Delay => c.delay += 1,
                DecreaseCause::Hole => c.hole += 1,
                DecreaseCause::Reordering => c.reordering += 1,
                DecreaseCause::Timeout => c.timeout += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.delay + self.hole + self.reordering + self.timeout
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Conservation {
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.injected == self.delivered + self.dropped + self.in_flight
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NetReport {
    pub flows: Vec<FlowOutcome>,
    pub events_processed: u64,
    pub final_time: SimTime,
    pub all_completed: bool,
    pub packets: Conservation,
    pub hop_violations: u64,
    pub duplicate_acks: u64,
    pub cwnd_samples: Vec<CwndSample>,
}

struct Port {
    queue: PortQueue,
    busy: bool,
}

enum Endpoint {
    Cca { sender: SwiftSender, receiver: Receiver, timer_pending: bool },
    Udp { source: UdpSource },
}

struct FlowState {
    spec: FlowSpec,
    pinned: Option<PathTag>,
    endpoint: Endpoint,
    end: Option<SimTime>,
    bytes_delivered: u64,
    data_sent: u64,
    data_dropped: u64,
}

struct Network<'a> {
    topo: &'a FatTreeTopology,
    cfg: &'a NetConfig,
    ports: Vec<Port>,
    router: Router,
    flows: Vec<FlowState>,
    next_packet_id: u64,
    counters: Conservation,
    hop_violations: u64,
    cca_remaining: usize,
    has_cca: bool,
    cwnd_samples: Vec<CwndSample>,
}

/// Runs the flows over the topology until they finish or the deadline passes.
///
/// Flow ids must equal their index in `flows`.
pub fn run_network(
    topo: &FatTreeTopology,
    flows: &[FlowSpec],
    cfg: &NetConfig,
    trace: Option<Box<dyn Write + Send>>,
) -> NetReport {
    let mut engine: Engine<NetEvent> = Engine::new();
    if let Some(sink) = trace {
        engine.set_trace(sink);
    }
    let mut net = Network::new(topo, flows, cfg);
    for f in &net.flows {
        engine.schedule(f.spec.start, NetEvent::FlowStart { flow: f.spec.id });
    }
    let outcome = engine.run_until(cfg.deadline, |eng, fired| net.handle(eng, fired.event));
    // Trace output is diagnostic; a failed flush must not alter results.
    let _ = engine.flush_trace();
    net.counters.in_flight = net.ports.iter().map(|p| p.queue.len() as u64).sum::<u64>()
        + engine
            .pending_events()
            .filter(|e| matches!(e, NetEvent::PacketArrival { .. }))
            .count() as u64;
    net.report(outcome.events_processed, outcome.final_time)
}

impl<'a> Network<'a> {
    fn new(topo: &'a FatTreeTopology, specs: &[FlowSpec], cfg: &'a NetConfig) -> Self {
        let mut router = Router::new(cfg.routing, RngStream::new(cfg.seed, streams::ROUTING));
        let mut flows = Vec::with_capacity(specs.len());
        let mut cca_remaining = 0;
        for (i, spec) in specs.iter().enumerate() {
            assert_eq!(spec.id.0 as usize, i, "flow ids must be dense and ordered");
            let hops = topo.hop_distance(spec.src, spec.dst);
            let (endpoint, pin) = match &spec.kind {
                FlowKind::Cca { cca, size_bytes } => {
                    cca_remaining += 1;
                    let sender = SwiftSender::new(cfg.swift.clone(), *cca, *size_bytes, hops);
                    let receiver = Receiver::new(sender.segment_count());
                    let pin = cfg.routing.kind == RoutingKind::SinglePath;
                    (Endpoint::Cca { sender, receiver, timer_pending: false }, pin)
                }
                FlowKind::Udp { source } => {
                    (Endpoint::Udp { source: UdpSource::new(source, topo.link_speed_bps) }, true)
                }
            };
            let pinned = pin.then(|| router.pin_path(topo.half()));
            flows.push(FlowState {
                spec: spec.clone(),
                pinned,
                endpoint,
                end: None,
                bytes_delivered: 0,
                data_sent: 0,
                data_dropped: 0,
            });
        }
        let ports = topo
            .links
            .iter()
            .map(|l| Port { queue: PortQueue::new(l.capacity_bytes), busy: false })
            .collect();
        Network {
            topo,
            cfg,
            ports,
            router,
            flows,
            next_packet_id: 0,
            counters: Conservation::default(),
            hop_violations: 0,
            cca_remaining,
            has_cca: cca_remaining > 0,
            cwnd_samples: Vec::new(),
        }
    }

    fn handle(&mut self, eng: &mut Engine<NetEvent>, event: NetEvent) -> ControlFlow<()> {
        match event {
            NetEvent::PacketArrival { node, packet } => self.on_arrival(eng, node, packet),
            NetEvent::DequeueReady { port } => {
                self.ports[port.0 as usize].busy = false;
                self.start_transmission(eng, port);
            }
            NetEvent::RtoExpiry { flow } => self.on_rto(eng, flow),
            NetEvent::PacerTick { flow } => self.on_pacer(eng, flow),
            NetEvent::FlowStart { flow } => match self.flows[flow.0 as usize].endpoint {
                Endpoint::Cca { .. } => self.pump(eng, flow),
                Endpoint::Udp { .. } => self.on_pacer(eng, flow),
            },
        }
        if self.has_cca && self.cca_remaining == 0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }

    fn new_packet(&mut self, flow: FlowId, src: NodeId, dst: NodeId, kind: PacketKind, now: SimTime) -> Packet {
        let id = self.next_packet_id;
        self.next_packet_id += 1;
        Packet {
            id,
            flow,
            src,
            dst,
            kind,
            seq: 0,
            size_bytes: 0,
            sent_at: now,
            tx_order: 0,
            echo_sent_at: SimTime::ZERO,
            hops: 0,
            path: PathTag::default(),
            pinned: self.flows[flow.0 as usize].pinned,
        }
    }

    /// Hands a packet to the NIC of the host it starts from.
    fn inject(&mut self, eng: &mut Engine<NetEvent>, packet: Packet) {
        self.counters.injected += 1;
        let port = self.topo.node(packet.src).ports[0];
        self.enqueue(eng, port, packet);
    }

    fn enqueue(&mut self, eng: &mut Engine<NetEvent>, port: PortId, packet: Packet) {
        let flow = packet.flow;
        let kind = packet.kind;
        match self.ports[port.0 as usize].queue.enqueue(packet) {
            Enqueue::Accepted => self.start_transmission(eng, port),
            Enqueue::Dropped(_) => {
                self.counters.dropped += 1;
                if kind != PacketKind::Ack {
                    self.flows[flow.0 as usize].data_dropped += 1;
                }
            }
        }
    }

    fn start_transmission(&mut self, eng: &mut Engine<NetEvent>, port: PortId) {
        let p = &mut self.ports[port.0 as usize];
        if p.busy {
            return;
        }
        let Some(mut packet) = p.queue.dequeue() else { return };
        p.busy = true;
        let link = self.topo.link(port);
        let ser = SimTime::serialization(packet.size_bytes as u64, link.speed_bps);
        let now = eng.now();
        packet.hops += 1;
        eng.schedule(now + ser, NetEvent::DequeueReady { port });
        eng.schedule(
            now + ser + link.delay + link.extra_delay,
            NetEvent::PacketArrival { node: link.to, packet },
        );
    }

    fn on_arrival(&mut self, eng: &mut Engine<NetEvent>, node: NodeId, mut packet: Packet) {
        if node == packet.dst {
            self.deliver(eng, packet);
            return;
        }
        debug_assert!(!self.topo.is_host(node), "packet reached the wrong host");
        let next = self.topo.next_hops(node, packet.dst);
        let ports = &self.ports;
        let port = self
            .router
            .select_next_hop(node, &mut packet, next, |p| ports[p.0 as usize].queue.occupancy_bytes());
        self.enqueue(eng, port, packet);
    }

    fn deliver(&mut self, eng: &mut Engine<NetEvent>, packet: Packet) {
        self.counters.delivered += 1;
        if packet.hops != self.topo.hop_distance(packet.src, packet.dst) {
            self.hop_violations += 1;
        }
        let now = eng.now();
        let fid = packet.flow;
        match packet.kind {
            PacketKind::Datagram => {
                self.flows[fid.0 as usize].bytes_delivered += packet.size_bytes as u64;
            }
            PacketKind::Data => {
                let mss = self.cfg.swift.mss as u64;
                let ack_bytes = self.cfg.swift.ack_bytes;
                let flow = &mut self.flows[fid.0 as usize];
                let Endpoint::Cca { receiver, .. } = &mut flow.endpoint else {
                    unreachable!("data packet for a UDP flow")
                };
                let first = receiver.on_data((packet.seq / mss) as u32, packet.size_bytes);
                let done = receiver.is_complete();
                flow.bytes_delivered = receiver.bytes_received();
                if first && done && flow.end.is_none() {
                    flow.end = Some(now);
                    self.cca_remaining -= 1;
                }
                let mut ack = self.new_packet(fid, packet.dst, packet.src, PacketKind::Ack, now);
                ack.seq = packet.seq;
                ack.size_bytes = ack_bytes;
                ack.tx_order = packet.tx_order;
                ack.echo_sent_at = packet.sent_at;
                self.inject(eng, ack);
            }
            PacketKind::Ack => {
                let mss = self.cfg.swift.mss as u64;
                let record = self.cfg.record_cwnd;
                let flow = &mut self.flows[fid.0 as usize];
                let Endpoint::Cca { sender, .. } = &mut flow.endpoint else {
                    unreachable!("ACK for a UDP flow")
                };
                let info = AckInfo {
                    segment: (packet.seq / mss) as u32,
                    tx_order: packet.tx_order,
                    echo_sent_at: packet.echo_sent_at,
                };
                let outcome = sender.on_ack(now, info);
                if record && !outcome.duplicate {
                    if let Some(s) = sender.snapshot() {
                        self.cwnd_samples.push(CwndSample {
                            flow: fid.0,
                            time_ns: now.as_ns_f64(),
                            cwnd: s.cwnd,
                            latest_delay_ns: s.latest_delay.as_ns_f64(),
                            effective_delay_ns: s.effective_delay.as_ns_f64(),
                            target_ns: s.target.as_ns_f64(),
                        });
                    }
                }
                self.pump(eng, fid);
            }
        }
    }

    /// Sends whatever the window allows and makes sure a timer is pending.
    fn pump(&mut self, eng: &mut Engine<NetEvent>, fid: FlowId) {
        let now = eng.now();
        let (src, dst) = {
            let s = &self.flows[fid.0 as usize].spec;
            (s.src, s.dst)
        };
        loop {
            let Endpoint::Cca { sender, .. } = &mut self.flows[fid.0 as usize].endpoint else { return };
            let Some(tx) = sender.poll_send(now) else { break };
            self.flows[fid.0 as usize].data_sent += 1;
            let mut pkt = self.new_packet(fid, src, dst, PacketKind::Data, now);
            pkt.seq = tx.seq;
            pkt.size_bytes = tx.size_bytes;
            pkt.tx_order = tx.tx_order;
            self.inject(eng, pkt);
        }
        self.arm_timer(eng, fid);
    }

    fn arm_timer(&mut self, eng: &mut Engine<NetEvent>, fid: FlowId) {
        let now = eng.now();
        let flow = &mut self.flows[fid.0 as usize];
        if flow.end.is_some() {
            return;
        }
        if let Endpoint::Cca { sender, timer_pending, .. } = &mut flow.endpoint {
            if !*timer_pending {
                if let Some(deadline) = sender.rto_deadline() {
                    *timer_pending = true;
                    eng.schedule(deadline.max(now), NetEvent::RtoExpiry { flow: fid });
                }
            }
        }
    }

    fn on_rto(&mut self, eng: &mut Engine<NetEvent>, fid: FlowId) {
        let now = eng.now();
        let flow = &mut self.flows[fid.0 as usize];
        let Endpoint::Cca { sender, timer_pending, .. } = &mut flow.endpoint else { return };
        *timer_pending = false;
        if flow.end.is_some() {
            return;
        }
        if sender.on_timeout(now) {
            eng.trace_note(format_args!("Timeout flow={}", fid.0));
            self.pump(eng, fid);
        } else {
            self.arm_timer(eng, fid);
        }
    }

    fn on_pacer(&mut self, eng: &mut Engine<NetEvent>, fid: FlowId) {
        let now = eng.now();
        let (src, dst) = {
            let s = &self.flows[fid.0 as usize].spec;
            (s.src, s.dst)
        };
        let flow = &mut self.flows[fid.0 as usize];
        let Endpoint::Udp { source } = &mut flow.endpoint else { return };
        let (seq, size, next) = source.tick(now);
        flow.data_sent += 1;
        let mut pkt = self.new_packet(fid, src, dst, PacketKind::Datagram, now);
        pkt.seq = seq;
        pkt.size_bytes = size;
        self.inject(eng, pkt);
        if next <= self.cfg.deadline {
            eng.schedule(next, NetEvent::PacerTick { flow: fid });
        }
    }

    fn report(self, events_processed: u64, final_time: SimTime) -> NetReport {
        let mut duplicate_acks = 0;
        let flows = self
            .flows
            .into_iter()
            .map(|f| {
                let (retransmissions, rto_count, decreases, min_cwnd_seen) = match &f.endpoint {
                    Endpoint::Cca { sender, .. } => {
                        let st = sender.stats();
                        duplicate_acks += st.duplicate_acks;
                        (st.retransmissions, st.rto_count, DecreaseCounts::tally(sender.decreases()), Some(st.min_cwnd_seen))
                    }
                    Endpoint::Udp { .. } => (0, 0, DecreaseCounts::default(), None),
                };
                FlowOutcome {
                    id: f.spec.id,
                    src: f.spec.src,
                    dst: f.spec.dst,
                    label: f.spec.label(),
                    size_bytes: f.spec.size_bytes(),
                    start: f.spec.start,
                    end: f.end,
                    bytes_delivered: f.bytes_delivered,
                    data_packets_sent: f.data_sent,
                    data_packets_dropped: f.data_dropped,
                    retransmissions,
                    rto_count,
                    decreases,
                    min_cwnd_seen,
                    tracked: f.spec.tracked,
                    elephant: f.spec.is_elephant(),
                }
            })
            .collect();
        NetReport {
            flows,
            events_processed,
            final_time,
            all_completed: self.cca_remaining == 0,
            packets: self.counters,
            hop_violations: self.hop_violations,
            duplicate_acks,
            cwnd_samples: self.cwnd_samples,
        }
    }
}
