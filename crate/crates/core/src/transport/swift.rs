//! Swift-family sender state machine.
//!
//! The sender knows nothing about the network: the caller asks it for the
//! next transmission, feeds ACKs back, and drives the retransmission timer.

use std::collections::{BTreeMap, VecDeque};

use super::config::{Cca, SwiftConfig};
use super::history::DelayHistory;
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SegState {
    Unsent,
    InFlight,
    /// Waiting in the retransmit queue.
    Lost,
    Acked,
}

#[derive(Clone, Debug)]
struct Segment {
    state: SegState,
    tx_order: u64,
    sent_at: SimTime,
    later_acked: u32,
    /// Flagged as a SACK hole but not yet treated as lost (LSwift/MSwift).
    delayed: bool,
}

/// One packet the caller should put on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub segment: u32,
    pub seq: u64,
    pub size_bytes: u32,
    pub tx_order: u64,
    pub retransmit: bool,
}

/// The fields of an ACK the sender needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AckInfo {
    pub segment: u32,
    pub tx_order: u64,
    pub echo_sent_at: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecreaseCause {
    Delay,
    /// Swift treating a SACK hole as a loss.
    Hole,
    /// The successive-delay counter reached its threshold.
    Reordering,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecreaseEvent {
    pub at: SimTime,
    pub srtt: SimTime,
    pub factor: f64,
    pub cause: DecreaseCause,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AckOutcome {
    pub duplicate: bool,
    pub decrease: Option<DecreaseCause>,
    pub holes: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SenderStats {
    pub packets_sent: u64,
    pub retransmissions: u64,
    pub rto_count: u64,
    pub duplicate_acks: u64,
    pub min_cwnd_seen: f64,
}

/// The latest values of the congestion signal, for time-series dumps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalSnapshot {
    pub cwnd: f64,
    pub latest_delay: SimTime,
    pub effective_delay: SimTime,
    pub target: SimTime,
}

#[derive(Clone, Debug)]
pub struct SwiftSender {
    cfg: SwiftConfig,
    cca: Cca,
    hops: u8,
    size_bytes: u64,
    segments: Vec<Segment>,
    next_new: u32,
    acked: u32,
    outstanding: BTreeMap<u64, u32>,
    retx: VecDeque<u32>,
    next_tx_order: u64,
    cwnd: f64,
    srtt: Option<SimTime>,
    last_decrease: Option<SimTime>,
    history: DelayHistory,
    successive_delayed: u32,
    consecutive_rtos: u32,
    stats: SenderStats,
    decreases: Vec<DecreaseEvent>,
    snapshot: Option<SignalSnapshot>,
}

impl SwiftSender {
    /// `hops` is the forward-path link count used for the target's topology term.
    pub fn new(cfg: SwiftConfig, cca: Cca, size_bytes: u64, hops: u8) -> Self {
        assert!(size_bytes > 0, "flow must carry data");
        let mss = cfg.mss as u64;
        let count = size_bytes.div_ceil(mss);
        let count = u32::try_from(count).expect("flow too large for 32-bit segment index");
        let blank = Segment {
            state: SegState::Unsent,
            tx_order: 0,
            sent_at: SimTime::ZERO,
            later_acked: 0,
            delayed: false,
        };
        let cwnd = cfg.init_cwnd.max(cfg.min_cwnd);
        SwiftSender {
            history: DelayHistory::new(cca.history_policy()),
            segments: vec![blank; count as usize],
            next_new: 0,
            acked: 0,
            outstanding: BTreeMap::new(),
            retx: VecDeque::new(),
            next_tx_order: 0,
            cwnd,
            srtt: None,
            last_decrease: None,
            successive_delayed: 0,
            consecutive_rtos: 0,
            stats: SenderStats { min_cwnd_seen: cwnd, ..Default::default() },
            decreases: Vec::new(),
            snapshot: None,
            cfg,
            cca,
            hops,
            size_bytes,
        }
    }

    pub fn cwnd(&self) -> f64 {
        self.cwnd
    }

    pub fn cca(&self) -> Cca {
        self.cca
    }

    pub fn config(&self) -> &SwiftConfig {
        &self.cfg
    }

    pub fn inflight(&self) -> usize {
        self.outstanding.len()
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.srtt
    }

    pub fn stats(&self) -> SenderStats {
        self.stats
    }

    pub fn decreases(&self) -> &[DecreaseEvent] {
        &self.decreases
    }

    pub fn snapshot(&self) -> Option<SignalSnapshot> {
        self.snapshot
    }

    pub fn history(&self) -> &DelayHistory {
        &self.history
    }

    pub fn segment_count(&self) -> u32 {
        self.segments.len() as u32
    }

    pub fn successive_delayed(&self) -> u32 {
        self.successive_delayed
    }

    pub fn is_complete(&self) -> bool {
        self.acked as usize == self.segments.len()
    }

    pub fn retransmit_queue_len(&self) -> usize {
        self.retx.len()
    }

    /// Checks that no segment is both acknowledged and queued or outstanding.
    pub fn sack_consistent(&self) -> bool {
        self.retx.iter().all(|&i| self.segments[i as usize].state == SegState::Lost)
            && self
                .outstanding
                .iter()
                .all(|(&t, &i)| {
                    let s = &self.segments[i as usize];
                    s.state == SegState::InFlight && s.tx_order == t
                })
    }

    fn segment_size(&self, idx: u32) -> u32 {
        let mss = self.cfg.mss as u64;
        let start = idx as u64 * mss;
        (self.size_bytes - start).min(mss) as u32
    }

    /// Returns the next packet to send if the window allows one; retransmissions go first.
    pub fn poll_send(&mut self, now: SimTime) -> Option<Transmission> {
        if self.outstanding.len() as f64 >= self.cwnd {
            return None;
        }
        let (idx, retransmit) = loop {
            match self.retx.pop_front() {
                Some(i) if self.segments[i as usize].state == SegState::Lost => break (i, true),
                Some(_) => continue,
                None if (self.next_new as usize) < self.segments.len() => {
                    let i = self.next_new;
                    self.next_new += 1;
                    break (i, false);
                }
                None => return None,
            }
        };
        let tx_order = self.next_tx_order;
        self.next_tx_order += 1;
        let seg = &mut self.segments[idx as usize];
        seg.state = SegState::InFlight;
        seg.tx_order = tx_order;
        seg.sent_at = now;
        seg.later_acked = 0;
        seg.delayed = false;
        self.outstanding.insert(tx_order, idx);
        self.stats.packets_sent += 1;
        if retransmit {
            self.stats.retransmissions += 1;
        }
        Some(Transmission {
            segment: idx,
            seq: idx as u64 * self.cfg.mss as u64,
            size_bytes: self.segment_size(idx),
            tx_order,
            retransmit,
        })
    }

    fn may_decrease(&self, now: SimTime) -> bool {
        match (self.last_decrease, self.srtt) {
            (Some(last), Some(srtt)) => now.saturating_sub(last) >= srtt,
            _ => true,
        }
    }

    fn apply_decrease(&mut self, now: SimTime, factor: f64, cause: DecreaseCause) {
        self.cwnd = (self.cwnd * factor).max(self.cfg.min_cwnd);
        self.last_decrease = Some(now);
        self.decreases.push(DecreaseEvent {
            at: now,
            srtt: self.srtt.unwrap_or(SimTime::ZERO),
            factor,
            cause,
        });
        self.note_cwnd();
    }

    fn note_cwnd(&mut self) {
        self.cwnd = self.cwnd.max(self.cfg.min_cwnd);
        if self.cwnd < self.stats.min_cwnd_seen {
            self.stats.min_cwnd_seen = self.cwnd;
        }
    }

    pub fn on_ack(&mut self, now: SimTime, ack: AckInfo) -> AckOutcome {
        let mut outcome = AckOutcome::default();
        let known = self
            .segments
            .get(ack.segment as usize)
            .is_some_and(|s| matches!(s.state, SegState::InFlight | SegState::Lost));
        if !known {
            self.stats.duplicate_acks += 1;
            outcome.duplicate = true;
            return outcome;
        }

        // Delay signal.
        let sample = now.saturating_sub(ack.echo_sent_at);
        self.srtt = Some(match self.srtt {
            None => sample,
            Some(s) => SimTime((s.as_ps() * 7 + sample.as_ps()) / 8),
        });
        self.history.push(sample, self.cwnd);
        let effective = self.history.effective_delay().unwrap_or(sample);
        let target = self.cfg.target_delay(self.cwnd, self.hops);
        if effective < target {
            self.cwnd += self.cfg.ai / self.cwnd;
        } else if self.may_decrease(now) {
            let d = effective.as_ps() as f64;
            let t = target.as_ps() as f64;
            let factor = (1.0 - self.cfg.beta * (d - t) / d).max(1.0 - self.cfg.max_mdf);
            self.apply_decrease(now, factor, DecreaseCause::Delay);
            outcome.decrease = Some(DecreaseCause::Delay);
        }
        self.snapshot = Some(SignalSnapshot {
            cwnd: self.cwnd,
            latest_delay: sample,
            effective_delay: effective,
            target,
        });

        // SACK bookkeeping.
        let seg = &mut self.segments[ack.segment as usize];
        let was_delayed = seg.delayed;
        if seg.state == SegState::InFlight {
            self.outstanding.remove(&seg.tx_order);
        } else {
            self.retx.retain(|&i| i != ack.segment);
        }
        seg.state = SegState::Acked;
        seg.delayed = false;
        self.acked += 1;
        self.consecutive_rtos = 0;
        if was_delayed {
            self.successive_delayed = 0;
        }

        outcome.holes = self.detect_holes(now, ack.tx_order, &mut outcome);
        self.note_cwnd();
        outcome
    }

    fn detect_holes(&mut self, now: SimTime, acked_tx: u64, outcome: &mut AckOutcome) -> u32 {
        let threshold = self.cfg.reorder_threshold;
        let mut holes = Vec::new();
        for (&tx, &idx) in self.outstanding.range(..acked_tx) {
            let seg = &mut self.segments[idx as usize];
            seg.later_acked += 1;
            if seg.later_acked == threshold {
                holes.push((tx, idx));
            }
        }
        if holes.is_empty() {
            return 0;
        }
        let count = holes.len() as u32;
        let mm_factor = 1.0 - self.cfg.max_mdf;
        if !self.cca.tolerates_reordering() {
            for (tx, idx) in holes {
                self.mark_lost(tx, idx);
            }
            if self.may_decrease(now) {
                self.apply_decrease(now, mm_factor, DecreaseCause::Hole);
                outcome.decrease = Some(DecreaseCause::Hole);
            }
            return count;
        }
        for (_, idx) in holes {
            self.segments[idx as usize].delayed = true;
            self.successive_delayed += 1;
        }
        if self.successive_delayed >= self.cfg.lazy_decrease_count {
            self.successive_delayed = 0;
            let flagged: Vec<(u64, u32)> = self
                .outstanding
                .iter()
                .filter(|(_, &i)| self.segments[i as usize].delayed)
                .map(|(&t, &i)| (t, i))
                .collect();
            for (tx, idx) in flagged {
                self.mark_lost(tx, idx);
            }
            if self.may_decrease(now) {
                self.apply_decrease(now, mm_factor, DecreaseCause::Reordering);
                outcome.decrease = Some(DecreaseCause::Reordering);
            }
        }
        count
    }

    fn mark_lost(&mut self, tx: u64, idx: u32) {
        self.outstanding.remove(&tx);
        let seg = &mut self.segments[idx as usize];
        seg.state = SegState::Lost;
        seg.delayed = false;
        self.retx.push_back(idx);
    }

    /// When the retransmission timer for the oldest outstanding packet fires.
    pub fn rto_deadline(&self) -> Option<SimTime> {
        let (_, &idx) = self.outstanding.first_key_value()?;
        Some(self.segments[idx as usize].sent_at + self.cfg.rto)
    }

    /// Handles a timer wake-up. Returns true when a timeout actually fired.
    pub fn on_timeout(&mut self, now: SimTime) -> bool {
        match self.rto_deadline() {
            Some(deadline) if deadline <= now => {}
            _ => return false,
        }
        let (tx, idx) = self.outstanding.pop_first().expect("deadline implies outstanding");
        debug_assert_eq!(self.segments[idx as usize].tx_order, tx);
        let seg = &mut self.segments[idx as usize];
        seg.state = SegState::Lost;
        seg.delayed = false;
        self.retx.push_front(idx);
        self.stats.rto_count += 1;
        self.consecutive_rtos += 1;
        let factor = if self.consecutive_rtos >= self.cfg.rto_reset_threshold {
            self.cfg.min_cwnd / self.cwnd
        } else {
            1.0 - self.cfg.max_mdf
        };
        self.apply_decrease(now, factor.min(1.0), DecreaseCause::Timeout);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::history::HistoryPolicy;
    use proptest::prelude::*;

    const MSS: u64 = 4096;

    fn cfg() -> SwiftConfig {
        SwiftConfig { init_cwnd: 10.0, ..Default::default() }
    }

    fn us(v: u64) -> SimTime {
        SimTime::from_us(v)
    }

    fn send_all(s: &mut SwiftSender, now: SimTime) -> Vec<Transmission> {
        std::iter::from_fn(|| s.poll_send(now)).collect()
    }

    fn ack(t: &Transmission, sent: SimTime) -> AckInfo {
        AckInfo { segment: t.segment, tx_order: t.tx_order, echo_sent_at: sent }
    }

    #[test]
    fn window_limits_sends_and_last_segment_is_short() {
        let mut s = SwiftSender::new(cfg(), Cca::Swift, 3 * MSS + 100, 6);
        let sent = send_all(&mut s, SimTime::ZERO);
        assert_eq!(sent.len(), 4);
        assert_eq!(sent[3].size_bytes, 100);
        assert_eq!(sent[3].seq, 3 * MSS);
        let mut s = SwiftSender::new(cfg(), Cca::Swift, 100 * MSS, 6);
        assert_eq!(send_all(&mut s, SimTime::ZERO).len(), 10);
    }

    #[test]
    fn below_target_is_pure_additive_increase() {
        let mut s = SwiftSender::new(cfg(), Cca::Swift, 1000 * MSS, 6);
        let mut now = SimTime::ZERO;
        let mut w0 = s.cwnd();
        for _round in 0..5 {
            let batch = send_all(&mut s, now);
            let start = now;
            now += us(10);
            for t in &batch {
                s.on_ack(now, ack(t, start));
            }
            // One window of ACKs adds ~ai.
            assert!((s.cwnd() - (w0 + 1.0)).abs() < 0.1, "{} vs {}", s.cwnd(), w0);
            w0 = s.cwnd();
        }
        assert!(s.decreases().is_empty());
    }

    #[test]
    fn large_overshoot_caps_decrease_at_max_mdf() {
        let mut s = SwiftSender::new(cfg(), Cca::Swift, 100 * MSS, 6);
        let batch = send_all(&mut s, SimTime::ZERO);
        let out = s.on_ack(us(500), ack(&batch[0], SimTime::ZERO));
        assert_eq!(out.decrease, Some(DecreaseCause::Delay));
        assert!((s.cwnd() - 5.0).abs() < 1e-12);
        assert_eq!(s.decreases()[0].factor, 0.5);
        // Second over-target ACK inside one srtt is ignored.
        s.on_ack(us(501), ack(&batch[1], SimTime::ZERO));
        assert_eq!(s.decreases().len(), 1);
    }

    #[test]
    fn moderate_overshoot_scales_with_beta() {
        let c = cfg();
        let mut s = SwiftSender::new(c.clone(), Cca::Swift, 100 * MSS, 6);
        let batch = send_all(&mut s, SimTime::ZERO);
        let t = c.target_delay(10.0, 6).as_ps() as f64;
        let d = 20e6;
        s.on_ack(SimTime(d as u64), ack(&batch[0], SimTime::ZERO));
        let expected = 10.0 * (1.0 - 0.8 * (d - t) / d);
        assert!((s.cwnd() - expected).abs() < 1e-9, "{} vs {expected}", s.cwnd());
    }

    /// Sends a window, then ACKs all but `late` in order, so `late` becomes a hole.
    fn one_hole(cca: Cca) -> (SwiftSender, Vec<Transmission>) {
        let mut s = SwiftSender::new(cfg(), cca, 100 * MSS, 6);
        let batch = send_all(&mut s, SimTime::ZERO);
        for t in batch.iter().skip(1).take(3) {
            s.on_ack(us(5), ack(t, SimTime::ZERO));
        }
        (s, batch)
    }

    #[test]
    fn swift_hole_retransmits_and_halves() {
        let (mut s, batch) = one_hole(Cca::Swift);
        assert_eq!(s.decreases().len(), 1);
        assert_eq!(s.decreases()[0].cause, DecreaseCause::Hole);
        assert!((s.decreases()[0].factor - 0.5).abs() < 1e-12);
        assert_eq!(s.retransmit_queue_len(), 1);
        let next = s.poll_send(us(5));
        // cwnd ~5 with 6 outstanding: nothing yet.
        assert!(next.is_none());
        for t in batch.iter().skip(4).take(3) {
            s.on_ack(us(6), ack(t, SimTime::ZERO));
        }
        let r = s.poll_send(us(6)).unwrap();
        assert!(r.retransmit);
        assert_eq!(r.segment, batch[0].segment);
        assert!(s.sack_consistent());
    }

    #[test]
    fn late_original_ack_clears_pending_retransmit() {
        let (mut s, batch) = one_hole(Cca::Swift);
        assert_eq!(s.retransmit_queue_len(), 1);
        s.on_ack(us(20), ack(&batch[0], SimTime::ZERO));
        assert!(s.sack_consistent());
        let next = s.poll_send(us(20));
        assert!(next.is_none_or(|t| !t.retransmit));
    }

    #[test]
    fn lswift_isolated_holes_never_decrease() {
        let mut s = SwiftSender::new(cfg(), Cca::LSwift, 400 * MSS, 6);
        let mut now = SimTime::ZERO;
        // Every 8th packet is late; its ACK arrives after 4 later ones.
        let mut pending_late: Option<(Transmission, SimTime)> = None;
        let mut count = 0;
        while !s.is_complete() && count < 2000 {
            count += 1;
            let batch = send_all(&mut s, now);
            let sent = now;
            now += us(5);
            for t in batch {
                if t.segment % 8 == 0 && pending_late.is_none() {
                    pending_late = Some((t, sent));
                    continue;
                }
                s.on_ack(now, ack(&t, sent));
                if let Some((late, at)) = pending_late {
                    if t.tx_order >= late.tx_order + 4 {
                        s.on_ack(now, ack(&late, at));
                        pending_late = None;
                    }
                }
            }
            if let Some((late, at)) = pending_late.take() {
                s.on_ack(now, ack(&late, at));
            }
        }
        assert!(s.is_complete());
        assert!(s.decreases().iter().all(|d| d.cause != DecreaseCause::Reordering));
        assert!(s.decreases().is_empty(), "{:?}", s.decreases());
        assert_eq!(s.stats().retransmissions, 0);
    }

    #[test]
    fn lswift_five_successive_holes_decrease_once() {
        let c = SwiftConfig { init_cwnd: 20.0, ..cfg() };
        let mut s = SwiftSender::new(c, Cca::LSwift, 100 * MSS, 6);
        let batch = send_all(&mut s, SimTime::ZERO);
        assert_eq!(batch.len(), 20);
        // Packets 0..5 are held back; ACKs for 5.. arrive in order.
        let mut reorder_decreases = 0;
        for t in batch.iter().skip(5).take(8) {
            let out = s.on_ack(us(5), ack(t, SimTime::ZERO));
            if out.decrease == Some(DecreaseCause::Reordering) {
                reorder_decreases += 1;
            }
        }
        assert_eq!(reorder_decreases, 1);
        assert_eq!(s.decreases().len(), 1);
        assert!((s.decreases()[0].factor - 0.5).abs() < 1e-12);
        assert_eq!(s.retransmit_queue_len(), 5);
        assert!(s.sack_consistent());
    }

    #[test]
    fn lswift_counter_resets_when_delayed_packet_arrives() {
        let (mut s, batch) = one_hole(Cca::LSwift);
        assert_eq!(s.successive_delayed(), 1);
        assert!(s.decreases().is_empty());
        s.on_ack(us(6), ack(&batch[0], SimTime::ZERO));
        assert_eq!(s.successive_delayed(), 0);
    }

    #[test]
    fn timeout_retransmits_oldest_and_resets_cwnd() {
        let mut s = SwiftSender::new(cfg(), Cca::Swift, 100 * MSS, 6);
        let batch = send_all(&mut s, SimTime::ZERO);
        let deadline = s.rto_deadline().unwrap();
        assert_eq!(deadline, s.config().rto);
        assert!(!s.on_timeout(deadline - SimTime(1)));
        assert!(s.on_timeout(deadline));
        assert_eq!(s.cwnd(), 1.0);
        assert_eq!(s.stats().rto_count, 1);
        // Window is full, so the retransmission waits for an ACK.
        assert!(s.poll_send(deadline).is_none());
        s.on_ack(deadline, ack(&batch[1], SimTime::ZERO));
        let r = s.poll_send(deadline);
        assert!(r.is_none() || r.unwrap().segment == batch[0].segment);
    }

    #[test]
    fn ack_moves_the_timer() {
        let mut s = SwiftSender::new(cfg(), Cca::Swift, 100 * MSS, 6);
        let first = s.poll_send(SimTime::ZERO).unwrap();
        let second = s.poll_send(us(10)).unwrap();
        s.on_ack(us(20), ack(&first, SimTime::ZERO));
        assert_eq!(s.rto_deadline(), Some(us(10) + s.config().rto));
        assert!(!s.on_timeout(s.config().rto));
        let _ = second;
    }

    #[test]
    fn unknown_and_duplicate_acks_are_counted() {
        let mut s = SwiftSender::new(cfg(), Cca::Swift, 10 * MSS, 6);
        let batch = send_all(&mut s, SimTime::ZERO);
        s.on_ack(us(5), ack(&batch[0], SimTime::ZERO));
        let w = s.cwnd();
        assert!(s.on_ack(us(6), ack(&batch[0], SimTime::ZERO)).duplicate);
        assert!(s.on_ack(us(6), AckInfo { segment: 999, tx_order: 0, echo_sent_at: SimTime::ZERO }).duplicate);
        assert_eq!(s.stats().duplicate_acks, 2);
        assert_eq!(s.cwnd(), w);
    }

    /// Replays an in-order ACK trace with the given per-ACK delays.
    fn in_order_trajectory(cca: Cca, delays: &[u64]) -> Vec<f64> {
        let c = cfg();
        let mut s = SwiftSender::new(c, cca, 10_000 * MSS, 6);
        let mut now = SimTime::ZERO;
        let mut traj = Vec::new();
        let mut i = 0;
        while i < delays.len() {
            let t = s.poll_send(now).expect("window always open in this replay");
            let sent = now;
            now += SimTime(delays[i]);
            s.on_ack(now, ack(&t, sent));
            traj.push(s.cwnd());
            i += 1;
        }
        traj
    }

    proptest! {
        #[test]
        fn single_path_equivalence_below_target(delays in prop::collection::vec(1_000_000u64..15_000_000, 1..300)) {
            let swift = in_order_trajectory(Cca::Swift, &delays);
            prop_assert_eq!(&swift, &in_order_trajectory(Cca::LSwift, &delays));
            let m = Cca::MSwift { history: HistoryPolicy::BoundedWindow { alpha: 0.5, max_size: 10 } };
            prop_assert_eq!(&swift, &in_order_trajectory(m, &delays));
            let c = Cca::MSwift { history: HistoryPolicy::Constant { size: 10 } };
            prop_assert_eq!(&swift, &in_order_trajectory(c, &delays));
        }

        #[test]
        fn single_path_equivalence_constant_overload(d in 20_000_000u64..100_000_000, n in 1usize..300) {
            let delays = vec![d; n];
            let swift = in_order_trajectory(Cca::Swift, &delays);
            let m = Cca::MSwift { history: HistoryPolicy::WindowBased { alpha: 0.5 } };
            prop_assert_eq!(&swift, &in_order_trajectory(m, &delays));
            prop_assert_eq!(&swift, &in_order_trajectory(Cca::LSwift, &delays));
        }

        /// Random ACK delivery orders, delays and drops keep the sender's invariants.
        #[test]
        fn invariants_under_random_ack_orders(
            cca_pick in 0u8..3,
            ops in prop::collection::vec((0u64..40_000_000, any::<prop::sample::Index>(), 0u8..10), 1..400),
        ) {
            let cca = match cca_pick {
                0 => Cca::Swift,
                1 => Cca::LSwift,
                _ => Cca::MSwift { history: HistoryPolicy::BoundedWindow { alpha: 0.5, max_size: 10 } },
            };
            let c = cfg();
            let min_cwnd = c.min_cwnd;
            let mut s = SwiftSender::new(c, cca, 200 * MSS, 6);
            let mut now = SimTime::ZERO;
            let mut wire: Vec<(Transmission, SimTime)> = Vec::new();
            for (dt, pick, action) in ops {
                now += SimTime(dt / 10 + 1);
                while let Some(t) = s.poll_send(now) {
                    wire.push((t, now));
                }
                if !wire.is_empty() {
                    let (t, sent) = wire.swap_remove(pick.index(wire.len()));
                    if action > 0 {
                        s.on_ack(now + SimTime(dt), ack(&t, sent));
                        now += SimTime(dt);
                    }
                }
                if action == 9 {
                    if let Some(dl) = s.rto_deadline() {
                        now = now.max(dl);
                        s.on_timeout(now);
                    }
                }
                prop_assert!(s.cwnd() >= min_cwnd);
                prop_assert!(s.sack_consistent());
            }
            for pair in s.decreases().windows(2) {
                if pair[1].cause != DecreaseCause::Timeout {
                    prop_assert!(pair[1].at - pair[0].at >= pair[1].srtt);
                }
            }
            prop_assert!(s.stats().min_cwnd_seen >= min_cwnd);
        }
    }
}
