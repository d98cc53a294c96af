//! Deterministic discrete-event engine.
//!
//! Events are ordered by `(fire_at, seq)` where `seq` is a monotone insertion
//! counter, so simultaneous events fire in the order they were scheduled.

mod rng;
mod time;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};
use std::ops::ControlFlow;

pub use rng::{streams, RngStream, SplitMix64};
pub use time::{ParseTimeError, SimTime};

/// Implemented by event payloads so the engine can write a trace line per event.
pub trait EventPayload {
    fn kind(&self) -> &'static str;
    fn summary(&self) -> String;
}

#[derive(Debug)]
struct Scheduled<E> {
    at: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    // BinaryHeap is a max-heap; invert so the earliest (at, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.cmp(&self.at).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// An event handed to the caller by [`Engine::pop_due`].
#[derive(Debug)]
pub struct Fired<E> {
    pub at: SimTime,
    pub seq: u64,
    pub event: E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub events_processed: u64,
    pub final_time: SimTime,
    /// True when the handler asked to stop before the deadline.
    pub stopped: bool,
}

pub struct Engine<E> {
    now: SimTime,
    next_seq: u64,
    processed: u64,
    heap: BinaryHeap<Scheduled<E>>,
    trace: Option<Box<dyn Write + Send>>,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            next_seq: 0,
            processed: 0,
            heap: BinaryHeap::new(),
            trace: None,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn events_processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    /// Iterates over queued events in unspecified order.
    pub fn pending_events(&self) -> impl Iterator<Item = &E> {
        self.heap.iter().map(|s| &s.event)
    }

    pub fn set_trace(&mut self, sink: Box<dyn Write + Send>) {
        self.trace = Some(sink);
    }

    pub fn take_trace(&mut self) -> Option<Box<dyn Write + Send>> {
        self.trace.take()
    }

    /// Schedules `event` at absolute time `at` and returns its sequence number.
    ///
    /// Panics when `at` lies in the past: that is a logic error in the caller.
    pub fn schedule(&mut self, at: SimTime, event: E) -> u64 {
        assert!(
            at >= self.now,
            "event scheduled in the past: at={} now={}",
            at.as_ps(),
            self.now.as_ps()
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Scheduled { at, seq, event });
        seq
    }

    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> u64 {
        let at = self.now + delay;
        self.schedule(at, event)
    }

    /// Pops the next event if it fires at or before `deadline`, advancing the clock.
    pub fn pop_due(&mut self, deadline: SimTime) -> Option<Fired<E>>
    where
        E: EventPayload,
    {
        if self.heap.peek()?.at > deadline {
            return None;
        }
        let Scheduled { at, seq, event } = self.heap.pop()?;
        debug_assert!(at >= self.now);
        self.now = at;
        self.processed += 1;
        if let Some(sink) = self.trace.as_mut() {
            // Trace output is best effort; a failing sink must not change the run.
            let _ = writeln!(sink, "{} {} {} {}", at.as_ps(), seq, event.kind(), event.summary());
        }
        Some(Fired { at, seq, event })
    }

    /// Processes every event due at or before `deadline` in `(fire_at, seq)` order.
    ///
    /// If events remain past the deadline the clock advances to `deadline`; if
    /// the queue drains, or the handler breaks, the clock stays at the last
    /// processed event.
    pub fn run_until<F>(&mut self, deadline: SimTime, mut handler: F) -> RunOutcome
    where
        E: EventPayload,
        F: FnMut(&mut Self, Fired<E>) -> ControlFlow<()>,
    {
        let start = self.processed;
        let mut stopped = false;
        while let Some(fired) = self.pop_due(deadline) {
            if handler(self, fired).is_break() {
                stopped = true;
                break;
            }
        }
        if !stopped && !self.heap.is_empty() && deadline > self.now {
            self.now = deadline;
        }
        RunOutcome {
            events_processed: self.processed - start,
            final_time: self.now,
            stopped,
        }
    }

    /// Writes a free-form trace line stamped with the current time. Notes
    /// carry `-` where event lines carry a sequence number.
    pub fn trace_note(&mut self, note: std::fmt::Arguments<'_>) {
        if let Some(sink) = self.trace.as_mut() {
            let _ = writeln!(sink, "{} - {}", self.now.as_ps(), note);
        }
    }

    pub fn flush_trace(&mut self) -> io::Result<()> {
        match self.trace.as_mut() {
            Some(sink) => sink.flush(),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Tag(&'static str);

    impl EventPayload for Tag {
        fn kind(&self) -> &'static str {
            "Tag"
        }
        fn summary(&self) -> String {
            self.0.to_string()
        }
    }

    fn drain(engine: &mut Engine<Tag>) -> Vec<&'static str> {
        let mut order = Vec::new();
        engine.run_until(SimTime::MAX, |_, f| {
            order.push(f.event.0);
            ControlFlow::Continue(())
        });
        order
    }

    #[test]
    fn ties_break_by_insertion_order() {
        let mut e = Engine::new();
        e.schedule(SimTime(10), Tag("A"));
        e.schedule(SimTime(10), Tag("B"));
        e.schedule(SimTime(5), Tag("C"));
        assert_eq!(drain(&mut e), vec!["C", "A", "B"]);
    }

    #[test]
    fn empty_queue_returns_immediately() {
        let mut e: Engine<Tag> = Engine::new();
        let out = e.run_until(SimTime(1_000), |_, _| ControlFlow::Continue(()));
        assert_eq!(out.events_processed, 0);
        assert_eq!(e.now(), SimTime::ZERO);
    }

    #[test]
    fn deadline_is_inclusive() {
        let mut e = Engine::new();
        e.schedule(SimTime::ZERO, Tag("zero"));
        let out = e.run_until(SimTime::ZERO, |_, _| ControlFlow::Continue(()));
        assert_eq!(out.events_processed, 1);
    }

    #[test]
    fn deadline_before_first_event_processes_nothing() {
        let mut e = Engine::new();
        e.schedule(SimTime(50), Tag("late"));
        let out = e.run_until(SimTime(49), |_, _| ControlFlow::Continue(()));
        assert_eq!(out.events_processed, 0);
        assert_eq!(e.now(), SimTime(49));
        assert_eq!(e.pending(), 1);
    }

    #[test]
    fn handlers_can_schedule_follow_ups() {
        let mut e = Engine::new();
        e.schedule(SimTime(1), Tag("first"));
        let mut seen = Vec::new();
        e.run_until(SimTime::MAX, |eng, f| {
            seen.push((f.at, f.event.0));
            if f.event.0 == "first" {
                eng.schedule_in(SimTime(4), Tag("second"));
            }
            ControlFlow::Continue(())
        });
        assert_eq!(seen, vec![(SimTime(1), "first"), (SimTime(5), "second")]);
    }

    #[test]
    fn break_leaves_remaining_events_queued() {
        let mut e = Engine::new();
        for t in 1..=5 {
            e.schedule(SimTime(t), Tag("x"));
        }
        let out = e.run_until(SimTime::MAX, |_, f| {
            if f.at == SimTime(3) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        assert!(out.stopped);
        assert_eq!(out.events_processed, 3);
        assert_eq!(e.now(), SimTime(3));
        assert_eq!(e.pending(), 2);
    }

    #[test]
    #[should_panic(expected = "in the past")]
    fn scheduling_into_the_past_panics() {
        let mut e = Engine::new();
        e.schedule(SimTime(10), Tag("a"));
        e.run_until(SimTime::MAX, |_, _| ControlFlow::Continue(()));
        e.schedule(SimTime(5), Tag("b"));
    }

    #[test]
    fn trace_has_one_line_per_event() {
        use std::sync::{Arc, Mutex};

        #[derive(Clone, Default)]
        struct Shared(Arc<Mutex<Vec<u8>>>);
        impl Write for Shared {
            fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> io::Result<()> {
                Ok(())
            }
        }

        let buf = Shared::default();
        let mut e = Engine::new();
        e.set_trace(Box::new(buf.clone()));
        e.schedule(SimTime(7), Tag("a"));
        e.schedule(SimTime(3), Tag("b"));
        drain(&mut e);
        let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
        assert_eq!(text, "3 1 Tag b\n7 0 Tag a\n");
    }
}
