//! Event calendar: the core of the discrete-event loop.
//!
//! Events fire in `(time, schedule-order)` order, so two events scheduled for
//! the same instant fire in the order they were scheduled.  That total order,
//! together with the deterministic streams in [`crate::rng`], makes whole runs
//! bit-reproducible.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::time::SimTime;

/// Token returned by [`Calendar::schedule`]; used to cancel a pending event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CancelOutcome {
    /// The event was pending and is now gone.
    Cancelled,
    /// The event had already fired or was already cancelled.
    AlreadyDead,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleError {
    /// Attempted to schedule before the current clock.
    SchedulingInPast { now: SimTime, requested: SimTime },
}

impl std::fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleError::SchedulingInPast { now, requested } => {
                write!(f, "cannot schedule at {requested:?}: clock is already at {now:?}")
            }
        }
    }
}

impl std::error::Error for ScheduleError {}

pub struct Calendar<P> {
    heap: BinaryHeap<Reverse<(SimTime, u64)>>,
    pending: HashMap<u64, P>,
    next_seq: u64,
    clock: SimTime,
    fired: u64,
}

impl<P> Calendar<P> {
    pub fn new() -> Self {
        Calendar {
            heap: BinaryHeap::new(),
            pending: HashMap::new(),
            next_seq: 0,
            clock: SimTime::ZERO,
            fired: 0,
        }
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    /// Number of events fired so far.
    pub fn fired_count(&self) -> u64 {
        self.fired
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Schedule `payload` to fire at `at`.  `at == clock` is allowed: the
    /// event fires during the current instant, after already-scheduled events
    /// for that instant.
    pub fn schedule(&mut self, at: SimTime, payload: P) -> Result<EventHandle, ScheduleError> {
        if at < self.clock {
            return Err(ScheduleError::SchedulingInPast { now: self.clock, requested: at });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse((at, seq)));
        self.pending.insert(seq, payload);
        Ok(EventHandle(seq))
    }

    pub fn cancel(&mut self, handle: EventHandle) -> CancelOutcome {
        if self.pending.remove(&handle.0).is_some() {
            CancelOutcome::Cancelled
        } else {
            CancelOutcome::AlreadyDead
        }
    }

    /// Pop the next event due at or before `t_end`, advancing the clock to its
    /// fire time.  Cancelled heap entries are skipped.
    pub fn pop_due(&mut self, t_end: SimTime) -> Option<(SimTime, P)> {
        while let Some(&Reverse((at, seq))) = self.heap.peek() {
            if at > t_end {
                return None;
            }
            self.heap.pop();
            if let Some(payload) = self.pending.remove(&seq) {
                debug_assert!(at >= self.clock, "calendar order violated");
                self.clock = at;
                self.fired += 1;
                return Some((at, payload));
            }
            // tombstone of a cancelled event; keep scanning
        }
        None
    }

    /// Fire every event due at or before `t_end`, in order, leaving the clock
    /// at `t_end`.  Returns the number of events fired.
    pub fn run_until(
        &mut self,
        t_end: SimTime,
        mut handler: impl FnMut(&mut Self, SimTime, P),
    ) -> u64 {
        let before = self.fired;
        while let Some((at, payload)) = self.pop_due(t_end) {
            handler(self, at, payload);
        }
        if t_end > self.clock {
            self.clock = t_end;
        }
        self.fired - before
    }
}

impl<P> Default for Calendar<P> {
    fn default() -> Self {
        Self::new()
    }
}
