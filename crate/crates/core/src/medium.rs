//! Single-collision-domain radio medium.
//!
//! Every station hears every other station, instantly: there are no hidden
//! nodes and no capture.  Any two transmissions that overlap in time destroy
//! each other.  A transmission that survives contention is then subjected to
//! the frame-loss lottery of its destination — a fixed per-destination frame
//! loss ratio applied to DATA frames only.  ACK frames are short enough that
//! channel loss on them is deliberately not modelled.
//!
//! Busy intervals are end-exclusive: at the exact instant a transmission
//! ends the medium reads Idle.

use std::collections::HashMap;

use crate::mac::{Frame, FrameKind, StationId};
use crate::rng::{SimRng, STREAM_LINK_LOSS};
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MediumState {
    Idle,
    Busy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered,
    Collided,
    ChannelLoss,
}

#[derive(Clone, Debug)]
pub struct TransmissionRecord {
    pub frame: Frame,
    pub sender: StationId,
    pub start: SimTime,
    pub end: SimTime,
    pub collided: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MediumError {
    /// A station tried to start a second transmission while its first was
    /// still in the air.
    DoubleTransmit(StationId),
    ZeroDuration,
}

impl std::fmt::Display for MediumError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MediumError::DoubleTransmit(s) => write!(f, "station {s} is already transmitting"),
            MediumError::ZeroDuration => write!(f, "transmissions must take time"),
        }
    }
}

impl std::error::Error for MediumError {}

/// Fixed per-destination frame loss, with one independent deterministic
/// stream per (source, destination) link so that adding stations to a
/// scenario never shifts the draws of existing links.
#[derive(Clone, Debug)]
pub struct LossModel {
    seed: u64,
    flr: Vec<f64>,
    streams: HashMap<(StationId, StationId), SimRng>,
}

impl LossModel {
    pub fn new(seed: u64, n_stations: usize) -> Self {
        LossModel { seed, flr: vec![0.0; n_stations], streams: HashMap::new() }
    }

    pub fn set_flr(&mut self, dst: StationId, flr: f64) {
        assert!((0.0..=1.0).contains(&flr), "loss ratio must be in [0, 1]");
        self.flr[dst as usize] = flr;
    }

    pub fn flr(&self, dst: StationId) -> f64 {
        self.flr[dst as usize]
    }

    /// One unit draw from the (src, dst) link stream.
    pub fn draw_unit(&mut self, src: StationId, dst: StationId) -> f64 {
        let seed = self.seed;
        self.streams
            .entry((src, dst))
            .or_insert_with(|| SimRng::substream(seed, STREAM_LINK_LOSS, src as u64, dst as u64))
            .unit_f64()
    }
}

pub struct Medium {
    active: Vec<TransmissionRecord>,
    loss: LossModel,
}

impl Medium {
    pub fn new(loss: LossModel) -> Self {
        Medium { active: Vec::new(), loss }
    }

    pub fn state(&self) -> MediumState {
        if self.active.is_empty() {
            MediumState::Idle
        } else {
            MediumState::Busy
        }
    }

    pub fn is_busy(&self) -> bool {
        !self.active.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn loss_model_mut(&mut self) -> &mut LossModel {
        &mut self.loss
    }

    /// Put a frame on the air for `[now, now + duration)`.  Returns whether
    /// the medium was idle beforehand (i.e. this call is a busy transition).
    /// Starting while others are active is legal — that is what a collision
    /// is — and flags every overlapped transmission, including this one.
    pub fn start_tx(
        &mut self,
        frame: Frame,
        sender: StationId,
        now: SimTime,
        duration: SimTime,
    ) -> Result<bool, MediumError> {
        if duration == SimTime::ZERO {
            return Err(MediumError::ZeroDuration);
        }
        if self.active.iter().any(|t| t.sender == sender) {
            return Err(MediumError::DoubleTransmit(sender));
        }
        debug_assert!(
            self.active.iter().all(|t| t.end > now),
            "an expired transmission was never resolved"
        );
        let was_idle = self.active.is_empty();
        let mut record = TransmissionRecord {
            frame,
            sender,
            start: now,
            end: now + duration,
            collided: false,
        };
        if !was_idle {
            record.collided = true;
            for t in &mut self.active {
                t.collided = true;
            }
        }
        self.active.push(record);
        Ok(was_idle)
    }

    /// Take `sender`'s transmission off the air at its end instant and decide
    /// its fate.  Exactly one loss draw is consumed per un-collided DATA
    /// frame, regardless of the configured ratio, so streams stay aligned
    /// across scenario variants.  Returns the record, the outcome, and
    /// whether the medium is idle now.
    pub fn finish_tx(
        &mut self,
        sender: StationId,
        now: SimTime,
    ) -> (TransmissionRecord, DeliveryOutcome, bool) {
        let idx = self
            .active
            .iter()
            .position(|t| t.sender == sender)
            .expect("no active transmission for this sender");
        let record = self.active.swap_remove(idx);
        debug_assert_eq!(record.end, now, "transmission resolved at the wrong instant");
        let outcome = if record.collided {
            DeliveryOutcome::Collided
        } else if record.frame.kind == FrameKind::Data {
            let u = self.loss.draw_unit(record.frame.src, record.frame.dst);
            if u < self.loss.flr(record.frame.dst) {
                DeliveryOutcome::ChannelLoss
            } else {
                DeliveryOutcome::Delivered
            }
        } else {
            DeliveryOutcome::Delivered
        };
        (record, outcome, self.active.is_empty())
    }
}
