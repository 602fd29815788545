//! The assembled network: one access point, `2 n` terminals, a shared
//! medium, voice sources, and the event dispatch that ties them together.
//!
//! Session `i` is a one-way voice flow from terminal `1 + 2i` through the
//! access point (station 0) to terminal `2 + 2i`.  Every SDU therefore
//! crosses the channel twice; the AP relays through a single FIFO queue,
//! which is exactly what makes a lossy destination able to stall everyone
//! else's traffic behind its head-of-line retries.
//!
//! Channel access follows DCF basic access: sense DIFS idle, count down a
//! slotted backoff (frozen while busy, resumed after the next DIFS), then
//! transmit and wait for the ACK that the receiver returns one SIFS after a
//! clean reception.  Stations deferring to the same instant transmit
//! together and collide.  Rather than ticking per slot, each deferring
//! station stores its defer start and remaining slots; one calendar event at
//! the earliest expiry wakes the world, and busy transitions convert elapsed
//! time back into whole consumed slots.

use std::collections::{HashSet, VecDeque};

use crate::backoff::{draw_backoff, Policy};
use crate::engine::{Calendar, EventHandle};
use crate::mac::{Frame, FrameKind, MacConfig, SessionId, StationId, AP_STATION};
use crate::medium::{DeliveryOutcome, LossModel, Medium};
use crate::metrics::{AttemptFate, Hop, StatsCollector, TraceRecord};
use crate::pap::{AckDecision, BdaConfig, BdaState, ChannelStatusMap};
use crate::rng::{SimRng, STREAM_BACKOFF};
use crate::time::SimTime;
use crate::traffic::{OnOffSource, VoiceCodec};

/// Which access-point discipline a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Binary exponential backoff everywhere; the AP behaves like any station.
    Baseline,
    /// Prioritized AP: adaptive-growth backoff at the AP plus selective
    /// refusal of uplink ACKs towards Bad destinations.
    Pap,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Pap => "pap",
        }
    }

    pub fn is_pap(&self) -> bool {
        matches!(self, Algorithm::Pap)
    }
}

/// How destinations earn their Good/Bad label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classifier {
    /// Sessions flagged lossy in the configuration are Bad for the whole run.
    Oracle,
    /// Learned from the AP's own downlink outcomes.
    Estimator { fail_threshold: u8, success_threshold: u8 },
}

/// What drives SDU arrivals.
#[derive(Clone, Debug)]
pub enum TrafficMode {
    /// Exponential ON/OFF talkspurts per session.
    Voice,
    /// Explicit (instant, session) injections, for tests.
    Script(Vec<(SimTime, SessionId)>),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mac: MacConfig,
    pub algorithm: Algorithm,
    pub n_sessions: u32,
    /// The first `bad_sessions` sessions have lossy downlinks.
    pub bad_sessions: u32,
    /// Downlink loss ratio towards bad-session destinations.
    pub flr: f64,
    /// Downlink loss ratio towards good-session destinations.
    pub flr_good: f64,
    pub fi: SimTime,
    pub codec: VoiceCodec,
    pub seed: u64,
    pub duration: SimTime,
    pub warmup: SimTime,
    pub classifier: Classifier,
    /// Growth-factor steps gained per Good-destination cycle at the AP.
    pub good_steps: u32,
    pub traffic: TrafficMode,
    /// Keep the full trace in memory (tests only; long runs emit millions
    /// of records).
    pub record_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mac: MacConfig::default(),
            algorithm: Algorithm::Baseline,
            n_sessions: 1,
            bad_sessions: 0,
            flr: 0.0,
            flr_good: 0.0,
            fi: SimTime::from_millis(20),
            codec: VoiceCodec::g726_32(),
            seed: 1,
            duration: SimTime::from_secs(600),
            warmup: SimTime::from_secs(10),
            classifier: Classifier::Oracle,
            good_steps: 1,
            traffic: TrafficMode::Voice,
            record_trace: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.mac.validate()?;
        if self.n_sessions == 0 {
            return Err("at least one session is required".into());
        }
        if self.bad_sessions > self.n_sessions {
            return Err(format!(
                "bad_sessions {} exceeds n_sessions {}",
                self.bad_sessions, self.n_sessions
            ));
        }
        if !(0.0..=1.0).contains(&self.flr) || !(0.0..=1.0).contains(&self.flr_good) {
            return Err("loss ratios must be in [0, 1]".into());
        }
        if self.duration <= self.warmup {
            return Err("duration must exceed the warm-up".into());
        }
        self.codec.sdu_bytes(self.fi).map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn n_stations(&self) -> u32 {
        1 + 2 * self.n_sessions
    }

    pub fn session_src(session: SessionId) -> StationId {
        1 + 2 * session
    }

    pub fn session_dst(session: SessionId) -> StationId {
        2 + 2 * session
    }

    pub fn is_bad_session(&self, session: SessionId) -> bool {
        session < self.bad_sessions
    }
}

/// Where a station stands in the channel-access procedure for its queue head.
#[derive(Clone, Copy, Debug)]
enum AccessState {
    /// Empty queue.
    Idle,
    /// Head frame pending, medium busy: `backoff` slots still to count.
    WaitingIdle { backoff: u32 },
    /// Counting down: transmission due at `defer_start + DIFS + backoff` slots.
    Deferring { defer_start: SimTime, backoff: u32 },
    Transmitting,
    /// DATA sent; `timeout` fires unless the ACK lands first.
    AwaitAck { timeout: EventHandle },
}

struct Station {
    queue: VecDeque<Frame>,
    policy: Policy,
    rng: SimRng,
    access: AccessState,
    /// Ground-truth fate of this station's most recent DATA attempt, kept so
    /// a retry-limit drop can be attributed to what actually killed it.
    last_fate: AttemptFate,
}

#[derive(Clone, Debug)]
enum SimEvent {
    TrafficOn { session: SessionId },
    TrafficEmit { session: SessionId, on_end: SimTime },
    ScriptEmit { session: SessionId },
    /// Earliest backoff expiry among deferring stations.
    AccessFire,
    TxEnd { station: StationId },
    AckStart { station: StationId, ack: Frame },
    AckTimeout { station: StationId },
}

/// End-of-run packet accounting.  `queued` counts SDUs still resident in any
/// queue that are neither delivered nor dropped, so the identity
/// `generated = delivered + dropped + queued` is exact at any stopping point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conservation {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub queued: u64,
}

impl Conservation {
    pub fn balances(&self) -> bool {
        self.generated == self.delivered + self.dropped + self.queued
    }
}

pub struct Simulation {
    cfg: RunConfig,
    sdu_bytes: u32,
    cal: Calendar<SimEvent>,
    medium: Medium,
    stations: Vec<Station>,
    sources: Vec<OnOffSource>,
    next_seq: Vec<u32>,
    status_map: ChannelStatusMap,
    bda_cfg: BdaConfig,
    bda: BdaState,
    stats: StatsCollector,
    trace: Vec<TraceRecord>,
    /// Pending earliest-expiry event, with its fire instant.
    access_fire: Option<(EventHandle, SimTime)>,
    /// Next fresh sequence number the AP will accept for relay, per session.
    relay_next: Vec<u32>,
    /// Next fresh sequence number each destination will pass up, per session.
    deliver_next: Vec<u32>,
    delivered_ids: HashSet<(SessionId, u32)>,
    dropped_ids: HashSet<(SessionId, u32)>,
    pub duplicate_receptions: u64,
}

impl Simulation {
    pub fn new(cfg: RunConfig) -> Result<Self, String> {
        cfg.validate()?;
        let n_sessions = cfg.n_sessions as usize;
        let n_stations = cfg.n_stations() as usize;
        let sdu_bytes = cfg.codec.sdu_bytes(cfg.fi).map_err(|e| e.to_string())?;

        let mut loss = LossModel::new(cfg.seed, n_stations);
        for s in 0..cfg.n_sessions {
            let dst = RunConfig::session_dst(s);
            let flr = if cfg.is_bad_session(s) { cfg.flr } else { cfg.flr_good };
            loss.set_flr(dst, flr);
        }

        let stations = (0..n_stations as u32)
            .map(|id| {
                let policy = if id == AP_STATION && cfg.algorithm.is_pap() {
                    let mut p = Policy::one_x(cfg.mac.cw_min, cfg.mac.cw_max);
                    if let Policy::OneX(s) = &mut p {
                        s.good_steps = cfg.good_steps;
                    }
                    p
                } else {
                    Policy::beb(cfg.mac.cw_min, cfg.mac.cw_max)
                };
                Station {
                    queue: VecDeque::new(),
                    policy,
                    rng: SimRng::substream(cfg.seed, STREAM_BACKOFF, id as u64, 0),
                    access: AccessState::Idle,
                    last_fate: AttemptFate::Collided,
                }
            })
            .collect();

        let status_map = match cfg.classifier {
            Classifier::Oracle => {
                ChannelStatusMap::oracle((0..cfg.bad_sessions).map(RunConfig::session_dst))
            }
            Classifier::Estimator { fail_threshold, success_threshold } => {
                ChannelStatusMap::estimator(fail_threshold, success_threshold)
            }
        };
        let bda_cfg = if cfg.algorithm.is_pap() {
            BdaConfig::for_short_retry(cfg.mac.short_retry as u8)
        } else {
            BdaConfig::disabled()
        };

        let mut sim = Simulation {
            sdu_bytes,
            cal: Calendar::new(),
            medium: Medium::new(loss),
            stations,
            sources: (0..cfg.n_sessions).map(|s| OnOffSource::new(cfg.seed, s)).collect(),
            next_seq: vec![0; n_sessions],
            status_map,
            bda_cfg,
            bda: BdaState::new(),
            stats: StatsCollector::new(n_sessions, cfg.warmup),
            trace: Vec::new(),
            access_fire: None,
            relay_next: vec![0; n_sessions],
            deliver_next: vec![0; n_sessions],
            delivered_ids: HashSet::new(),
            dropped_ids: HashSet::new(),
            duplicate_receptions: 0,
            cfg,
        };

        match sim.cfg.traffic.clone() {
            TrafficMode::Voice => {
                for s in 0..sim.cfg.n_sessions {
                    let first_on = sim.sources[s as usize].initial_off();
                    sim.cal
                        .schedule(first_on, SimEvent::TrafficOn { session: s })
                        .expect("initial schedule");
                }
            }
            TrafficMode::Script(points) => {
                for (at, session) in points {
                    if session >= sim.cfg.n_sessions {
                        return Err(format!("scripted session {session} out of range"));
                    }
                    sim.cal
                        .schedule(at, SimEvent::ScriptEmit { session })
                        .expect("initial schedule");
                }
            }
        }
        Ok(sim)
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &StatsCollector {
        &self.stats
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn bda_state(&self) -> &BdaState {
        &self.bda
    }

    /// Run the calendar forward to `t` (events due exactly at `t` included).
    pub fn run_until(&mut self, t: SimTime) {
        while let Some((now, ev)) = self.cal.pop_due(t) {
            self.dispatch(now, ev);
        }
    }

    /// Run the whole configured horizon.
    pub fn run(&mut self) {
        self.run_until(self.cfg.duration);
    }

    pub fn conservation(&self) -> Conservation {
        let mut generated = 0;
        let mut delivered = 0;
        let mut dropped = 0;
        for f in self.stats.flows() {
            generated += f.generated_all;
            delivered += f.delivered_all;
            dropped += f.dropped_all;
        }
        let mut resident: HashSet<(SessionId, u32)> = HashSet::new();
        for st in &self.stations {
            for frame in &st.queue {
                resident.insert((frame.session, frame.seq));
            }
        }
        let queued = resident
            .iter()
            .filter(|id| !self.delivered_ids.contains(id) && !self.dropped_ids.contains(id))
            .count() as u64;
        Conservation { generated, delivered, dropped, queued }
    }

    // --- event dispatch -------------------------------------------------

    fn dispatch(&mut self, now: SimTime, ev: SimEvent) {
        match ev {
            SimEvent::TrafficOn { session } => self.on_traffic_on(session, now),
            SimEvent::TrafficEmit { session, on_end } => {
                self.emit_sdu(session, now);
                let next = now + self.cfg.fi;
                if next < on_end {
                    self.cal
                        .schedule(next, SimEvent::TrafficEmit { session, on_end })
                        .expect("schedule emit");
                }
            }
            SimEvent::ScriptEmit { session } => self.emit_sdu(session, now),
            SimEvent::AccessFire => self.on_access_fire(now),
            SimEvent::TxEnd { station } => self.on_tx_end(station, now),
            SimEvent::AckStart { station, ack } => self.on_ack_start(station, ack, now),
            SimEvent::AckTimeout { station } => self.on_ack_timeout(station, now),
        }
    }

    fn on_traffic_on(&mut self, session: SessionId, now: SimTime) {
        let src = &mut self.sources[session as usize];
        let on_len = src.draw_on();
        let off_len = src.draw_off();
        let on_end = now + on_len;
        self.cal
            .schedule(on_end + off_len, SimEvent::TrafficOn { session })
            .expect("schedule next talkspurt");
        if on_len > SimTime::ZERO {
            self.cal
                .schedule(now, SimEvent::TrafficEmit { session, on_end })
                .expect("schedule first emit");
        }
    }

    fn emit_sdu(&mut self, session: SessionId, now: SimTime) {
        let seq = self.next_seq[session as usize];
        self.next_seq[session as usize] += 1;
        let frame = Frame {
            kind: FrameKind::Data,
            src: RunConfig::session_src(session),
            dst: AP_STATION,
            session,
            seq,
            sdu_bytes: self.sdu_bytes,
            retry_count: 0,
            born_at: now,
        };
        self.emit(TraceRecord::Generated { session, seq, at: now });
        self.enqueue_data(frame.src, frame, now);
    }

    fn enqueue_data(&mut self, station: StationId, frame: Frame, now: SimTime) {
        let st = &mut self.stations[station as usize];
        st.queue.push_back(frame);
        if st.queue.len() == 1 {
            debug_assert!(matches!(st.access, AccessState::Idle), "head frame without access");
            self.start_new_packet(station, now);
        }
    }

    /// Fresh access cycle for a new queue head: reset the window, draw a
    /// backoff, and join contention.
    fn start_new_packet(&mut self, station: StationId, now: SimTime) {
        let st = &mut self.stations[station as usize];
        st.policy.on_new_packet();
        let cw = st.policy.cw();
        let backoff = draw_backoff(cw, &mut st.rng);
        self.enter_contention(station, backoff, now);
    }

    fn enter_contention(&mut self, station: StationId, backoff: u32, now: SimTime) {
        if self.medium.is_busy() {
            self.stations[station as usize].access = AccessState::WaitingIdle { backoff };
        } else {
            self.stations[station as usize].access =
                AccessState::Deferring { defer_start: now, backoff };
            let at = self.expiry(now, backoff);
            match self.access_fire {
                Some((_, pending)) if pending <= at => {}
                _ => self.schedule_access_fire(at),
            }
        }
    }

    fn expiry(&self, defer_start: SimTime, backoff: u32) -> SimTime {
        defer_start + self.cfg.mac.difs + SimTime(backoff as u64 * self.cfg.mac.slot.nanos())
    }

    fn schedule_access_fire(&mut self, at: SimTime) {
        if let Some((h, _)) = self.access_fire.take() {
            self.cal.cancel(h);
        }
        let h = self.cal.schedule(at, SimEvent::AccessFire).expect("schedule access");
        self.access_fire = Some((h, at));
    }

    /// Recompute the earliest expiry over all deferring stations.
    fn reschedule_access_fire(&mut self) {
        let mut earliest: Option<SimTime> = None;
        for st in &self.stations {
            if let AccessState::Deferring { defer_start, backoff } = st.access {
                let at = self.expiry(defer_start, backoff);
                earliest = Some(earliest.map_or(at, |e: SimTime| e.min(at)));
            }
        }
        match earliest {
            Some(at) => self.schedule_access_fire(at),
            None => {
                if let Some((h, _)) = self.access_fire.take() {
                    self.cal.cancel(h);
                }
            }
        }
    }

    /// The medium just became busy: deferring stations bank their whole
    /// elapsed slots and wait.  Slots are only consumed after a full DIFS of
    /// idle, and a partially elapsed slot does not count.
    fn on_busy_transition(&mut self, now: SimTime) {
        if let Some((h, _)) = self.access_fire.take() {
            self.cal.cancel(h);
        }
        let difs = self.cfg.mac.difs;
        let slot = self.cfg.mac.slot.nanos();
        for st in &mut self.stations {
            if let AccessState::Deferring { defer_start, backoff } = st.access {
                let counting_from = defer_start + difs;
                let completed = if now > counting_from {
                    (((now - counting_from).nanos()) / slot).min(backoff as u64) as u32
                } else {
                    0
                };
                debug_assert!(
                    counting_from + SimTime(backoff as u64 * slot) > now,
                    "an expired deferral survived to a busy transition"
                );
                st.access = AccessState::WaitingIdle { backoff: backoff - completed };
            }
        }
    }

    /// The medium just went idle: everyone waiting resumes deference now.
    fn on_idle_transition(&mut self, now: SimTime) {
        for st in &mut self.stations {
            if let AccessState::WaitingIdle { backoff } = st.access {
                st.access = AccessState::Deferring { defer_start: now, backoff };
            }
        }
        self.reschedule_access_fire();
    }

    fn on_access_fire(&mut self, now: SimTime) {
        self.access_fire = None;
        let mut batch = Vec::new();
        for (id, st) in self.stations.iter().enumerate() {
            if let AccessState::Deferring { defer_start, backoff } = st.access {
                let at = self.expiry(defer_start, backoff);
                debug_assert!(at >= now, "missed a deferral expiry");
                if at == now {
                    batch.push(id as StationId);
                }
            }
        }
        debug_assert!(!batch.is_empty(), "access event fired with no expiring station");
        for &station in &batch {
            self.transmit_head(station, now);
        }
        // Everyone else freezes against the transmission(s) just started.
        self.on_busy_transition(now);
    }

    fn transmit_head(&mut self, station: StationId, now: SimTime) {
        let st = &mut self.stations[station as usize];
        let frame = st.queue.front().expect("transmitting with empty queue").clone();
        st.access = AccessState::Transmitting;
        self.emit(TraceRecord::Transmit {
            station,
            session: frame.session,
            seq: frame.seq,
            retry: frame.retry_count,
            at: now,
        });
        let duration = self.cfg.mac.data_duration(frame.sdu_bytes);
        self.medium
            .start_tx(frame, station, now, duration)
            .expect("double transmission");
        self.cal
            .schedule(now + duration, SimEvent::TxEnd { station })
            .expect("schedule data end");
    }

    fn on_ack_start(&mut self, station: StationId, ack: Frame, now: SimTime) {
        let duration = self.cfg.mac.ack_duration();
        let was_idle = self
            .medium
            .start_tx(ack, station, now, duration)
            .expect("ack double transmission");
        debug_assert!(was_idle, "ACK started into a busy medium");
        self.cal
            .schedule(now + duration, SimEvent::TxEnd { station })
            .expect("schedule ack end");
        if was_idle {
            self.on_busy_transition(now);
        }
    }

    fn on_tx_end(&mut self, station: StationId, now: SimTime) {
        let (record, outcome, now_idle) = self.medium.finish_tx(station, now);
        match record.frame.kind {
            FrameKind::Data => self.resolve_data(record.frame, outcome, now),
            FrameKind::Ack => self.resolve_ack(record.frame, outcome, now),
        }
        if now_idle {
            self.on_idle_transition(now);
        }
    }

    fn resolve_data(&mut self, frame: Frame, outcome: DeliveryOutcome, now: SimTime) {
        let sender = frame.src;
        // The sender cannot see the outcome; it always arms the ACK timeout.
        let timeout = self
            .cal
            .schedule(now + self.cfg.mac.ack_timeout(), SimEvent::AckTimeout { station: sender })
            .expect("schedule ack timeout");
        self.stations[sender as usize].access = AccessState::AwaitAck { timeout };

        let fate = match outcome {
            DeliveryOutcome::Collided => AttemptFate::Collided,
            DeliveryOutcome::ChannelLoss => AttemptFate::ChannelLoss,
            DeliveryOutcome::Delivered => {
                if frame.dst == AP_STATION {
                    self.ap_receive_uplink(&frame, now)
                } else {
                    self.terminal_receive_downlink(&frame, now)
                }
            }
        };
        self.stations[sender as usize].last_fate = fate;
        self.emit(TraceRecord::TxResolved {
            station: sender,
            session: frame.session,
            seq: frame.seq,
            fate,
            at: now,
        });
        // The AP's own downlink outcomes feed the channel estimator.
        if sender == AP_STATION {
            self.status_map.observe(frame.dst, fate);
        }
    }

    /// A clean uplink reception at the AP: acknowledge and relay, or refuse.
    fn ap_receive_uplink(&mut self, frame: &Frame, now: SimTime) -> AttemptFate {
        let flow_dst = RunConfig::session_dst(frame.session);
        let status = self.status_map.status(flow_dst);
        let decision = self.bda.on_uplink_data(
            &self.bda_cfg,
            frame.src,
            frame.retry_count.min(u8::MAX as u32) as u8,
            status,
        );
        match decision {
            AckDecision::Block => {
                self.emit(TraceRecord::Blocked { session: frame.session, seq: frame.seq, at: now });
                AttemptFate::DeliveredBlocked
            }
            AckDecision::Ack => {
                self.send_ack(AP_STATION, frame, now);
                let slot = frame.session as usize;
                if frame.seq >= self.relay_next[slot] {
                    self.relay_next[slot] = frame.seq + 1;
                    let relayed = Frame {
                        kind: FrameKind::Data,
                        src: AP_STATION,
                        dst: flow_dst,
                        session: frame.session,
                        seq: frame.seq,
                        sdu_bytes: frame.sdu_bytes,
                        retry_count: 0,
                        born_at: frame.born_at,
                    };
                    self.emit(TraceRecord::Relayed {
                        session: frame.session,
                        seq: frame.seq,
                        at: now,
                    });
                    self.enqueue_data(AP_STATION, relayed, now);
                } else {
                    self.duplicate_receptions += 1;
                }
                AttemptFate::DeliveredAcked
            }
        }
    }

    /// A clean downlink reception at a terminal: always acknowledged; the
    /// SDU goes up exactly once.
    fn terminal_receive_downlink(&mut self, frame: &Frame, now: SimTime) -> AttemptFate {
        self.send_ack(frame.dst, frame, now);
        let slot = frame.session as usize;
        if frame.seq >= self.deliver_next[slot] {
            self.deliver_next[slot] = frame.seq + 1;
            self.delivered_ids.insert((frame.session, frame.seq));
            self.emit(TraceRecord::DeliveredUp {
                session: frame.session,
                seq: frame.seq,
                sdu_bytes: frame.sdu_bytes,
                born_at: frame.born_at,
                at: now,
            });
        } else {
            self.duplicate_receptions += 1;
        }
        AttemptFate::DeliveredAcked
    }

    fn send_ack(&mut self, from: StationId, data: &Frame, now: SimTime) {
        let ack = Frame {
            kind: FrameKind::Ack,
            src: from,
            dst: data.src,
            session: data.session,
            seq: data.seq,
            sdu_bytes: 0,
            retry_count: 0,
            born_at: data.born_at,
        };
        self.cal
            .schedule(now + self.cfg.mac.sifs, SimEvent::AckStart { station: from, ack })
            .expect("schedule ack start");
    }

    fn resolve_ack(&mut self, ack: Frame, outcome: DeliveryOutcome, now: SimTime) {
        if outcome != DeliveryOutcome::Delivered {
            return; // the waiting sender will hit its timeout
        }
        let dst = ack.dst;
        if let AccessState::AwaitAck { timeout } = self.stations[dst as usize].access {
            self.cal.cancel(timeout);
            self.complete_success(dst, now);
        } else {
            self.emit(TraceRecord::StrayAck { station: dst, at: now });
        }
    }

    /// The handshake completed: drop the head, tell the policy, move on.
    fn complete_success(&mut self, station: StationId, now: SimTime) {
        let frame = self.stations[station as usize]
            .queue
            .pop_front()
            .expect("success with empty queue");
        self.emit(TraceRecord::AckedDequeue {
            station,
            session: frame.session,
            seq: frame.seq,
            at: now,
        });
        let status = self.status_map.status(frame.dst);
        self.stations[station as usize].policy.on_success(status);
        if station == AP_STATION {
            self.bda.on_ap_data_complete();
        }
        if self.stations[station as usize].queue.is_empty() {
            self.stations[station as usize].access = AccessState::Idle;
        } else {
            self.start_new_packet(station, now);
        }
    }

    fn on_ack_timeout(&mut self, station: StationId, now: SimTime) {
        debug_assert!(
            matches!(self.stations[station as usize].access, AccessState::AwaitAck { .. }),
            "timeout outside AwaitAck"
        );
        let st = &mut self.stations[station as usize];
        let head = st.queue.front_mut().expect("timeout with empty queue");
        head.retry_count += 1;
        if head.retry_count >= self.cfg.mac.short_retry {
            let frame = st.queue.pop_front().expect("just observed");
            let last_fate = st.last_fate;
            let hop = if station == AP_STATION { Hop::Downlink } else { Hop::Uplink };
            self.dropped_ids.insert((frame.session, frame.seq));
            self.emit(TraceRecord::Dropped {
                session: frame.session,
                seq: frame.seq,
                hop,
                fate: last_fate,
                born_at: frame.born_at,
                at: now,
            });
            if station == AP_STATION {
                self.bda.on_ap_data_complete();
            }
            if self.stations[station as usize].queue.is_empty() {
                self.stations[station as usize].access = AccessState::Idle;
            } else {
                self.start_new_packet(station, now);
            }
        } else {
            let status = self.status_map.status(head.dst);
            st.policy.on_failure(status);
            let cw = st.policy.cw();
            let backoff = draw_backoff(cw, &mut st.rng);
            self.enter_contention(station, backoff, now);
        }
    }

    fn emit(&mut self, rec: TraceRecord) {
        self.stats.observe(&rec);
        if self.cfg.record_trace {
            self.trace.push(rec);
        }
    }
}
