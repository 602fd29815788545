//! Per-flow accounting and the ITU-T G.107 E-model voice score.
//!
//! The simulator core emits a flat stream of [`TraceRecord`]s; the collector
//! reduces them to per-session counters.  Rate, delay and loss statistics are
//! windowed on the configured warm-up — only voice frames born after the
//! warm-up instant count — while the lifetime counters stay unfiltered so
//! that the generated = delivered + dropped + queued identity can be checked
//! exactly at any stopping point.

use crate::mac::{SessionId, StationId, AP_STATION};
use crate::time::SimTime;

/// Which hop of the two-hop relay path an event belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hop {
    Uplink,
    Downlink,
}

/// How a transmission attempt ended, as seen by the medium and receiver.
/// The sender itself only ever observes "ACK" or "no ACK"; this record keeps
/// the ground truth so tests can attribute failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttemptFate {
    Collided,
    ChannelLoss,
    DeliveredAcked,
    /// Received correctly but the access point withheld the ACK.
    DeliveredBlocked,
}

#[derive(Clone, Debug)]
pub enum TraceRecord {
    /// A voice SDU entered its source queue.
    Generated { session: SessionId, seq: u32, at: SimTime },
    /// A DATA transmission started.
    Transmit { station: StationId, session: SessionId, seq: u32, retry: u32, at: SimTime },
    /// A DATA transmission was resolved at its end instant.
    TxResolved { station: StationId, session: SessionId, seq: u32, fate: AttemptFate, at: SimTime },
    /// The access point withheld an ACK for a correctly received frame.
    Blocked { session: SessionId, seq: u32, at: SimTime },
    /// An SDU was handed to the access point queue for the second hop.
    Relayed { session: SessionId, seq: u32, at: SimTime },
    /// An SDU reached its destination terminal (first copy only).
    DeliveredUp { session: SessionId, seq: u32, sdu_bytes: u32, born_at: SimTime, at: SimTime },
    /// A frame exhausted its retry budget and was discarded.
    Dropped {
        session: SessionId,
        seq: u32,
        hop: Hop,
        fate: AttemptFate,
        born_at: SimTime,
        at: SimTime,
    },
    /// A head frame left a queue after a successful handshake.
    AckedDequeue { station: StationId, session: SessionId, seq: u32, at: SimTime },
    /// An ACK arrived at a station that was not waiting for it.
    StrayAck { station: StationId, at: SimTime },
}

/// Counters for one voice session.  The first block is warm-up-windowed; the
/// `_all` block counts everything since t = 0.
#[derive(Clone, Debug, Default)]
pub struct FlowStats {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub bits_delivered: u64,
    pub delay_sum_ns: u128,
    pub delay_max_ns: u64,

    pub generated_all: u64,
    pub delivered_all: u64,
    pub dropped_all: u64,
    pub dropped_uplink_all: u64,
    /// Uplink drops whose final failure was a withheld ACK.
    pub dropped_after_block: u64,
    pub blocked_receptions: u64,
}

impl FlowStats {
    pub fn mean_delay_s(&self) -> f64 {
        if self.delivered == 0 {
            0.0
        } else {
            self.delay_sum_ns as f64 / self.delivered as f64 / 1e9
        }
    }

    pub fn loss_ratio(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.dropped as f64 / self.generated as f64
        }
    }

    pub fn throughput_bps(&self, window_s: f64) -> f64 {
        debug_assert!(window_s > 0.0);
        self.bits_delivered as f64 / window_s
    }
}

/// Reduces the trace stream to per-flow statistics.
#[derive(Clone, Debug)]
pub struct StatsCollector {
    warmup: SimTime,
    flows: Vec<FlowStats>,
    pub stray_acks: u64,
    /// Successful DATA handshakes completed by the access point.
    pub ap_data_successes: u64,
}

impl StatsCollector {
    pub fn new(n_sessions: usize, warmup: SimTime) -> Self {
        StatsCollector {
            warmup,
            flows: vec![FlowStats::default(); n_sessions],
            stray_acks: 0,
            ap_data_successes: 0,
        }
    }

    pub fn flows(&self) -> &[FlowStats] {
        &self.flows
    }

    pub fn flow(&self, session: SessionId) -> &FlowStats {
        &self.flows[session as usize]
    }

    fn windowed(&self, born_at: SimTime) -> bool {
        born_at >= self.warmup
    }

    pub fn observe(&mut self, rec: &TraceRecord) {
        match *rec {
            TraceRecord::Generated { session, at, .. } => {
                let f = &mut self.flows[session as usize];
                f.generated_all += 1;
                if self.warmup <= at {
                    f.generated += 1;
                }
            }
            TraceRecord::DeliveredUp { session, sdu_bytes, born_at, at, .. } => {
                let windowed = self.windowed(born_at);
                let f = &mut self.flows[session as usize];
                f.delivered_all += 1;
                if windowed {
                    f.delivered += 1;
                    f.bits_delivered += sdu_bytes as u64 * 8;
                    let delay = (at - born_at).nanos();
                    f.delay_sum_ns += delay as u128;
                    f.delay_max_ns = f.delay_max_ns.max(delay);
                }
            }
            TraceRecord::Dropped { session, hop, fate, born_at, .. } => {
                let windowed = self.windowed(born_at);
                let f = &mut self.flows[session as usize];
                f.dropped_all += 1;
                if hop == Hop::Uplink {
                    f.dropped_uplink_all += 1;
                    if fate == AttemptFate::DeliveredBlocked {
                        f.dropped_after_block += 1;
                    }
                }
                if windowed {
                    f.dropped += 1;
                }
            }
            TraceRecord::Blocked { session, .. } => {
                self.flows[session as usize].blocked_receptions += 1;
            }
            TraceRecord::AckedDequeue { station, .. } => {
                if station == AP_STATION {
                    self.ap_data_successes += 1;
                }
            }
            TraceRecord::StrayAck { .. } => {
                self.stray_acks += 1;
            }
            TraceRecord::Transmit { .. }
            | TraceRecord::TxResolved { .. }
            | TraceRecord::Relayed { .. } => {}
        }
    }
}

/// One reduced row of output metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub throughput_bps: f64,
    pub mean_delay_s: f64,
    pub loss_ratio: f64,
    pub mos: f64,
}

/// Reduce any set of flows (a single session, a group, or the whole run)
/// to rate, delay, loss and voice score over the measurement window.
pub fn reduce<'a>(flows: impl IntoIterator<Item = &'a FlowStats>, window_s: f64) -> MetricsRow {
    let mut generated = 0u64;
    let mut delivered = 0u64;
    let mut dropped = 0u64;
    let mut bits = 0u64;
    let mut delay_sum: u128 = 0;
    for f in flows {
        generated += f.generated;
        delivered += f.delivered;
        dropped += f.dropped;
        bits += f.bits_delivered;
        delay_sum += f.delay_sum_ns;
    }
    let mean_delay_s = if delivered == 0 {
        0.0
    } else {
        delay_sum as f64 / delivered as f64 / 1e9
    };
    let loss_ratio = if generated == 0 { 0.0 } else { dropped as f64 / generated as f64 };
    MetricsRow {
        throughput_bps: bits as f64 / window_s,
        mean_delay_s,
        loss_ratio,
        mos: mos(mean_delay_s, loss_ratio),
    }
}

// --- E-model (ITU-T G.107), narrowband, G.726-style equipment impairment ---

const R_BASE: f64 = 93.2;
const CODEC_IE: f64 = 7.0;
const CODEC_BPL: f64 = 24.0;
/// Fixed mouth-to-ear overhead added on top of network delay: codec framing,
/// playout buffering and the like.
const FIXED_DELAY_MS: f64 = 60.0;

/// Transmission rating factor for a one-way network delay (seconds) and an
/// end-to-end loss ratio in [0, 1].
pub fn r_factor(delay_s: f64, loss_ratio: f64) -> f64 {
    let d_ms = 1000.0 * delay_s + FIXED_DELAY_MS;
    let mut id = 0.024 * d_ms;
    if d_ms > 177.3 {
        id += 0.11 * (d_ms - 177.3);
    }
    let loss_pct = 100.0 * loss_ratio;
    let ie_eff = CODEC_IE + 88.0 * loss_pct / (loss_pct + CODEC_BPL);
    R_BASE - id - ie_eff
}

/// Map the rating factor to a mean opinion score.
pub fn mos_from_r(r: f64) -> f64 {
    if r < 0.0 {
        1.0
    } else if r > 100.0 {
        4.5
    } else {
        1.0 + 0.035 * r + 7.0e-6 * r * (r - 60.0) * (100.0 - r)
    }
}

pub fn mos(delay_s: f64, loss_ratio: f64) -> f64 {
    mos_from_r(r_factor(delay_s, loss_ratio))
}

/// Largest loss ratio that still scores at least `target_mos` at the given
/// delay, or 0 if the delay alone already sinks the score below the target.
/// Printed alongside run summaries so delay and loss budgets can be judged
/// jointly.
pub fn loss_bound_for_mos(target_mos: f64, delay_s: f64) -> f64 {
    if mos(delay_s, 0.0) < target_mos {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mos(delay_s, mid) >= target_mos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_network_scores_well() {
        let r = r_factor(0.0, 0.0);
        assert!((r - 84.76).abs() < 1e-9, "r = {r}");
        let m = mos(0.0, 0.0);
        assert!((m - 4.19049).abs() < 1e-3, "mos = {m}");
    }

    #[test]
    fn delay_penalty_kinks_past_budget() {
        // Below the 177.3 ms mouth-to-ear knee only the linear term applies.
        let r_low = r_factor(0.100, 0.0);
        assert!((r_low - (93.2 - 0.024 * 160.0 - 7.0)).abs() < 1e-9);
        // 150 ms network + 60 ms fixed = 210 ms, past the knee.
        let r_high = r_factor(0.150, 0.0);
        let expect = 93.2 - (0.024 * 210.0 + 0.11 * (210.0 - 177.3)) - 7.0;
        assert!((r_high - expect).abs() < 1e-9);
    }

    #[test]
    fn score_is_monotone_in_delay_and_loss() {
        let mut prev = f64::INFINITY;
        for d in [0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0, 5.0] {
            let m = mos(d, 0.0);
            assert!(m <= prev + 1e-12);
            prev = m;
        }
        let mut prev = f64::INFINITY;
        for l in [0.0, 0.01, 0.05, 0.1, 0.3, 0.7, 1.0] {
            let m = mos(0.05, l);
            assert!(m <= prev + 1e-12);
            prev = m;
        }
    }

    #[test]
    fn score_saturates_at_scale_ends() {
        assert_eq!(mos(30.0, 1.0), 1.0);
        assert_eq!(mos_from_r(101.0), 4.5);
        assert_eq!(mos_from_r(100.0), 4.5); // cubic hits 4.5 exactly at r = 100
    }

    #[test]
    fn loss_budget_at_delay_budget() {
        // At 150 ms one-way delay, a score of 3.6 tolerates only a couple of
        // percent loss.
        let bound = loss_bound_for_mos(3.6, 0.150);
        assert!(bound > 0.01 && bound < 0.04, "bound = {bound}");
        assert!((mos(0.150, bound) - 3.6).abs() < 1e-6);
        // At half a second of delay no loss budget remains.
        assert_eq!(loss_bound_for_mos(3.6, 0.5), 0.0);
    }

    #[test]
    fn collector_windows_on_birth_time() {
        let warmup = SimTime::from_secs(10);
        let mut c = StatsCollector::new(1, warmup);
        // Born during warm-up, delivered after: lifetime counters only.
        c.observe(&TraceRecord::Generated { session: 0, seq: 0, at: SimTime::from_secs(5) });
        c.observe(&TraceRecord::DeliveredUp {
            session: 0,
            seq: 0,
            sdu_bytes: 120,
            born_at: SimTime::from_secs(5),
            at: SimTime::from_secs(11),
        });
        // Born after warm-up.
        c.observe(&TraceRecord::Generated { session: 0, seq: 1, at: SimTime::from_secs(12) });
        c.observe(&TraceRecord::DeliveredUp {
            session: 0,
            seq: 1,
            sdu_bytes: 120,
            born_at: SimTime::from_secs(12),
            at: SimTime(12_003_000_000),
        });
        let f = c.flow(0);
        assert_eq!((f.generated_all, f.delivered_all), (2, 2));
        assert_eq!((f.generated, f.delivered), (1, 1));
        assert_eq!(f.bits_delivered, 960);
        assert_eq!(f.delay_sum_ns, 3_000_000);
        assert_eq!(f.mean_delay_s(), 0.003);
    }

    #[test]
    fn reduce_pools_flows() {
        let warmup = SimTime::ZERO;
        let mut c = StatsCollector::new(2, warmup);
        for (sess, seq, delay_ms) in [(0u32, 0u32, 10u64), (1, 0, 30)] {
            c.observe(&TraceRecord::Generated { session: sess, seq, at: SimTime::ZERO });
            c.observe(&TraceRecord::DeliveredUp {
                session: sess,
                seq,
                sdu_bytes: 120,
                born_at: SimTime::ZERO,
                at: SimTime::from_millis(delay_ms),
            });
        }
        c.observe(&TraceRecord::Generated { session: 1, seq: 1, at: SimTime::ZERO });
        c.observe(&TraceRecord::Dropped {
            session: 1,
            seq: 1,
            hop: Hop::Downlink,
            fate: AttemptFate::ChannelLoss,
            born_at: SimTime::ZERO,
            at: SimTime::from_millis(40),
        });
        let row = reduce(c.flows(), 2.0);
        assert_eq!(row.throughput_bps, 960.0);
        assert!((row.mean_delay_s - 0.020).abs() < 1e-12);
        assert!((row.loss_ratio - 1.0 / 3.0).abs() < 1e-12);
        assert!(row.mos > 1.0 && row.mos < 4.5);
    }

    #[test]
    fn drop_attribution_counters() {
        let mut c = StatsCollector::new(1, SimTime::ZERO);
        c.observe(&TraceRecord::Generated { session: 0, seq: 0, at: SimTime::ZERO });
        c.observe(&TraceRecord::Blocked { session: 0, seq: 0, at: SimTime::from_millis(1) });
        c.observe(&TraceRecord::Dropped {
            session: 0,
            seq: 0,
            hop: Hop::Uplink,
            fate: AttemptFate::DeliveredBlocked,
            born_at: SimTime::ZERO,
            at: SimTime::from_millis(2),
        });
        let f = c.flow(0);
        assert_eq!(f.blocked_receptions, 1);
        assert_eq!(f.dropped_uplink_all, 1);
        assert_eq!(f.dropped_after_block, 1);
    }
}
