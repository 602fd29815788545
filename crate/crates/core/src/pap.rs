//! Access-point prioritisation: destination channel-status tracking and
//! selective refusal of uplink acknowledgements.
//!
//! An infrastructure AP relays every voice packet, so one station behind a
//! lossy link can pin the AP's head-of-line slot while fresh uplink traffic
//! keeps pouring in.  The remedy implemented here lets the AP deliberately
//! withhold the ACK for an uplink DATA frame whose relay destination is
//! currently classified Bad: the sender times out, backs off, and the AP
//! wins a larger share of the channel for its own queue.  Refusals last only
//! while the AP makes no progress of its own — any completed downlink DATA
//! frame ends every refusal episode — and two caps make them harmless: a
//! per-source limit on consecutive refusals and a hard rule never to refuse
//! a frame that is one failure away from its retry limit, so a refusal can
//! never be the cause of a packet drop.

use std::collections::HashMap;

use crate::backoff::ChannelStatus;
use crate::mac::StationId;
use crate::metrics::AttemptFate;

/// How destination channel status is decided.
#[derive(Clone, Debug)]
pub enum ClassifierMode {
    /// Statuses fixed from scenario configuration; observations are ignored.
    Oracle,
    /// Run-length estimator over the AP's own downlink DATA outcomes:
    /// `fail_threshold` consecutive channel losses flag a destination Bad,
    /// `success_threshold` consecutive deliveries clear it.  Collisions
    /// say nothing about the link and leave both run lengths untouched.
    Estimator { fail_threshold: u8, success_threshold: u8 },
}

pub const DEFAULT_FAIL_THRESHOLD: u8 = 3;
pub const DEFAULT_SUCCESS_THRESHOLD: u8 = 2;

/// Per-destination channel classification, Good unless learned otherwise.
#[derive(Clone, Debug)]
pub struct ChannelStatusMap {
    mode: ClassifierMode,
    status: HashMap<StationId, ChannelStatus>,
    fail_run: HashMap<StationId, u8>,
    success_run: HashMap<StationId, u8>,
}

impl ChannelStatusMap {
    pub fn oracle(bad: impl IntoIterator<Item = StationId>) -> Self {
        let status = bad.into_iter().map(|s| (s, ChannelStatus::Bad)).collect();
        ChannelStatusMap {
            mode: ClassifierMode::Oracle,
            status,
            fail_run: HashMap::new(),
            success_run: HashMap::new(),
        }
    }

    pub fn estimator(fail_threshold: u8, success_threshold: u8) -> Self {
        assert!(fail_threshold > 0 && success_threshold > 0);
        ChannelStatusMap {
            mode: ClassifierMode::Estimator { fail_threshold, success_threshold },
            status: HashMap::new(),
            fail_run: HashMap::new(),
            success_run: HashMap::new(),
        }
    }

    pub fn status(&self, dst: StationId) -> ChannelStatus {
        self.status.get(&dst).copied().unwrap_or(ChannelStatus::Good)
    }

    /// Feed the outcome of one AP downlink DATA attempt to `dst`.
    pub fn observe(&mut self, dst: StationId, fate: AttemptFate) {
        let ClassifierMode::Estimator { fail_threshold, success_threshold } = self.mode else {
            return;
        };
        match fate {
            AttemptFate::Collided | AttemptFate::DeliveredBlocked => {}
            AttemptFate::ChannelLoss => {
                self.success_run.insert(dst, 0);
                let run = self.fail_run.entry(dst).or_insert(0);
                *run = run.saturating_add(1);
                if *run >= fail_threshold {
                    self.status.insert(dst, ChannelStatus::Bad);
                }
            }
            AttemptFate::DeliveredAcked => {
                self.fail_run.insert(dst, 0);
                let run = self.success_run.entry(dst).or_insert(0);
                *run = run.saturating_add(1);
                if *run >= success_threshold {
                    self.status.insert(dst, ChannelStatus::Good);
                }
            }
        }
    }
}

/// What the AP does with a correctly received uplink DATA frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AckDecision {
    /// Acknowledge and accept the frame for relay.
    Ack,
    /// Stay silent: discard the reception and let the sender time out.
    Block,
}

#[derive(Clone, Copy, Debug)]
pub struct BdaConfig {
    pub enabled: bool,
    /// Upper bound on consecutive refusals per source, and on the retry
    /// count a refused frame may already carry.  One below the MAC retry
    /// limit, so the forced acknowledgement always lands before a drop.
    pub block_cap: u8,
}

impl BdaConfig {
    pub fn for_short_retry(short_retry: u8) -> Self {
        assert!(short_retry >= 1);
        BdaConfig { enabled: true, block_cap: short_retry - 1 }
    }

    pub fn disabled() -> Self {
        BdaConfig { enabled: false, block_cap: 0 }
    }
}

/// Refusal bookkeeping for one uplink source.
#[derive(Clone, Copy, Debug, Default)]
struct SourceBlockState {
    /// Refusals in the current episode; 0 means no episode is active.
    streak: u8,
    /// The AP completed a downlink DATA frame since this episode began, so
    /// the episode is over: the next reception from this source is released.
    interrupted: bool,
}

/// Mutable state of the selective-ACK remedy at the AP.
///
/// Refusals come in *episodes*: the first refused reception from a source
/// opens one, and it lasts only while the AP itself makes no progress.  The
/// moment the AP completes any downlink DATA frame the episode is over and
/// the source's next reception is acknowledged.  Episodes therefore stretch
/// to the cap only while the AP is stalled (or idle) — exactly the periods
/// the remedy is meant to relieve — and shrink to a single refusal when the
/// AP's queue is flowing.
#[derive(Clone, Debug, Default)]
pub struct BdaState {
    sources: HashMap<StationId, SourceBlockState>,
    /// High-water mark of any refusal streak, for audit.
    pub max_streak_seen: u8,
    pub blocks_total: u64,
    /// Receptions acknowledged because a cap protected the frame.
    pub forced_acks: u64,
    /// Receptions acknowledged because AP progress ended the episode.
    pub released_acks: u64,
    /// Terminal completions of AP downlink DATA (delivered or given up).
    pub completions: u64,
}

impl BdaState {
    pub fn new() -> Self {
        BdaState::default()
    }

    /// Decide the fate of an uplink DATA reception and record it.
    ///
    /// `frame_retry` is the retry count the frame arrived with;
    /// `dst_status` is the classification of its relay destination.
    pub fn on_uplink_data(
        &mut self,
        cfg: &BdaConfig,
        src: StationId,
        frame_retry: u8,
        dst_status: ChannelStatus,
    ) -> AckDecision {
        if !cfg.enabled || dst_status == ChannelStatus::Good {
            self.sources.insert(src, SourceBlockState::default());
            return AckDecision::Ack;
        }
        let entry = self.sources.entry(src).or_default();
        if entry.streak > 0 && entry.interrupted {
            // The AP moved on since this episode began; let the frame through.
            *entry = SourceBlockState::default();
            self.released_acks += 1;
            AckDecision::Ack
        } else if entry.streak < cfg.block_cap && frame_retry < cfg.block_cap {
            if entry.streak == 0 {
                entry.interrupted = false; // a fresh episode begins here
            }
            entry.streak += 1;
            self.max_streak_seen = self.max_streak_seen.max(entry.streak);
            self.blocks_total += 1;
            AckDecision::Block
        } else {
            // A cap tripped: either the episode ran its course or the frame
            // is one failure from its retry limit.  Protect it.
            *entry = SourceBlockState::default();
            self.forced_acks += 1;
            AckDecision::Ack
        }
    }

    /// The AP finished a downlink DATA frame (acknowledged or given up):
    /// every active refusal episode is marked over, globally.
    pub fn on_ap_data_complete(&mut self) {
        self.completions += 1;
        for entry in self.sources.values_mut() {
            entry.interrupted = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BAD: ChannelStatus = ChannelStatus::Bad;
    const GOOD: ChannelStatus = ChannelStatus::Good;

    #[test]
    fn oracle_statuses_are_fixed() {
        let mut map = ChannelStatusMap::oracle([4u32, 6]);
        assert_eq!(map.status(4), BAD);
        assert_eq!(map.status(6), BAD);
        assert_eq!(map.status(2), GOOD);
        // Observations never move an oracle.
        for _ in 0..10 {
            map.observe(2, AttemptFate::ChannelLoss);
            map.observe(4, AttemptFate::DeliveredAcked);
        }
        assert_eq!(map.status(4), BAD);
        assert_eq!(map.status(2), GOOD);
    }

    #[test]
    fn estimator_flags_after_consecutive_losses() {
        let mut map = ChannelStatusMap::estimator(3, 2);
        map.observe(4, AttemptFate::ChannelLoss);
        map.observe(4, AttemptFate::ChannelLoss);
        assert_eq!(map.status(4), GOOD);
        map.observe(4, AttemptFate::ChannelLoss);
        assert_eq!(map.status(4), BAD);
    }

    #[test]
    fn estimator_ignores_collisions_entirely() {
        let mut map = ChannelStatusMap::estimator(3, 2);
        map.observe(4, AttemptFate::ChannelLoss);
        map.observe(4, AttemptFate::ChannelLoss);
        map.observe(4, AttemptFate::Collided);
        map.observe(4, AttemptFate::ChannelLoss);
        // The collision neither broke nor extended the loss run.
        assert_eq!(map.status(4), BAD);
    }

    #[test]
    fn estimator_success_breaks_a_loss_run() {
        let mut map = ChannelStatusMap::estimator(3, 2);
        map.observe(4, AttemptFate::ChannelLoss);
        map.observe(4, AttemptFate::ChannelLoss);
        map.observe(4, AttemptFate::DeliveredAcked);
        map.observe(4, AttemptFate::ChannelLoss);
        map.observe(4, AttemptFate::ChannelLoss);
        assert_eq!(map.status(4), GOOD);
        map.observe(4, AttemptFate::ChannelLoss);
        assert_eq!(map.status(4), BAD);
    }

    #[test]
    fn estimator_clears_after_consecutive_successes() {
        let mut map = ChannelStatusMap::estimator(3, 2);
        for _ in 0..3 {
            map.observe(4, AttemptFate::ChannelLoss);
        }
        assert_eq!(map.status(4), BAD);
        map.observe(4, AttemptFate::DeliveredAcked);
        assert_eq!(map.status(4), BAD);
        // A loss in between restarts the recovery run.
        map.observe(4, AttemptFate::ChannelLoss);
        map.observe(4, AttemptFate::DeliveredAcked);
        assert_eq!(map.status(4), BAD);
        map.observe(4, AttemptFate::DeliveredAcked);
        assert_eq!(map.status(4), GOOD);
    }

    #[test]
    fn refusal_streak_is_capped_then_forced_ack() {
        let cfg = BdaConfig::for_short_retry(7);
        let mut bda = BdaState::new();
        // Same frame retried: retry count grows with each refusal.
        for retry in 0..6u8 {
            assert_eq!(bda.on_uplink_data(&cfg, 1, retry, BAD), AckDecision::Block);
        }
        assert_eq!(bda.on_uplink_data(&cfg, 1, 6, BAD), AckDecision::Ack);
        assert_eq!(bda.max_streak_seen, 6);
        assert_eq!(bda.blocks_total, 6);
        assert_eq!(bda.forced_acks, 1);
        // The forced acknowledgement reset the streak.
        assert_eq!(bda.on_uplink_data(&cfg, 1, 0, BAD), AckDecision::Block);
    }

    #[test]
    fn frame_near_retry_limit_is_never_refused() {
        let cfg = BdaConfig::for_short_retry(7);
        let mut bda = BdaState::new();
        // Fresh streak, but the frame already burned six attempts elsewhere
        // (collisions, losses): refusing it could cause the drop.
        assert_eq!(bda.on_uplink_data(&cfg, 1, 6, BAD), AckDecision::Ack);
        assert_eq!(bda.blocks_total, 0);
    }

    #[test]
    fn good_destinations_are_always_acknowledged() {
        let cfg = BdaConfig::for_short_retry(7);
        let mut bda = BdaState::new();
        for retry in 0..7u8 {
            assert_eq!(bda.on_uplink_data(&cfg, 1, retry, GOOD), AckDecision::Ack);
        }
        assert_eq!(bda.blocks_total, 0);
    }

    #[test]
    fn ap_completion_releases_the_pending_frame() {
        let cfg = BdaConfig::for_short_retry(7);
        let mut bda = BdaState::new();
        for retry in 0..3u8 {
            assert_eq!(bda.on_uplink_data(&cfg, 1, retry, BAD), AckDecision::Block);
        }
        bda.on_ap_data_complete();
        assert_eq!(bda.completions, 1);
        // The AP made progress, so the episode is over: the frame's next
        // attempt goes through even though its destination is still Bad.
        assert_eq!(bda.on_uplink_data(&cfg, 1, 3, BAD), AckDecision::Ack);
        assert_eq!(bda.released_acks, 1);
        // The next frame opens a fresh episode.
        assert_eq!(bda.on_uplink_data(&cfg, 1, 0, BAD), AckDecision::Block);
        assert_eq!(bda.max_streak_seen, 3);
    }

    #[test]
    fn ap_completion_releases_every_source() {
        let cfg = BdaConfig::for_short_retry(7);
        let mut bda = BdaState::new();
        assert_eq!(bda.on_uplink_data(&cfg, 1, 0, BAD), AckDecision::Block);
        assert_eq!(bda.on_uplink_data(&cfg, 3, 0, BAD), AckDecision::Block);
        bda.on_ap_data_complete();
        assert_eq!(bda.on_uplink_data(&cfg, 1, 1, BAD), AckDecision::Ack);
        assert_eq!(bda.on_uplink_data(&cfg, 3, 1, BAD), AckDecision::Ack);
        assert_eq!(bda.released_acks, 2);
    }

    #[test]
    fn uninterrupted_episode_runs_to_the_cap() {
        // No AP progress (a stalled or empty AP queue): refusals continue
        // across frames of the same source until the streak cap trips.
        let cfg = BdaConfig::for_short_retry(7);
        let mut bda = BdaState::new();
        for retry in 0..6u8 {
            assert_eq!(bda.on_uplink_data(&cfg, 1, retry, BAD), AckDecision::Block);
        }
        assert_eq!(bda.on_uplink_data(&cfg, 1, 6, BAD), AckDecision::Ack);
        assert_eq!(bda.forced_acks, 1);
        assert_eq!(bda.released_acks, 0);
    }

    #[test]
    fn acknowledged_reception_resets_the_streak() {
        let cfg = BdaConfig::for_short_retry(7);
        let mut bda = BdaState::new();
        assert_eq!(bda.on_uplink_data(&cfg, 1, 0, BAD), AckDecision::Block);
        assert_eq!(bda.on_uplink_data(&cfg, 1, 1, GOOD), AckDecision::Ack);
        assert_eq!(bda.on_uplink_data(&cfg, 1, 0, BAD), AckDecision::Block);
        assert_eq!(bda.max_streak_seen, 1);
    }

    #[test]
    fn disabled_remedy_always_acknowledges() {
        let cfg = BdaConfig::disabled();
        let mut bda = BdaState::new();
        for retry in 0..7u8 {
            assert_eq!(bda.on_uplink_data(&cfg, 1, retry, BAD), AckDecision::Ack);
        }
        assert_eq!(bda.blocks_total, 0);
    }

    #[test]
    fn streaks_are_tracked_per_source() {
        let cfg = BdaConfig::for_short_retry(7);
        let mut bda = BdaState::new();
        for retry in 0..6u8 {
            assert_eq!(bda.on_uplink_data(&cfg, 1, retry, BAD), AckDecision::Block);
        }
        // Source 3 has its own streak and is still refusable.
        assert_eq!(bda.on_uplink_data(&cfg, 3, 0, BAD), AckDecision::Block);
        assert_eq!(bda.on_uplink_data(&cfg, 1, 6, BAD), AckDecision::Ack);
    }
}
