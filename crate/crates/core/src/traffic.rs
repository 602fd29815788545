//! Voice traffic: codec packetisation and the ON/OFF talkspurt process.
//!
//! Each session carries a one-way voice stream.  While the speaker is ON the
//! source emits one packet per framing interval, starting at the instant the
//! talkspurt begins; emission instants are exact multiples of the interval
//! and strictly inside the talkspurt.  ON and OFF durations are independent
//! exponentials (means 1.0 s and 0.25 s), giving a long-run activity factor
//! of 0.8.  Sources start in an OFF period so that stations do not all begin
//! talking at time zero.

use crate::mac::SessionId;
use crate::rng::{SimRng, STREAM_TRAFFIC};
use crate::time::{SimTime, NANOS_PER_SEC};

pub const MEAN_ON_SECS: f64 = 1.0;
pub const MEAN_OFF_SECS: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrafficError {
    /// The framing interval does not hold a whole number of payload bytes at
    /// the codec bit rate.
    NonIntegralPayload { fi: SimTime, bitrate_bps: u64 },
    /// The framing interval is too short to carry any payload at all.
    EmptyPayload { fi: SimTime },
}

impl std::fmt::Display for TrafficError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrafficError::NonIntegralPayload { fi, bitrate_bps } => write!(
                f,
                "framing interval {fi} at {bitrate_bps} b/s does not produce whole bytes"
            ),
            TrafficError::EmptyPayload { fi } => {
                write!(f, "framing interval {fi} produces an empty payload")
            }
        }
    }
}

impl std::error::Error for TrafficError {}

/// A constant-bit-rate voice codec plus its per-packet transport overhead.
#[derive(Clone, Copy, Debug)]
pub struct VoiceCodec {
    pub bitrate_bps: u64,
    /// RTP + UDP + IP headers carried inside every MAC SDU.
    pub header_bytes: u32,
}

impl VoiceCodec {
    /// ADPCM at 32 kb/s with the usual 40-byte RTP/UDP/IP header stack.
    pub fn g726_32() -> Self {
        VoiceCodec { bitrate_bps: 32_000, header_bytes: 40 }
    }

    /// Codec bytes accumulated over one framing interval.  Exact integer
    /// arithmetic: rejects intervals that would need fractional bytes.
    pub fn payload_bytes(&self, fi: SimTime) -> Result<u32, TrafficError> {
        let num = self.bitrate_bps as u128 * fi.nanos() as u128;
        let den = 8 * NANOS_PER_SEC as u128;
        if num % den != 0 {
            return Err(TrafficError::NonIntegralPayload { fi, bitrate_bps: self.bitrate_bps });
        }
        let bytes = num / den;
        if bytes == 0 {
            return Err(TrafficError::EmptyPayload { fi });
        }
        u32::try_from(bytes).map_err(|_| TrafficError::NonIntegralPayload {
            fi,
            bitrate_bps: self.bitrate_bps,
        })
    }

    /// Full MAC SDU: payload plus transport headers.
    pub fn sdu_bytes(&self, fi: SimTime) -> Result<u32, TrafficError> {
        Ok(self.payload_bytes(fi)? + self.header_bytes)
    }
}

/// Number of packets emitted during a talkspurt of length `on_len`:
/// one at each multiple of `fi` strictly before the talkspurt ends,
/// counting from the talkspurt start itself.
pub fn emissions_in(on_len: SimTime, fi: SimTime) -> u64 {
    assert!(fi > SimTime::ZERO, "framing interval must be positive");
    if on_len == SimTime::ZERO {
        return 0;
    }
    (on_len.nanos() - 1) / fi.nanos() + 1
}

/// The exponential ON/OFF process for one session, on its own stream.
#[derive(Clone, Debug)]
pub struct OnOffSource {
    rng: SimRng,
}

impl OnOffSource {
    pub fn new(seed: u64, session: SessionId) -> Self {
        OnOffSource { rng: SimRng::substream(seed, STREAM_TRAFFIC, session as u64, 0) }
    }

    /// Length of the silence period that precedes the first talkspurt.
    pub fn initial_off(&mut self) -> SimTime {
        self.draw_off()
    }

    pub fn draw_on(&mut self) -> SimTime {
        SimTime::from_secs_f64(self.rng.exp_secs(MEAN_ON_SECS))
    }

    pub fn draw_off(&mut self) -> SimTime {
        SimTime::from_secs_f64(self.rng.exp_secs(MEAN_OFF_SECS))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_framing_intervals_pack_exactly() {
        let codec = VoiceCodec::g726_32();
        let fi20 = SimTime::from_millis(20);
        let fi40 = SimTime::from_millis(40);
        assert_eq!(codec.payload_bytes(fi20), Ok(80));
        assert_eq!(codec.sdu_bytes(fi20), Ok(120));
        assert_eq!(codec.payload_bytes(fi40), Ok(160));
        assert_eq!(codec.sdu_bytes(fi40), Ok(200));
    }

    #[test]
    fn fractional_payload_is_rejected() {
        let codec = VoiceCodec::g726_32();
        let fi = SimTime(333_333);
        assert_eq!(
            codec.payload_bytes(fi),
            Err(TrafficError::NonIntegralPayload { fi, bitrate_bps: 32_000 })
        );
    }

    #[test]
    fn empty_payload_is_rejected() {
        let codec = VoiceCodec::g726_32();
        assert_eq!(
            codec.payload_bytes(SimTime::ZERO),
            Err(TrafficError::EmptyPayload { fi: SimTime::ZERO })
        );
    }

    #[test]
    fn full_second_talkspurt_emits_fifty_packets_at_20ms() {
        let fi = SimTime::from_millis(20);
        assert_eq!(emissions_in(SimTime::from_secs(1), fi), 50);
    }

    #[test]
    fn emission_count_edges() {
        let fi = SimTime::from_millis(20);
        // Zero-length talkspurt: nothing.
        assert_eq!(emissions_in(SimTime::ZERO, fi), 0);
        // Any positive length emits the packet at the talkspurt start.
        assert_eq!(emissions_in(SimTime(1), fi), 1);
        // A talkspurt exactly one interval long holds only that first packet:
        // the next multiple is not strictly inside.
        assert_eq!(emissions_in(fi, fi), 1);
        assert_eq!(emissions_in(fi + SimTime(1), fi), 2);
        assert_eq!(emissions_in(SimTime::from_millis(30), fi), 2);
    }

    #[test]
    fn activity_factor_approaches_point_eight() {
        // Renewal-reward: activity = E[on] / (E[on] + E[off]) = 1.0 / 1.25.
        let mut src = OnOffSource::new(42, 3);
        let mut on_total = 0u64;
        let mut off_total = src.initial_off().nanos();
        for _ in 0..5_000 {
            on_total += src.draw_on().nanos();
            off_total += src.draw_off().nanos();
        }
        let activity = on_total as f64 / (on_total + off_total) as f64;
        assert!((activity - 0.8).abs() < 0.016, "activity {activity}");
    }

    #[test]
    fn sessions_get_distinct_processes() {
        let mut a = OnOffSource::new(42, 0);
        let mut b = OnOffSource::new(42, 1);
        assert_ne!(a.draw_on(), b.draw_on());
    }
}
