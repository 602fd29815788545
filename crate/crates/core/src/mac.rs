//! MAC-layer frame types and timing parameters (802.11b HR-DSSS, basic
//! DATA/ACK access, long PLCP preamble).

use crate::time::SimTime;

pub type StationId = u32;
pub type SessionId = u32;

/// The access point is always station 0.
pub const AP_STATION: StationId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Data,
    Ack,
}

/// One MAC frame in flight or queued.  `born_at` travels with the payload
/// across the relay hop so end-to-end delay is measured from the moment the
/// voice frame entered the source queue.
#[derive(Clone, Debug)]
pub struct Frame {
    pub kind: FrameKind,
    pub src: StationId,
    pub dst: StationId,
    pub session: SessionId,
    pub seq: u32,
    pub sdu_bytes: u32,
    pub retry_count: u32,
    pub born_at: SimTime,
}

/// Channel access and PHY timing knobs.  Defaults are 802.11b DCF values at
/// 11 Mb/s payload rate with 2 Mb/s control responses.
#[derive(Clone, Debug)]
pub struct MacConfig {
    pub slot: SimTime,
    pub sifs: SimTime,
    pub difs: SimTime,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Attempt budget for short frames: a frame is abandoned once it has
    /// failed this many times.
    pub short_retry: u32,
    /// Budget for frames above the RTS threshold; unused while RTS/CTS stays
    /// disabled but kept so the configuration surface is complete.
    pub long_retry: u32,
    pub data_rate_bps: u64,
    pub ack_rate_bps: u64,
    /// PLCP preamble + header time prefixed to every frame.
    pub plcp_overhead: SimTime,
    /// MAC header + FCS + LLC/SNAP bytes added to each voice SDU.
    pub mac_overhead_bytes: u32,
    pub ack_bytes: u32,
    pub prop_delay: SimTime,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            slot: SimTime::from_micros(20),
            sifs: SimTime::from_micros(10),
            difs: SimTime::from_micros(50),
            cw_min: 31,
            cw_max: 1023,
            short_retry: 7,
            long_retry: 4,
            data_rate_bps: 11_000_000,
            ack_rate_bps: 2_000_000,
            plcp_overhead: SimTime::from_micros(192),
            mac_overhead_bytes: 36,
            ack_bytes: 14,
            prop_delay: SimTime::from_micros(1),
        }
    }
}

fn tx_time(bits: u64, rate_bps: u64) -> SimTime {
    // ceil(bits / rate) at nanosecond granularity
    SimTime((bits * 1_000_000_000).div_ceil(rate_bps))
}

impl MacConfig {
    /// Air time of a DATA frame carrying `sdu_bytes` of payload.
    pub fn data_duration(&self, sdu_bytes: u32) -> SimTime {
        let bits = (sdu_bytes + self.mac_overhead_bytes) as u64 * 8;
        self.plcp_overhead + tx_time(bits, self.data_rate_bps)
    }

    /// Air time of an ACK frame.
    pub fn ack_duration(&self) -> SimTime {
        self.plcp_overhead + tx_time(self.ack_bytes as u64 * 8, self.ack_rate_bps)
    }

    /// How long a sender waits after its DATA transmission ends before
    /// declaring the attempt failed: the SIFS turnaround, the ACK itself,
    /// propagation both ways, and one slot of slack.
    pub fn ack_timeout(&self) -> SimTime {
        self.sifs + self.ack_duration() + self.prop_delay + self.prop_delay + self.slot
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.cw_min == 0 || self.cw_min > self.cw_max {
            return Err(format!("cw_min {} must be in 1..=cw_max {}", self.cw_min, self.cw_max));
        }
        if self.short_retry == 0 || self.long_retry == 0 {
            return Err("retry limits must be at least 1".into());
        }
        if self.data_rate_bps == 0 || self.ack_rate_bps == 0 {
            return Err("link rates must be positive".into());
        }
        if self.slot == SimTime::ZERO {
            return Err("slot time must be positive".into());
        }
        if self.sifs >= self.difs {
            return Err("sifs must be shorter than difs".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_duration_rounds_up_to_nanoseconds() {
        let mac = MacConfig::default();
        // 120-byte SDU + 36 bytes of MAC framing = 1248 bits at 11 Mb/s
        // = 113454.54..us -> 113455 ns on top of the 192 us preamble.
        assert_eq!(mac.data_duration(120).nanos(), 192_000 + 113_455);
        assert_eq!(mac.data_duration(200).nanos(), 192_000 + 171_637);
    }

    #[test]
    fn ack_timing() {
        let mac = MacConfig::default();
        // 14 bytes at 2 Mb/s = 56 us after the preamble.
        assert_eq!(mac.ack_duration().nanos(), 248_000);
        assert_eq!(mac.ack_timeout().nanos(), 10_000 + 248_000 + 2_000 + 20_000);
    }

    #[test]
    fn default_config_is_valid() {
        assert!(MacConfig::default().validate().is_ok());
    }

    #[test]
    fn validation_catches_bad_windows() {
        let mut mac = MacConfig::default();
        mac.cw_min = 2048;
        assert!(mac.validate().is_err());
    }
}
