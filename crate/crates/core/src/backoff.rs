//! Contention-window policies.
//!
//! Terminals always run classic binary exponential backoff.  In prioritized
//! mode the access point instead runs a smoothed exponential policy whose
//! growth factor `z` adapts to the channel quality of the destinations it
//! serves: every failed transmission towards a flagged (Bad) destination
//! lowers `z` by 0.1, every completed transmission towards a Good destination
//! raises it by 0.1.  `z` lives on the 0.1 grid in [1.0, 2.0] and persists
//! across packets; the window itself resets on every new packet.
//!
//! `z` is stored in tenths so the window recurrence `cw' = z * cw + 1`
//! (rounded half away from zero) is evaluated in exact integer arithmetic.

use crate::rng::SimRng;

pub const CW_MIN_DEFAULT: u32 = 31;
pub const CW_MAX_DEFAULT: u32 = 1023;

const Z_TENTHS_MIN: u32 = 10;
const Z_TENTHS_MAX: u32 = 20;

/// Channel quality of a destination as seen by the access point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelStatus {
    Good,
    Bad,
}

/// Uniform draw over `{0, 1, .., cw - 1}` slots.
pub fn draw_backoff(cw: u32, rng: &mut SimRng) -> u32 {
    debug_assert!(cw >= 1);
    rng.uniform(cw)
}

/// Classic binary exponential backoff: `cw' = 2 cw + 1`, capped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BebState {
    pub cw: u32,
    pub cw_min: u32,
    pub cw_max: u32,
}

impl BebState {
    pub fn new(cw_min: u32, cw_max: u32) -> Self {
        BebState { cw: cw_min, cw_min, cw_max }
    }

    pub fn on_failure(&mut self) {
        self.cw = (2 * self.cw + 1).min(self.cw_max);
    }

    pub fn on_new_packet(&mut self) {
        self.cw = self.cw_min;
    }
}

/// Smoothed exponential backoff: `cw' = z * cw + 1` with adaptive `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneXState {
    pub cw: u32,
    /// Growth factor in tenths: 10 ..= 20 represents 1.0 ..= 2.0.
    pub z_tenths: u32,
    pub cw_min: u32,
    pub cw_max: u32,
    /// How many 0.1 steps `z` gains per completed Good-destination cycle.
    pub good_steps: u32,
}

impl OneXState {
    pub fn new(cw_min: u32, cw_max: u32) -> Self {
        OneXState {
            cw: cw_min,
            z_tenths: Z_TENTHS_MAX,
            cw_min,
            cw_max,
            good_steps: 1,
        }
    }

    pub fn z(&self) -> f64 {
        self.z_tenths as f64 / 10.0
    }

    /// `round_half_away(z * cw + 1)`, capped; exact in integers.
    fn grown_cw(&self) -> u32 {
        let scaled = self.z_tenths as u64 * self.cw as u64 + 10; // (z*cw + 1) in tenths
        let rounded = ((scaled + 5) / 10) as u32;
        rounded.min(self.cw_max)
    }

    /// A transmission cycle towards `status` ended in failure: adapt `z`
    /// first, then widen the window with the adapted factor.
    pub fn on_failure(&mut self, status: ChannelStatus) {
        match status {
            ChannelStatus::Bad => {
                self.z_tenths = self.z_tenths.saturating_sub(1).max(Z_TENTHS_MIN);
            }
            ChannelStatus::Good => {
                self.z_tenths = (self.z_tenths + self.good_steps).min(Z_TENTHS_MAX);
            }
        }
        self.cw = self.grown_cw();
    }

    /// A transmission cycle completed successfully.
    pub fn on_success(&mut self, status: ChannelStatus) {
        if status == ChannelStatus::Good {
            self.z_tenths = (self.z_tenths + self.good_steps).min(Z_TENTHS_MAX);
        }
    }

    pub fn on_new_packet(&mut self) {
        self.cw = self.cw_min; // z persists across packets
    }
}

/// Per-station policy selector.
#[derive(Clone, Debug)]
pub enum Policy {
    Beb(BebState),
    OneX(OneXState),
}

impl Policy {
    pub fn beb(cw_min: u32, cw_max: u32) -> Self {
        Policy::Beb(BebState::new(cw_min, cw_max))
    }

    pub fn one_x(cw_min: u32, cw_max: u32) -> Self {
        Policy::OneX(OneXState::new(cw_min, cw_max))
    }

    pub fn cw(&self) -> u32 {
        match self {
            Policy::Beb(s) => s.cw,
            Policy::OneX(s) => s.cw,
        }
    }

    pub fn on_failure(&mut self, dst_status: ChannelStatus) {
        match self {
            Policy::Beb(s) => s.on_failure(),
            Policy::OneX(s) => s.on_failure(dst_status),
        }
    }

    pub fn on_success(&mut self, dst_status: ChannelStatus) {
        match self {
            Policy::Beb(_) => {}
            Policy::OneX(s) => s.on_success(dst_status),
        }
    }

    pub fn on_new_packet(&mut self) {
        match self {
            Policy::Beb(s) => s.on_new_packet(),
            Policy::OneX(s) => s.on_new_packet(),
        }
    }
}
