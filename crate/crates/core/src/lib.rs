//! Discrete-event simulator of 802.11b DCF infrastructure networks carrying
//! one-way voice sessions, together with the analytic service-time model the
//! simulator is checked against.
//!
//! The crate is organised around a small deterministic event calendar
//! ([`engine`]), a single-collision-domain radio medium ([`medium`]), and a
//! per-station DCF state machine ([`world`]).  Contention-window policies live
//! in [`backoff`]; the access-point prioritisation controls (adaptive backoff
//! multiplier plus ACK withholding for flagged flows) live in [`pap`].
//! Scenario configuration, replication driving and CSV output live in
//! [`scenario`]; per-flow accounting and the E-model voice score in
//! [`metrics`].

pub mod analytic;
pub mod backoff;
pub mod engine;
pub mod mac;
pub mod medium;
pub mod metrics;
pub mod pap;
pub mod rng;
pub mod scenario;
pub mod time;
pub mod traffic;
pub mod world;

pub use engine::{Calendar, CancelOutcome, EventHandle};
pub use mac::MacConfig;
pub use time::SimTime;
