//! Closed-form expected per-packet service time of a station running binary
//! exponential backoff against a channel that kills each transmission
//! independently with probability `p`, with a retry budget of `m`
//! retransmissions.
//!
//! With `w` the initial window (slot count), sigma the slot time, `Tf` the
//! cost of a failed transmission and `Ts` the cost of the final successful
//! one, the expectation is
//!
//! ```text
//! T = sum_{j=0}^{m} p^j (1-p) [ sum_{k=0}^{j} (2^k w - 1)/2 * sigma + j*Tf + Ts ]
//!   + p^{m+1}      [ sum_{k=0}^{m} (2^k w - 1)/2 * sigma + (m+1)*Tf + Ts ]
//! ```
//!
//! evaluated here in exact rational arithmetic.  Two deliberate properties of
//! this formula are preserved as stated rather than "fixed": the abandon
//! branch carries a trailing `Ts` even though no successful transmission
//! happens, and the mean backoff `(2^k w - 1)/2` keeps doubling without a
//! ceiling.  A capped variant of the backoff means is available for
//! comparison output.  The simulator's window recurrence is `cw' = 2 cw + 1`
//! with a hard cap, so measured service times are close to, but not defined
//! by, this expression.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::mac::MacConfig;
use crate::rng::SimRng;
use crate::time::SimTime;

/// Slot time and per-attempt costs, all in nanoseconds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimingParams {
    pub slot: SimTime,
    pub t_success: SimTime,
    pub t_fail: SimTime,
}

impl TimingParams {
    /// Assemble attempt costs from raw component durations.
    ///
    /// A successful attempt occupies the frame itself, the SIFS turnaround,
    /// the ACK, a DIFS before the next contention, and propagation in both
    /// directions; a failed attempt occupies the frame, one propagation, and
    /// the DIFS that follows.
    pub fn from_components(
        frame: SimTime,
        sifs: SimTime,
        ack: SimTime,
        difs: SimTime,
        prop: SimTime,
        slot: SimTime,
    ) -> Self {
        TimingParams {
            slot,
            t_success: frame + sifs + prop + ack + difs + prop,
            t_fail: frame + difs + prop,
        }
    }

    /// Attempt costs implied by a MAC configuration and SDU size.
    pub fn from_mac(mac: &MacConfig, sdu_bytes: u32) -> Self {
        Self::from_components(
            mac.data_duration(sdu_bytes),
            mac.sifs,
            mac.ack_duration(),
            mac.difs,
            mac.prop_delay,
            mac.slot,
        )
    }
}

#[derive(Clone, Debug)]
pub struct ServiceParams {
    /// Per-attempt failure probability, exact.
    pub p: BigRational,
    /// Initial backoff window in slots.
    pub w: u32,
    /// Retry budget: a packet is abandoned after `m + 1` failed attempts.
    pub m: u32,
    pub timing: TimingParams,
}

impl ServiceParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.p.is_negative() || self.p > BigRational::one() {
            return Err("failure probability must lie in [0, 1]".into());
        }
        if self.w == 0 {
            return Err("initial window must be at least 1 slot".into());
        }
        Ok(())
    }
}

/// Parse a plain decimal like `0.3`, `1`, or `.25` into an exact rational.
pub fn rational_from_decimal(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("not a decimal number: {s:?}"));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("not a decimal number: {s:?}"));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| format!("not a decimal number: {s:?}"))?;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(numer, denom))
}

fn ratio(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Mean of the attempt-`k` backoff draw, `(2^k w - 1) / 2`, optionally with
/// the doubling frozen once the window range reaches `cap_range` slots.
fn backoff_mean(w: u32, k: u32, cap_range: Option<u64>) -> BigRational {
    let mut range = (w as u64) << k;
    if let Some(cap) = cap_range {
        range = range.min(cap);
    }
    BigRational::new(BigInt::from(range - 1), BigInt::from(2u32))
}

/// Largest backoff range (in slots) reachable under a window cap of
/// `cw_max`: doubling stops once another doubling would overshoot.
pub fn cap_range_for(w: u32, cw_max: u32) -> u64 {
    let mut range = w as u64;
    while range * 2 <= (cw_max as u64) + 1 {
        range *= 2;
    }
    range
}

fn expected(params: &ServiceParams, cap_range: Option<u64>) -> BigRational {
    params.validate().expect("invalid service parameters");
    let p = &params.p;
    let q = BigRational::one() - p;
    let sigma = ratio(params.timing.slot.nanos());
    let tf = ratio(params.timing.t_fail.nanos());
    let ts = ratio(params.timing.t_success.nanos());

    let mut p_pow = BigRational::one(); // p^j
    let mut backoff_sum = BigRational::zero(); // sum_{k=0..j} mean_k * sigma
    let mut total = BigRational::zero();
    for j in 0..=params.m {
        backoff_sum += backoff_mean(params.w, j, cap_range) * &sigma;
        let bracket = &backoff_sum + ratio(j as u64) * &tf + &ts;
        total += &p_pow * &q * bracket;
        p_pow *= p;
    }
    // p_pow is now p^{m+1}; backoff_sum covers k = 0..m.
    let abandon = backoff_sum + ratio(params.m as u64 + 1) * tf + ts;
    total + p_pow * abandon
}

/// The expectation above, exact.
pub fn expected_service_time(params: &ServiceParams) -> BigRational {
    expected(params, None)
}

/// Comparison variant with backoff growth frozen at `cap_range` slots
/// (see [`cap_range_for`]).  Carries no modelling weight of its own.
pub fn expected_service_time_capped(params: &ServiceParams, cap_range: u64) -> BigRational {
    expected(params, Some(cap_range))
}

/// Round an exact nanosecond expectation to the simulation clock.
pub fn to_sim_time(t: &BigRational) -> SimTime {
    let rounded = t.round().to_integer();
    SimTime(rounded.to_u64().expect("service time out of clock range"))
}

/// Straightforward sampler of the same process: draw real backoffs, flip a
/// coin per attempt, account exactly like the formula (including the
/// trailing success cost on the abandon branch).  Used to cross-check the
/// closed form; kept free of any shared code with it.
pub fn monte_carlo_service_time(params: &ServiceParams, samples: u64, rng: &mut SimRng) -> f64 {
    params.validate().expect("invalid service parameters");
    let p = params.p.to_f64().expect("p representable");
    let sigma = params.timing.slot.nanos() as f64;
    let tf = params.timing.t_fail.nanos() as f64;
    let ts = params.timing.t_success.nanos() as f64;

    let mut total = 0.0f64;
    for _ in 0..samples {
        let mut slots = 0u64;
        let mut sample = None;
        for attempt in 0..=params.m {
            let range = ((params.w as u64) << attempt).min(u32::MAX as u64) as u32;
            slots += draw_uniform(range, rng) as u64;
            if !rng.chance(p) {
                sample = Some(slots as f64 * sigma + attempt as f64 * tf + ts);
                break;
            }
        }
        let v = sample.unwrap_or_else(|| {
            slots as f64 * sigma + (params.m as f64 + 1.0) * tf + ts
        });
        total += v;
    }
    total / samples as f64
}

fn draw_uniform(range: u32, rng: &mut SimRng) -> u32 {
    rng.uniform(range)
}

/// One line of a service-time table.
#[derive(Clone, Debug)]
pub struct ServiceTimeRow {
    pub p: BigRational,
    pub expected: BigRational,
    pub expected_capped: BigRational,
}

/// Expected service times across a grid of failure probabilities, with the
/// capped comparison column; rows are sorted by `p`.
pub fn service_time_table(base: &ServiceParams, p_grid: &[BigRational]) -> Vec<ServiceTimeRow> {
    let cap = cap_range_for(base.w, crate::backoff::CW_MAX_DEFAULT);
    let mut ps: Vec<BigRational> = p_grid.to_vec();
    ps.sort();
    ps.dedup();
    ps.iter()
        .map(|p| {
            let params = ServiceParams { p: p.clone(), ..base.clone() };
            ServiceTimeRow {
                p: p.clone(),
                expected: expected_service_time(&params),
                expected_capped: expected_service_time_capped(&params, cap),
            }
        })
        .collect()
}

/// Side-by-side expected head-of-line service times for a healthy and a
/// degraded destination, over an evenly spaced grid between the two failure
/// probabilities.  This is how the queueing argument is surfaced: the gap
/// between the first and last row is the per-packet stall a flagged
/// destination imposes on everything queued behind it.
pub fn hol_gap_report(good: &ServiceParams, bad: &ServiceParams) -> Vec<ServiceTimeRow> {
    assert_eq!(good.timing, bad.timing, "report expects a common timing base");
    assert_eq!((good.w, good.m), (bad.w, bad.m), "report expects a common window/retry base");
    let steps = 5u32;
    let span = &bad.p - &good.p;
    let grid: Vec<BigRational> = (0..=steps)
        .map(|i| &good.p + &span * BigRational::new(BigInt::from(i), BigInt::from(steps)))
        .collect();
    service_time_table(good, &grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SimRng, STREAM_ORACLE};

    fn example_params(p: &str, m: u32) -> ServiceParams {
        ServiceParams {
            p: rational_from_decimal(p).unwrap(),
            w: 31,
            m,
            timing: TimingParams::from_components(
                SimTime::from_micros(700),
                SimTime::from_micros(10),
                SimTime::from_micros(300),
                SimTime::from_micros(50),
                SimTime::from_micros(1),
                SimTime::from_micros(20),
            ),
        }
    }

    #[test]
    fn attempt_costs_assemble_componentwise() {
        let t = example_params("0", 4).timing;
        assert_eq!(t.t_success, SimTime::from_micros(1062));
        assert_eq!(t.t_fail, SimTime::from_micros(751));
    }

    #[test]
    fn timing_from_mac_matches_frame_math() {
        let mac = MacConfig::default();
        let t = TimingParams::from_mac(&mac, 120);
        assert_eq!(
            t.t_success.nanos(),
            mac.data_duration(120).nanos() + 10_000 + 1_000 + 248_000 + 50_000 + 1_000
        );
        assert_eq!(t.t_fail.nanos(), mac.data_duration(120).nanos() + 50_000 + 1_000);
    }

    #[test]
    fn lossless_case_is_one_mean_backoff_plus_success() {
        // p = 0: only the j = 0 term survives -> 15 slots + Ts = 1362 us.
        let t = expected_service_time(&example_params("0", 4));
        assert_eq!(t, BigRational::from_integer(BigInt::from(1_362_000u64)));
        assert_eq!(to_sim_time(&t), SimTime::from_micros(1362));
    }

    #[test]
    fn certain_loss_case_is_the_abandon_branch() {
        // p = 1: backoff means 15 + 30.5 + 61.5 + 123.5 + 247.5 = 478 slots,
        // plus five failed attempts and the trailing success cost.
        let t = expected_service_time(&example_params("1", 4));
        assert_eq!(t, BigRational::from_integer(BigInt::from(14_377_000u64)));
    }

    #[test]
    fn expectation_grows_with_p() {
        let base = example_params("0", 7);
        let grid: Vec<BigRational> = ["0", "0.3", "0.5", "0.7", "0.9"]
            .iter()
            .map(|s| rational_from_decimal(s).unwrap())
            .collect();
        let rows = service_time_table(&base, &grid);
        for pair in rows.windows(2) {
            assert!(pair[1].expected > pair[0].expected);
            assert!(pair[1].expected_capped > pair[0].expected_capped);
        }
        // The capped variant can only be faster.
        for row in &rows {
            assert!(row.expected_capped <= row.expected);
        }
    }

    #[test]
    fn sampler_agrees_with_closed_form() {
        let params = example_params("0.5", 4);
        let exact = expected_service_time(&params).to_f64().unwrap();
        let mut rng = SimRng::substream(11, STREAM_ORACLE, 0, 0);
        let sampled = monte_carlo_service_time(&params, 100_000, &mut rng);
        let rel = (sampled - exact).abs() / exact;
        assert!(rel < 0.015, "sampled {sampled} vs exact {exact}: rel {rel}");
    }

    #[test]
    fn cap_range_matches_window_cap() {
        assert_eq!(cap_range_for(31, 1023), 992);
        assert_eq!(cap_range_for(31, 31), 31);
        assert_eq!(cap_range_for(15, 255), 240);
    }

    #[test]
    fn gap_report_brackets_the_two_destinations() {
        let good = example_params("0", 7);
        let bad = example_params("0.7", 7);
        let rows = hol_gap_report(&good, &bad);
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].p, good.p);
        assert_eq!(rows[5].p, bad.p);
        assert!(rows[5].expected > rows[0].expected);
    }

    #[test]
    fn decimal_parser_is_exact() {
        assert_eq!(
            rational_from_decimal("0.3").unwrap(),
            BigRational::new(BigInt::from(3), BigInt::from(10))
        );
        assert_eq!(rational_from_decimal("1").unwrap(), BigRational::one());
        assert_eq!(
            rational_from_decimal(".25").unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(4))
        );
        assert!(rational_from_decimal("abc").is_err());
        assert!(rational_from_decimal("").is_err());
        assert!(rational_from_decimal("1e-3").is_err());
    }

    #[test]
    fn out_of_range_probability_is_rejected() {
        let mut params = example_params("1", 4);
        params.p = BigRational::new(BigInt::from(3), BigInt::from(2));
        assert!(params.validate().is_err());
    }
}
