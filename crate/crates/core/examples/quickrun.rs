//! Quick look at the simulator's headline behaviours without the CSV
//! plumbing: capacity under lossless conditions, the head-of-line delay
//! pathology, and the prioritized-AP remedy, each at full 600 s scale.
//!
//! Run with `cargo run -p dcfsim --example quickrun --release`.

use std::time::Instant;

use dcfsim::metrics::reduce;
use dcfsim::time::SimTime;
use dcfsim::world::{Algorithm, RunConfig, Simulation};

fn run(cfg: RunConfig) -> Simulation {
    let mut sim = Simulation::new(cfg).expect("valid config");
    sim.run();
    sim
}

fn main() {
    let window_s = 590.0;
    let base = RunConfig {
        duration: SimTime::from_secs(600),
        warmup: SimTime::from_secs(10),
        ..RunConfig::default()
    };

    println!("== lossless capacity, FI 20 ms ==");
    for n in [1u32, 10, 12, 13, 14, 15] {
        let t0 = Instant::now();
        let sim = run(RunConfig { n_sessions: n, ..base.clone() });
        let agg = reduce(sim.stats().flows(), window_s);
        println!(
            "n={n:2}  thr/session={:8.1} b/s  delay={:9.4} ms  loss={:.5}  mos={:.3}  ({:.2?})",
            agg.throughput_bps / n as f64,
            agg.mean_delay_s * 1e3,
            agg.loss_ratio,
            agg.mos,
            t0.elapsed()
        );
    }

    println!("== one lossy session at high load, FI 20 ms, FLR 0.7 ==");
    for seed in 1..=5u64 {
        for algorithm in [Algorithm::Baseline, Algorithm::Pap] {
            let t0 = Instant::now();
            let sim = run(RunConfig {
                algorithm,
                n_sessions: 10,
                bad_sessions: 1,
                flr: 0.7,
                seed,
                ..base.clone()
            });
            let agg = reduce(sim.stats().flows(), window_s);
            let bad = reduce(sim.stats().flows()[..1].iter(), window_s);
            println!(
                "seed={seed} {:<8}  agg thr={:9.1} delay={:9.3} ms loss={:.5}  | bad loss={:.5} \
                 blocks={:6} rel={:6} forced={:4}  ({:.2?})",
                algorithm.as_str(),
                agg.throughput_bps,
                agg.mean_delay_s * 1e3,
                agg.loss_ratio,
                bad.loss_ratio,
                sim.bda_state().blocks_total,
                sim.bda_state().released_acks,
                sim.bda_state().forced_acks,
                t0.elapsed()
            );
        }
    }

    println!("== sweep bad sessions at high load, FLR 0.7, seed 1 ==");
    for bad in [2u32, 3, 5] {
        for algorithm in [Algorithm::Baseline, Algorithm::Pap] {
            let sim = run(RunConfig {
                algorithm,
                n_sessions: 10,
                bad_sessions: bad,
                flr: 0.7,
                seed: 1,
                ..base.clone()
            });
            let flows = sim.stats().flows();
            let agg = reduce(flows, window_s);
            let badg = reduce(flows[..bad as usize].iter(), window_s);
            let goodg = reduce(flows[bad as usize..].iter(), window_s);
            println!(
                "bad={bad} {:<8}  thr={:9.1} delay={:9.3} ms | good delay={:9.3} ms \
                 | bad loss={:.5} delay={:9.3} ms",
                algorithm.as_str(),
                agg.throughput_bps,
                agg.mean_delay_s * 1e3,
                goodg.mean_delay_s * 1e3,
                badg.loss_ratio,
                badg.mean_delay_s * 1e3,
            );
        }
    }
}
