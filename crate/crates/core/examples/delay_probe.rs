//! Seed-distribution probe for the one-bad-session delay pathology and the
//! capacity break point.  Scratch tool; see `quickrun` for the curated demo.

use dcfsim::metrics::reduce;
use dcfsim::time::SimTime;
use dcfsim::world::{RunConfig, Simulation};

fn main() {
    let window_s = 590.0;
    let base = RunConfig {
        duration: SimTime::from_secs(600),
        warmup: SimTime::from_secs(10),
        ..RunConfig::default()
    };

    println!("== capacity break, lossless FI 20 ms ==");
    for n in [16u32, 17, 18, 20] {
        let mut sim = Simulation::new(RunConfig { n_sessions: n, ..base.clone() }).unwrap();
        sim.run();
        let agg = reduce(sim.stats().flows(), window_s);
        println!(
            "n={n:2}  agg thr={:9.1} b/s  delay={:10.3} ms  loss={:.5}  mos={:.3}",
            agg.throughput_bps,
            agg.mean_delay_s * 1e3,
            agg.loss_ratio,
            agg.mos
        );
    }

    println!("== baseline delay distribution: 10 sessions, 1 bad, FLR 0.7 ==");
    let mut over = 0;
    for seed in 1..=20u64 {
        let mut sim = Simulation::new(RunConfig {
            n_sessions: 10,
            bad_sessions: 1,
            flr: 0.7,
            seed,
            ..base.clone()
        })
        .unwrap();
        sim.run();
        let agg = reduce(sim.stats().flows(), window_s);
        let d = agg.mean_delay_s * 1e3;
        if d > 150.0 {
            over += 1;
        }
        println!("seed={seed:2}  delay={d:9.3} ms");
    }
    println!("over 150 ms: {over}/20");
}
