//! Random search for populations whose consensus map ends in a cycle.
//!
//! Prints each hit as agents, weights, X and the detected orbit.

use belief_dynamics::model::Agent;
use belief_dynamics::pwlmap::{analyze_dynamics, build_map, Outcome, DEFAULT_CYCLE_TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let tries: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hits = 0;
    for attempt in 0..tries {
        let n = rng.random_range(2..=4);
        // short decimals so a hit can be pasted into a fixture
        let round = |v: f64| (v * 100.0).round() / 100.0;
        let agents: Vec<Agent> = (0..n)
            .map(|i| Agent::new(i, 0, round(rng.random_range(0.01..0.99)), round(rng.random_range(0.01..0.99))))
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1..10) as f64).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let x = round(rng.random_range(0.05..0.5));
        let Ok(map) = build_map(&agents, &weights, x) else { continue };
        let Ok(report) = analyze_dynamics(&map, 0.0, 5_000, DEFAULT_CYCLE_TOLERANCE) else { continue };
        if let Outcome::Periodic { orbit, period, .. } = &report.outcome {
            let pairs: Vec<(f64, f64)> = agents.iter().map(|a| (a.sigma, a.phi_leader)).collect();
            println!("attempt {attempt}: x={x} agents={pairs:?} raw_weights={raw:?}");
            println!("  period {period} orbit {orbit:?}");
            println!("  labels {:?} observed {:?}", report.labels, report.observed_labels);
            hits += 1;
            if hits >= 5 {
                break;
            }
        }
    }
    println!("{hits} hits");
}
