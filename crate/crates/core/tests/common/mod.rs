#![allow(dead_code)]

use belief_dynamics::matrix::{build_credibility_matrix, CredibilityMatrix, MatrixGenerator};
use belief_dynamics::model::{Agent, ModelParams, Population};
use belief_dynamics::scenario::{Regime, Scenario, DEFAULT_COMM_TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn worked_example(regime: Regime, x: f64) -> Scenario {
    let population = Population::single_group(&[(0.1, 0.2), (0.9, 0.5), (0.9, 0.8)]).unwrap();
    let rows = vec![vec![0.1, 0.4, 0.5], vec![0.1, 0.6, 0.3], vec![0.3, 0.5, 0.2]];
    let matrix = CredibilityMatrix::from_rows(&rows, population.member_indices()).unwrap();
    scenario(population, matrix, regime, x, 500)
}

pub fn scenario(population: Population, matrix: CredibilityMatrix, regime: Regime, x: f64, horizon: usize) -> Scenario {
    Scenario {
        population,
        params: ModelParams::new(x, 0.0).unwrap(),
        matrix,
        regime,
        horizon,
        comm_tolerance: DEFAULT_COMM_TOLERANCE,
        seed: 0,
    }
}

/// One group of `n` agents with uniform preferences and a random matrix.
pub fn random_scenario(n: usize, regime: Regime, x: f64, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.001..0.999), rng.random_range(0.001..0.999)))
        .collect();
    let population = Population::single_group(&pairs).unwrap();
    let matrix = build_credibility_matrix(
        &population,
        &MatrixGenerator::RandomRowStochastic { self_floor: 0.05 },
        seed.wrapping_add(1),
    )
    .unwrap();
    scenario(population, matrix, regime, x, 100_000)
}

/// Stationary distribution of a row-stochastic `rows` by Gaussian elimination
/// on `w (P - I) = 0` with the last equation replaced by `sum w = 1`.
pub fn gaussian_weights(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    // a[i][j] = P[j][i] - delta, so that a w = 0
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r: Vec<f64> = (0..n).map(|j| rows[j][i] - if i == j { 1.0 } else { 0.0 }).collect();
            r.push(0.0);
            r
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

pub fn dense_rows(matrix: &CredibilityMatrix) -> Vec<Vec<f64>> {
    let n = matrix.n();
    (0..n).map(|i| (0..n).map(|j| matrix.entry(i, j)).collect()).collect()
}

/// Limit of the dictator regime from the adoption conditions alone: start
/// from the period-0 adopters, then keep admitting any agent with larger
/// credibility whose switching threshold the current limit exceeds.
pub fn dictator_limit_oracle(agents: &[Agent], x: f64) -> f64 {
    let mut limit = agents
        .iter()
        .filter(|a| a.sigma > 2.0 * x)
        .map(|a| a.phi_leader)
        .fold(0.0, f64::max);
    if limit == 0.0 {
        return 0.0;
    }
    loop {
        let next = agents
            .iter()
            .filter(|a| a.phi_leader > limit && limit > a.phi_leader * (1.0 - a.sigma / (2.0 * x)))
            .map(|a| a.phi_leader)
            .fold(limit, f64::max);
        if next == limit {
            return limit;
        }
        limit = next;
    }
}

/// Exact consensus update: every agent decides, then weights average.
pub fn direct_update(agents: &[Agent], weights: &[f64], c: f64, x: f64) -> f64 {
    let params = ModelParams::new(x, 0.0).unwrap();
    agents
        .iter()
        .zip(weights)
        .map(|(a, w)| w * belief_dynamics::decisions::choose_diverse(a, c, &params).chosen_belief)
        .sum()
}

/// Random single-group map input: agents, normalized weights, X.
pub fn random_map_input(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<Agent>, Vec<f64>, f64) {
    let n = rng.random_range(1..=max_n);
    let agents: Vec<Agent> = (0..n)
        .map(|i| Agent::new(i, 0, rng.random_range(0.001..0.999), rng.random_range(0.001..0.999)))
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let x = rng.random_range(0.02..0.49);
    (agents, weights, x)
}

/// A population whose consensus map ends in a 3-cycle from `c0 = 0`.
pub fn periodic_fixture() -> (Vec<Agent>, Vec<f64>, f64) {
    (
        vec![Agent::new(0, 0, 0.52, 0.33), Agent::new(1, 0, 0.11, 0.7)],
        vec![2.0 / 9.0, 7.0 / 9.0],
        0.19,
    )
}

/// A 2-cycle with one oscillator between two followers.
pub fn periodic_fixture_two() -> (Vec<Agent>, Vec<f64>, f64) {
    (
        vec![Agent::new(0, 0, 0.96, 0.41), Agent::new(1, 0, 0.17, 0.33), Agent::new(2, 0, 0.52, 0.22)],
        vec![1.0 / 15.0, 8.0 / 15.0, 6.0 / 15.0],
        0.25,
    )
}
