//! Within-period communication: repeated averaging, stationary weights and
//! per-group consensus.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::matrix::{BlockWeights, CredibilityMatrix};

pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 1_000_000;
pub const DEFAULT_SPREAD_TOLERANCE: f64 = 1e-9;

/// Long-run influence of each agent on its group's consensus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    /// Indexed by agent; each group's entries sum to one.
    pub weights: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
}

impl WeightVector {
    /// Wraps explicit weights, checking positivity and per-group normalization.
    pub fn new(weights: Vec<f64>, groups: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid(format!("weight {i} must be positive, got {}", weights[i])));
        }
        for (g, members) in groups.iter().enumerate() {
            if members.iter().any(|&a| a >= weights.len()) {
                return Err(invalid(format!("group {g} names an agent outside the weight vector")));
            }
            let s: f64 = members.iter().map(|&a| weights[a]).sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("weights of group {g} sum to {s}")));
            }
        }
        Ok(WeightVector { weights, groups })
    }

    /// A single group with the given weights.
    pub fn single_group(weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        WeightVector::new(weights, vec![(0..n).collect()])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Beliefs `mu_i = P(theta = 1)` held by each agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    pub fn new(beliefs: Vec<f64>) -> Result<Self> {
        if let Some(i) = beliefs.iter().position(|b| !(0.0..=1.0).contains(b)) {
            return Err(invalid(format!("belief {i} is {} (must lie in [0, 1])", beliefs[i])));
        }
        Ok(BeliefVector(beliefs))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for BeliefVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Left eigenvector for eigenvalue 1 of every block, by power iteration
/// from the uniform vector.
pub fn stationary_weights(matrix: &CredibilityMatrix) -> Result<WeightVector> {
    let mut weights = vec![0.0; matrix.n()];
    for (g, members) in matrix.groups().iter().enumerate() {
        let block = matrix.block(g);
        let w = block_stationary(&block).map_err(|e| match e {
            Error::NumericalFailure(m) => Error::NumericalFailure(format!("group {g}: {m}")),
            other => other,
        })?;
        for (&a, wi) in members.iter().zip(w) {
            weights[a] = wi;
        }
    }
    Ok(WeightVector { weights, groups: matrix.groups().to_vec() })
}

fn block_stationary(block: &BlockWeights) -> Result<Vec<f64>> {
    let m = block.size();
    if let BlockWeights::Uniform { .. } = block {
        return Ok(vec![1.0 / m as f64; m]);
    }
    let mut w = vec![1.0 / m as f64; m];
    for _ in 0..POWER_MAX_ITER {
        let mut next = block.left_product(&w);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if delta < POWER_TOLERANCE {
            if w.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::NumericalFailure("stationary weights are not all positive".into()));
            }
            return Ok(w);
        }
    }
    Err(Error::NumericalFailure(format!(
        "power iteration did not settle within {POWER_MAX_ITER} iterations"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunicationOutcome {
    /// Common value per group: midpoint of the residual spread.
    pub consensus: Vec<f64>,
    pub rounds: usize,
    pub beliefs: Vec<f64>,
}

/// Repeats `mu_i <- sum_j Phi_ij mu_j` until every group's spread is at most `tol`.
pub fn run_communication(
    chosen: &[f64],
    matrix: &CredibilityMatrix,
    tol: f64,
    max_rounds: usize,
) -> Result<CommunicationOutcome> {
    if chosen.len() != matrix.n() {
        return Err(invalid(format!(
            "{} beliefs for a {}-agent matrix",
            chosen.len(),
            matrix.n()
        )));
    }
    let groups = matrix.groups();
    let blocks: Vec<_> = (0..groups.len()).map(|g| matrix.block(g)).collect();
    let mut local: Vec<Vec<f64>> = groups
        .iter()
        .map(|members| members.iter().map(|&a| chosen[a]).collect())
        .collect();

    let mut rounds = 0;
    loop {
        let spread = local
            .iter()
            .map(|v| {
                let (lo, hi) = range(v);
                hi - lo
            })
            .fold(0.0, f64::max);
        if spread <= tol {
            break;
        }
        if rounds == max_rounds {
            return Err(Error::NonConvergence { rounds, spread });
        }
        for (v, b) in local.iter_mut().zip(&blocks) {
            *v = b.right_product(v);
        }
        rounds += 1;
    }

    let mut beliefs = vec![0.0; chosen.len()];
    let mut consensus = Vec::with_capacity(groups.len());
    for (members, v) in groups.iter().zip(&local) {
        let (lo, hi) = range(v);
        consensus.push(0.5 * (lo + hi));
        for (&a, &x) in members.iter().zip(v) {
            beliefs[a] = x;
        }
    }
    Ok(CommunicationOutcome { consensus, rounds, beliefs })
}

fn range(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// `c_g = sum_{i in g} w_i mu_i` for every group.
pub fn consensus_via_weights(chosen: &[f64], weights: &WeightVector) -> Result<Vec<f64>> {
    consensus_via_weights_in(Execution::Sequential, chosen, weights)
}

pub fn consensus_via_weights_in(
    exec: Execution,
    chosen: &[f64],
    weights: &WeightVector,
) -> Result<Vec<f64>> {
    if chosen.len() != weights.len() {
        return Err(invalid(format!(
            "{} beliefs for {} weights",
            chosen.len(),
            weights.len()
        )));
    }
    Ok(weights
        .groups
        .iter()
        .map(|members| {
            // a convex combination, but rounding can step just past 0 or 1
            exec.sum_range(members.len(), |k| {
                let a = members[k];
                weights.weights[a] * chosen[a]
            })
            .clamp(0.0, 1.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> CredibilityMatrix {
        let rows = vec![vec![0.1, 0.4, 0.5], vec![0.1, 0.6, 0.3], vec![0.3, 0.5, 0.2]];
        CredibilityMatrix::from_rows(&rows, vec![vec![0, 1, 2]]).unwrap()
    }

    // exact: (17/106, 57/106, 16/53)
    const OMEGA: [f64; 3] = [17.0 / 106.0, 57.0 / 106.0, 32.0 / 106.0];

    #[test]
    fn consensus_stays_in_unit_interval() {
        let w = WeightVector::single_group(vec![0.5 + 1e-12, 0.5]).unwrap();
        assert_eq!(consensus_via_weights(&[1.0, 1.0], &w).unwrap(), vec![1.0]);
    }

    #[test]
    fn worked_example_weights() {
        let w = stationary_weights(&example()).unwrap();
        for (a, b) in w.weights.iter().zip(OMEGA) {
            assert!((a - b).abs() < 1e-10, "{:?}", w.weights);
        }
        // left fixed point
        let back = example().block(0).left_product(&w.weights);
        for (a, b) in back.iter().zip(&w.weights) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn single_agent_and_doubly_stochastic() {
        let m = CredibilityMatrix::from_rows(&[vec![1.0]], vec![vec![0]]).unwrap();
        assert_eq!(stationary_weights(&m).unwrap().weights, vec![1.0]);

        let rows = vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3], vec![0.3, 0.2, 0.5]];
        let m = CredibilityMatrix::from_rows(&rows, vec![vec![0, 1, 2]]).unwrap();
        for w in stationary_weights(&m).unwrap().weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn worked_example_consensus() {
        let chosen = [0.0, 0.5, 0.8];
        let out = run_communication(&chosen, &example(), 1e-9, 1000).unwrap();
        assert!((out.consensus[0] - 541.0 / 1060.0).abs() < 1e-9);
        let w = stationary_weights(&example()).unwrap();
        let c = consensus_via_weights(&chosen, &w).unwrap();
        assert!((c[0] - 0.5104).abs() < 5e-5);
        assert!((c[0] - out.consensus[0]).abs() < 1e-8);
    }

    #[test]
    fn constant_vector_takes_no_rounds() {
        let out = run_communication(&[0.3, 0.3, 0.3], &example(), 1e-9, 10).unwrap();
        assert_eq!(out.rounds, 0);
        assert_eq!(out.consensus, vec![0.3]);
    }

    #[test]
    fn round_cap_reports_spread() {
        let err = run_communication(&[0.0, 0.5, 0.8], &example(), 1e-15, 2).unwrap_err();
        match err {
            Error::NonConvergence { rounds, spread } => {
                assert_eq!(rounds, 2);
                assert!(spread > 0.0);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn trivial_weight_cases() {
        let w = WeightVector::single_group(vec![0.25; 4]).unwrap();
        assert_eq!(consensus_via_weights(&[0.0; 4], &w).unwrap(), vec![0.0]);
        let one = WeightVector::single_group(vec![1.0]).unwrap();
        assert_eq!(consensus_via_weights(&[0.7], &one).unwrap(), vec![0.7]);
    }

    #[test]
    fn groups_do_not_interact() {
        let rows = vec![
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.2, 0.8, 0.0, 0.0],
            vec![0.0, 0.0, 0.9, 0.1],
            vec![0.0, 0.0, 0.4, 0.6],
        ];
        let m = CredibilityMatrix::from_rows(&rows, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let a = run_communication(&[0.1, 0.9, 0.3, 0.7], &m, 1e-12, 10_000).unwrap();
        let b = run_communication(&[0.1, 0.9, 0.0, 0.0], &m, 1e-12, 10_000).unwrap();
        assert!((a.consensus[0] - b.consensus[0]).abs() < 1e-12);
        let w = stationary_weights(&m).unwrap();
        let x = consensus_via_weights(&[0.1, 0.9, 0.3, 0.7], &w).unwrap();
        let y = consensus_via_weights(&[0.1, 0.9, 0.0, 0.0], &w).unwrap();
        assert_eq!(x[0], y[0]);
    }
}
