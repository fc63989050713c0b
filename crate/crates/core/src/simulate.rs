//! Period-by-period dynamics: decisions, consensus and polarization.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::consensus::{consensus_via_weights_in, stationary_weights, WeightVector};
use crate::decisions::{choose_dictator, choose_diverse, Choice, Decision};
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::pwlmap::{detect_cycle, DEFAULT_CYCLE_TOLERANCE, MAX_CYCLE_PERIOD};
use crate::scenario::{validate_scenario, Regime, Scenario};

pub const DEFAULT_CONVERGENCE_TOLERANCE: f64 = 1e-9;

/// Weighted share of each decision inside a group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    pub policymaker: f64,
    pub stick: f64,
    pub leader: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    /// Consensus each group started the period with.
    pub prior_consensus: Vec<f64>,
    /// Per agent; `None` when the run was asked not to keep them.
    pub decisions: Option<Vec<Decision>>,
    pub group_consensus: Vec<f64>,
    pub fractions: Vec<Fractions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Terminal {
    Converged { consensus: Vec<f64> },
    HorizonExhausted,
    Periodic { period: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<PeriodRecord>,
    pub terminal: Terminal,
}

impl Trajectory {
    /// Consensus of group `g` at every recorded period.
    pub fn consensus_series(&self, g: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.group_consensus[g]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub convergence_tol: f64,
    pub cycle_tol: f64,
    /// Stop at convergence or at a detected cycle instead of running the full horizon.
    pub stop_early: bool,
    pub record_decisions: bool,
    pub execution: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            convergence_tol: DEFAULT_CONVERGENCE_TOLERANCE,
            cycle_tol: DEFAULT_CYCLE_TOLERANCE,
            stop_early: true,
            record_decisions: true,
            execution: Execution::default(),
        }
    }
}

/// A validated scenario with its stationary weights.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    scenario: &'a Scenario,
    weights: WeightVector,
    /// Per agent: belongs to an untargeted group.
    excluded: Vec<bool>,
    options: RunOptions,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario, options: RunOptions) -> Result<Self> {
        let report = validate_scenario(scenario);
        if !report.is_ok() {
            let msgs: Vec<String> = report.violations.iter().map(|v| v.message.clone()).collect();
            return Err(invalid(msgs.join("; ")));
        }
        let weights = stationary_weights(&scenario.matrix)?;
        let groups = &scenario.population.groups;
        let excluded = scenario.population.agents.iter().map(|a| groups[a.group.0].is_scapegoat).collect();
        Ok(Simulator { scenario, weights, excluded, options })
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// One period: every targeted agent decides against its group's previous
    /// consensus, then each group averages with the stationary weights.
    pub fn step(&self, prev: &[f64], period: usize) -> Result<PeriodRecord> {
        self.step_keyed(prev, period).map(|(rec, _)| rec)
    }

    /// The record plus a hash of every agent's choice, the analogue of a map piece.
    fn step_keyed(&self, prev: &[f64], period: usize) -> Result<(PeriodRecord, u64)> {
        let pop = &self.scenario.population;
        if prev.len() != pop.groups.len() {
            return Err(invalid(format!("{} prior values for {} groups", prev.len(), pop.groups.len())));
        }
        if let Some(c) = prev.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(invalid(format!("prior consensus {c} is outside [0, 1]")));
        }
        let params = &self.scenario.params;
        let regime = self.scenario.regime;
        let decisions = self.options.execution.map(&pop.agents, |a| {
            if self.excluded[a.id.0] {
                return Decision { choice: Choice::StickToPrior, chosen_belief: 0.0 };
            }
            let c = prev[a.group.0];
            match regime {
                Regime::Dictator => choose_dictator(a, c, params, period == 0),
                Regime::Diverse => choose_diverse(a, c, params),
            }
        });
        let chosen: Vec<f64> = decisions.iter().map(|d| d.chosen_belief).collect();
        let group_consensus = consensus_via_weights_in(self.options.execution, &chosen, &self.weights)?;
        let fractions = polarization_fractions(&decisions, &self.weights);
        let mut h = DefaultHasher::new();
        decisions.iter().for_each(|d| d.choice.hash(&mut h));
        let record = PeriodRecord {
            period,
            prior_consensus: prev.to_vec(),
            decisions: self.options.record_decisions.then_some(decisions),
            group_consensus,
            fractions,
        };
        Ok((record, h.finish()))
    }

    pub fn run(&self) -> Result<Trajectory> {
        let opts = &self.options;
        let mut prev = vec![0.0; self.scenario.population.groups.len()];
        let mut records: Vec<PeriodRecord> = Vec::new();
        let mut keys: Vec<u64> = Vec::new();
        for period in 0..self.scenario.horizon {
            let (rec, key) = self.step_keyed(&prev, period)?;
            let moved = rec
                .group_consensus
                .iter()
                .zip(&prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let next = rec.group_consensus.clone();
            keys.push(key);
            records.push(rec);
            if opts.stop_early {
                if moved < opts.convergence_tol {
                    return Ok(Trajectory { records, terminal: Terminal::Converged { consensus: next } });
                }
                let distance = |i: usize, j: usize| {
                    records[i]
                        .group_consensus
                        .iter()
                        .zip(&records[j].group_consensus)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                };
                if let Some(period) = detect_cycle(&keys, opts.cycle_tol, MAX_CYCLE_PERIOD, distance) {
                    return Ok(Trajectory { records, terminal: Terminal::Periodic { period } });
                }
            }
            prev = next;
        }
        Ok(Trajectory { records, terminal: Terminal::HorizonExhausted })
    }
}

/// One period from `prev` with default options.
pub fn step_period(prev: &[f64], scenario: &Scenario, period: usize) -> Result<PeriodRecord> {
    Simulator::new(scenario, RunOptions::default())?.step(prev, period)
}

pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    run_with(scenario, RunOptions::default())
}

pub fn run_with(scenario: &Scenario, options: RunOptions) -> Result<Trajectory> {
    Simulator::new(scenario, options)?.run()
}

/// Weight-weighted share of each choice in every group.
pub fn polarization_fractions(decisions: &[Decision], weights: &WeightVector) -> Vec<Fractions> {
    weights
        .groups
        .iter()
        .map(|members| {
            let mut f = [0.0; 3];
            let mut total = 0.0;
            for &a in members {
                let w = weights.weights[a];
                total += w;
                f[match decisions[a].choice {
                    Choice::SamplePolicymaker => 0,
                    Choice::StickToPrior => 1,
                    Choice::SampleLeader => 2,
                }] += w;
            }
            Fractions { policymaker: f[0] / total, stick: f[1] / total, leader: f[2] / total }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{CredibilityMatrix, MatrixGenerator, build_credibility_matrix};
    use crate::model::{ModelParams, Population};
    use crate::scenario::DEFAULT_COMM_TOLERANCE;

    pub(crate) fn worked_example(regime: Regime, x: f64) -> Scenario {
        let population = Population::single_group(&[(0.1, 0.2), (0.9, 0.5), (0.9, 0.8)]).unwrap();
        let rows = vec![vec![0.1, 0.4, 0.5], vec![0.1, 0.6, 0.3], vec![0.3, 0.5, 0.2]];
        let matrix = CredibilityMatrix::from_rows(&rows, population.member_indices()).unwrap();
        Scenario {
            population,
            params: ModelParams::new(x, 0.0).unwrap(),
            matrix,
            regime,
            horizon: 500,
            comm_tolerance: DEFAULT_COMM_TOLERANCE,
            seed: 0,
        }
    }

    const C0: f64 = 541.0 / 1060.0;

    #[test]
    fn worked_example_first_periods() {
        let s = worked_example(Regime::Dictator, 0.4);
        let r0 = step_period(&[0.0], &s, 0).unwrap();
        let chosen: Vec<f64> = r0.decisions.unwrap().iter().map(|d| d.chosen_belief).collect();
        assert_eq!(chosen, vec![0.0, 0.5, 0.8]);
        assert!((r0.group_consensus[0] - C0).abs() < 1e-10);

        let r1 = step_period(&r0.group_consensus, &s, 1).unwrap();
        let chosen: Vec<f64> = r1.decisions.unwrap().iter().map(|d| d.chosen_belief).collect();
        assert_eq!(chosen[0], r0.group_consensus[0]);
        assert_eq!(chosen[1], r0.group_consensus[0]);
        assert_eq!(chosen[2], 0.8);
        // (17 + 57) / 106 * c0 + 32 / 106 * 0.8
        let expect = 74.0 / 106.0 * C0 + 32.0 / 106.0 * 0.8;
        assert!((r1.group_consensus[0] - expect).abs() < 1e-10);
        assert!((r1.group_consensus[0] - 0.597810608757565).abs() < 1e-10);
    }

    #[test]
    fn dictator_limit_is_top_adopter() {
        let t = run(&worked_example(Regime::Dictator, 0.4)).unwrap();
        let series = t.consensus_series(0);
        assert!(series.windows(2).all(|w| w[1] >= w[0]));
        match &t.terminal {
            Terminal::Converged { consensus } => assert!((consensus[0] - 0.8).abs() < 1e-8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn high_punishment_everyone_sticks() {
        let s = worked_example(Regime::Diverse, 0.6);
        let r = step_period(&[0.0], &s, 0).unwrap();
        assert_eq!(r.group_consensus, vec![0.0]);
        assert!(r.decisions.unwrap().iter().all(|d| d.choice == Choice::StickToPrior));
        assert_eq!(r.fractions[0], Fractions { policymaker: 0.0, stick: 1.0, leader: 0.0 });
    }

    #[test]
    fn fractions_two_agent_example() {
        let pop = Population::single_group(&[(0.3, 0.6), (0.9, 0.7)]).unwrap();
        let s = Scenario {
            matrix: CredibilityMatrix::equal_weights(pop.member_indices()).unwrap(),
            population: pop,
            params: ModelParams::new(0.4, 0.0).unwrap(),
            regime: Regime::Diverse,
            horizon: 10,
            comm_tolerance: DEFAULT_COMM_TOLERANCE,
            seed: 0,
        };
        let r = step_period(&[0.6], &s, 3).unwrap();
        assert_eq!(r.fractions[0], Fractions { policymaker: 0.5, stick: 0.0, leader: 0.5 });
    }

    #[test]
    fn scapegoat_group_holds_zero() {
        let mut pop = Population::single_group(&[(0.95, 0.6), (0.9, 0.7)]).unwrap();
        pop.add_scapegoat(3).unwrap();
        let s = Scenario {
            matrix: build_credibility_matrix(&pop, &MatrixGenerator::EqualWeights, 0).unwrap(),
            population: pop,
            params: ModelParams::new(0.2, 0.0).unwrap(),
            regime: Regime::Diverse,
            horizon: 20,
            comm_tolerance: DEFAULT_COMM_TOLERANCE,
            seed: 0,
        };
        let t = run(&s).unwrap();
        for r in &t.records {
            assert_eq!(r.group_consensus[1], 0.0);
            assert_eq!(r.fractions[1].stick, 1.0);
        }
        assert!(t.records.last().unwrap().group_consensus[0] > 0.5);
    }

    #[test]
    fn execution_modes_agree() {
        let mut a = RunOptions { stop_early: false, ..RunOptions::default() };
        let s = worked_example(Regime::Diverse, 0.3);
        a.execution = Execution::Sequential;
        let seq = run_with(&s, a).unwrap();
        a.execution = Execution::Parallel;
        let par = run_with(&s, a).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let mut s = worked_example(Regime::Diverse, 0.3);
        s.horizon = 0;
        assert!(run(&s).is_err());
    }
}
