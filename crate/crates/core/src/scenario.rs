//! Full experiment description and its validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::matrix::CredibilityMatrix;
use crate::model::{ModelParams, Population};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Only the leader's signal is available.
    Dictator,
    /// Leader, policymaker, or hold the prior.
    Diverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Parameter,
    AgentOutOfRange,
    GroupPartition,
    DimensionMismatch,
    NegativeEntry,
    RowNotStochastic,
    CrossGroupCredibility,
    ZeroDiagonal,
    NotStronglyConnected,
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, message: impl Into<String>) -> Self {
        Violation { kind, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub population: Population,
    pub params: ModelParams,
    pub matrix: CredibilityMatrix,
    pub regime: Regime,
    /// Number of periods to run.
    pub horizon: usize,
    /// Spread tolerance for explicit communication rounds.
    pub comm_tolerance: f64,
    pub seed: u64,
}

pub const DEFAULT_COMM_TOLERANCE: f64 = 1e-9;

pub fn validate_scenario(scenario: &Scenario) -> ValidationReport {
    let mut v = Vec::new();
    let pop = &scenario.population;

    if let Err(e) = scenario.params.check() {
        v.push(Violation::new(ViolationKind::Parameter, e.to_string()));
    }
    if scenario.horizon < 1 {
        v.push(Violation::new(ViolationKind::Horizon, "horizon must be at least 1"));
    }
    if !(scenario.comm_tolerance > 0.0) {
        v.push(Violation::new(ViolationKind::Parameter, "comm_tolerance must be positive"));
    }

    for (i, a) in pop.agents.iter().enumerate() {
        if a.id.0 != i {
            v.push(Violation::new(
                ViolationKind::GroupPartition,
                format!("agent at index {i} carries id {}", a.id.0),
            ));
        }
        if !(a.sigma > 0.0 && a.sigma < 1.0) {
            v.push(Violation::new(
                ViolationKind::AgentOutOfRange,
                format!("{}: sigma {} outside (0, 1)", a.id, a.sigma),
            ));
        }
        if !(a.phi_leader > 0.0 && a.phi_leader < 1.0) {
            v.push(Violation::new(
                ViolationKind::AgentOutOfRange,
                format!("{}: phi_leader {} outside (0, 1)", a.id, a.phi_leader),
            ));
        }
        if a.group.0 >= pop.groups.len() {
            v.push(Violation::new(
                ViolationKind::GroupPartition,
                format!("{}: unknown {}", a.id, a.group),
            ));
        }
    }

    let mut owner: Vec<Option<usize>> = vec![None; pop.len()];
    for (g, group) in pop.groups.iter().enumerate() {
        if group.id.0 != g {
            v.push(Violation::new(
                ViolationKind::GroupPartition,
                format!("group at index {g} carries id {}", group.id.0),
            ));
        }
        if group.members.is_empty() {
            v.push(Violation::new(ViolationKind::GroupPartition, format!("{} is empty", group.id)));
        }
        for m in &group.members {
            match owner.get_mut(m.0) {
                None => v.push(Violation::new(
                    ViolationKind::GroupPartition,
                    format!("{} lists unknown {}", group.id, m),
                )),
                Some(Some(prev)) => v.push(Violation::new(
                    ViolationKind::GroupPartition,
                    format!("{} is in group {prev} and {}", m, group.id),
                )),
                Some(slot) => {
                    *slot = Some(g);
                    if pop.agents[m.0].group.0 != g {
                        v.push(Violation::new(
                            ViolationKind::GroupPartition,
                            format!("{} is listed by {} but labelled {}", m, group.id, pop.agents[m.0].group),
                        ));
                    }
                }
            }
        }
    }
    for (i, o) in owner.iter().enumerate() {
        if o.is_none() {
            v.push(Violation::new(ViolationKind::GroupPartition, format!("agent {i} belongs to no group")));
        }
    }

    if scenario.matrix.n() != pop.len() {
        v.push(Violation::new(
            ViolationKind::DimensionMismatch,
            format!("matrix is {0}x{0} for {1} agents", scenario.matrix.n(), pop.len()),
        ));
    } else {
        if scenario.matrix.groups() != pop.member_indices().as_slice() {
            v.push(Violation::new(
                ViolationKind::GroupPartition,
                "matrix partition differs from the population's groups",
            ));
        }
        v.extend(scenario.matrix.violations());
    }

    ValidationReport { violations: v }
}
