//! Agent classes of the finite-population map and long-run labels.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{Agent, AgentId};

/// Behaviour for `c` in `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowerClass {
    /// `sigma > 2X`: leader throughout.
    A,
    /// `sigma <= X`: prior, then policymaker from `t = sigma / 2X` on.
    B,
    /// `X < sigma <= 2X`: prior, then leader once `c > t = 1 - sigma / 2X`.
    D,
}

/// Behaviour for `c` in `(1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpperClass {
    /// Policymaker throughout.
    R,
    /// Leader throughout.
    U,
    /// Leader, then policymaker from `t` on (`phi < 1/2`).
    W,
    /// Policymaker, then leader once `c > t` (`phi > 1/2`).
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentClass {
    pub agent: AgentId,
    pub sigma: f64,
    pub phi: f64,
    pub lower: LowerClass,
    pub lower_threshold: Option<f64>,
    pub upper: UpperClass,
    pub upper_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentClassification {
    pub x: f64,
    pub agents: Vec<AgentClass>,
}

/// Policymaker threshold `beta(c) = 2X(phi + c - 2 phi c)` above one half.
pub(crate) fn beta_threshold(x: f64, phi: f64, c: f64) -> f64 {
    2.0 * x * (phi + c - 2.0 * phi * c)
}

pub fn classify_agents(agents: &[Agent], x: f64) -> Result<AgentClassification> {
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(format!("x must be > 0, got {x}")));
    }
    let agents = agents
        .iter()
        .map(|a| {
            let (sigma, phi) = (a.sigma, a.phi_leader);
            let r = sigma / (2.0 * x);
            let (lower, lower_threshold) = if sigma > 2.0 * x {
                (LowerClass::A, None)
            } else if sigma <= x {
                (LowerClass::B, Some(r))
            } else {
                (LowerClass::D, Some(1.0 - r))
            };
            let t = (r - phi) / (1.0 - 2.0 * phi);
            let (upper, upper_threshold) = if phi < 0.5 {
                if sigma <= x {
                    (UpperClass::R, None)
                } else if sigma > 2.0 * x * (1.0 - phi) {
                    (UpperClass::U, None)
                } else {
                    (UpperClass::W, Some(t))
                }
            } else if phi > 0.5 {
                if sigma <= 2.0 * x * (1.0 - phi) {
                    (UpperClass::R, None)
                } else if sigma > x {
                    (UpperClass::U, None)
                } else {
                    (UpperClass::Y, Some(t))
                }
            } else if sigma <= x {
                (UpperClass::R, None)
            } else {
                (UpperClass::U, None)
            };
            AgentClass { agent: a.id, sigma, phi, lower, lower_threshold, upper, upper_threshold }
        })
        .collect();
    Ok(AgentClassification { x, agents })
}

/// Long-run role of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentLabel {
    /// Always samples the leader.
    Follower,
    /// Always samples the policymaker.
    Resistant,
    /// Switches as the consensus moves.
    Oscillator,
    /// Always keeps the prior.
    Sticker,
}

/// Labels for a consensus that keeps moving inside `[p0, p1]`.
pub fn classify_periodic(
    classification: &AgentClassification,
    x: f64,
    p0: f64,
    p1: f64,
) -> Result<Vec<AgentLabel>> {
    if !(p0 < p1) {
        return Err(invalid(format!("need p0 < p1, got p0 = {p0}, p1 = {p1}")));
    }
    if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
        return Err(invalid("p0 and p1 must lie in [0, 1]"));
    }
    Ok(classification
        .agents
        .iter()
        .map(|a| {
            let s = a.sigma;
            if p1 <= 0.5 {
                if s <= 2.0 * x * p0 {
                    AgentLabel::Resistant
                } else if s > 2.0 * x * (1.0 - p0) {
                    AgentLabel::Follower
                } else if s > 2.0 * x * p1 && s <= 2.0 * x * (1.0 - p1) {
                    AgentLabel::Sticker
                } else {
                    AgentLabel::Oscillator
                }
            } else if p0 <= 0.5 {
                let b1 = beta_threshold(x, a.phi, p1);
                if s <= (2.0 * x * p0).min(b1) {
                    AgentLabel::Resistant
                } else if s > (2.0 * x * (1.0 - p0)).max(b1) {
                    AgentLabel::Follower
                } else {
                    AgentLabel::Oscillator
                }
            } else {
                let b0 = beta_threshold(x, a.phi, p0);
                let b1 = beta_threshold(x, a.phi, p1);
                if s <= b0.min(b1) {
                    AgentLabel::Resistant
                } else if s > b0.max(b1) {
                    AgentLabel::Follower
                } else {
                    AgentLabel::Oscillator
                }
            }
        })
        .collect())
}
