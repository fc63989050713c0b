//! The finite-population consensus update as a piecewise-linear interval map.
//!
//! Within one group, each agent's decision depends on the previous consensus
//! `c` only through a few thresholds. Between consecutive thresholds every
//! decision is fixed, so the next consensus `sum_i w_i mu_hat_i(c)` is affine
//! in `c`. Pieces are half-open `(lo, hi]`, the first closed at 0.

mod classify;
mod dynamics;

pub use classify::{
    classify_agents, classify_periodic, AgentClass, AgentClassification, AgentLabel, LowerClass,
    UpperClass,
};
pub use dynamics::{
    analyze_dynamics, detect_cycle, DynamicsReport, Outcome, DEFAULT_CYCLE_TOLERANCE, MAX_CYCLE_PERIOD,
};

use serde::{Deserialize, Serialize};

use crate::decisions::{diverse_choice, Choice};
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::model::{Agent, AgentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BreakpointKind {
    LowerB,
    LowerD,
    UpperW,
    UpperY,
    /// The switch between the lower and upper decision tables at one half.
    RegionBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointSource {
    pub agent: Option<AgentId>,
    pub kind: BreakpointKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub c: f64,
    pub sources: Vec<BreakpointSource>,
}

/// `F(c) = slope * c + intercept` on `(lo, hi]` (`[lo, hi]` when `closed_lo`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub lo: f64,
    pub hi: f64,
    pub closed_lo: bool,
    pub slope: f64,
    pub intercept: f64,
    /// Every agent keeps the prior: the identity map.
    pub degenerate: bool,
}

impl AffinePiece {
    pub fn contains(&self, c: f64) -> bool {
        (c > self.lo || (self.closed_lo && c == self.lo)) && c <= self.hi
    }

    /// Clamped to `[0, 1]` against rounding.
    pub fn apply(&self, c: f64) -> f64 {
        (self.slope * c + self.intercept).clamp(0.0, 1.0)
    }
}

/// Value at a piece endpoint where the decisions differ from the owning
/// piece (switches that include their threshold, such as `c >= t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOverride {
    pub c: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearMap {
    pub x: f64,
    pub weights: Vec<f64>,
    pub classification: AgentClassification,
    /// Sorted by `lo`; they tile `[0, 1]`.
    pub pieces: Vec<AffinePiece>,
    pub breakpoints: Vec<Breakpoint>,
    pub overrides: Vec<PointOverride>,
}

/// Slope and intercept of one agent's chosen belief `mu_hat(c)`, scaled by `w`.
fn contribution(choice: Choice, w: f64, phi: f64) -> (f64, f64) {
    match choice {
        Choice::SamplePolicymaker => (w * phi, 0.0),
        Choice::StickToPrior => (w, 0.0),
        Choice::SampleLeader => (w * (1.0 - phi), w * phi),
    }
}

fn affine_at(agents: &[Agent], weights: &[f64], x: f64, c: f64) -> (Vec<Choice>, f64, f64) {
    let mut slope = 0.0;
    let mut intercept = 0.0;
    let choices = agents
        .iter()
        .zip(weights)
        .map(|(a, &w)| {
            let ch = diverse_choice(a.sigma, a.phi_leader, c, x);
            let (s, i) = contribution(ch, w, a.phi_leader);
            slope += s;
            intercept += i;
            ch
        })
        .collect();
    (choices, slope, intercept)
}

pub fn build_map(agents: &[Agent], weights: &[f64], x: f64) -> Result<PiecewiseLinearMap> {
    build_map_in(Execution::Sequential, agents, weights, x)
}

/// [`build_map`] with the per-piece evaluation spread according to `exec`.
pub fn build_map_in(exec: Execution, agents: &[Agent], weights: &[f64], x: f64) -> Result<PiecewiseLinearMap> {
    if agents.is_empty() {
        return Err(invalid("map needs at least one agent"));
    }
    if agents.len() != weights.len() {
        return Err(invalid(format!("{} agents but {} weights", agents.len(), weights.len())));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(invalid("weights must be positive"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("weights sum to {total}, expected 1")));
    }
    let classification = classify_agents(agents, x)?;

    let mut raw: Vec<(f64, BreakpointSource)> =
        vec![(0.5, BreakpointSource { agent: None, kind: BreakpointKind::RegionBoundary })];
    for a in &classification.agents {
        if let Some(t) = a.lower_threshold {
            let kind = if a.lower == LowerClass::B { BreakpointKind::LowerB } else { BreakpointKind::LowerD };
            raw.push((t, BreakpointSource { agent: Some(a.agent), kind }));
        }
        if let Some(t) = a.upper_threshold {
            let kind = if a.upper == UpperClass::W { BreakpointKind::UpperW } else { BreakpointKind::UpperY };
            raw.push((t, BreakpointSource { agent: Some(a.agent), kind }));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut breakpoints: Vec<Breakpoint> = Vec::new();
    for (c, src) in raw {
        match breakpoints.last_mut() {
            Some(last) if last.c == c => last.sources.push(src),
            _ => breakpoints.push(Breakpoint { c, sources: vec![src] }),
        }
    }

    // Interior cut points; thresholds at exactly 0 or 1 only produce overrides.
    let mut cuts = vec![0.0];
    cuts.extend(breakpoints.iter().map(|b| b.c).filter(|&c| c > 0.0 && c < 1.0));
    cuts.push(1.0);

    let spans: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    let evaluated = exec.map(&spans, |&(lo, hi)| affine_at(agents, weights, x, 0.5 * (lo + hi)));
    let pieces: Vec<AffinePiece> = spans
        .iter()
        .zip(&evaluated)
        .enumerate()
        .map(|(k, (&(lo, hi), (choices, slope, intercept)))| AffinePiece {
            lo,
            hi,
            closed_lo: k == 0,
            slope: *slope,
            intercept: *intercept,
            degenerate: choices.iter().all(|c| *c == Choice::StickToPrior),
        })
        .collect();

    let mut overrides = Vec::new();
    for (k, &c) in cuts.iter().enumerate() {
        let owner = k.saturating_sub(1);
        let (choices, slope, intercept) = affine_at(agents, weights, x, c);
        if choices != evaluated[owner].0 {
            overrides.push(PointOverride { c, slope, intercept });
        }
    }

    Ok(PiecewiseLinearMap { x, weights: weights.to_vec(), classification, pieces, breakpoints, overrides })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixedPoint {
    Isolated { c: f64, piece: usize, stable: bool },
    /// A degenerate piece: every point of it is fixed.
    WholePiece { piece: usize, lo: f64, hi: f64 },
}

impl PiecewiseLinearMap {
    /// Index of the piece containing `c`.
    pub fn piece_index(&self, c: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&c) {
            return Err(invalid(format!("c = {c} is outside [0, 1]")));
        }
        let k = self.pieces.partition_point(|p| p.hi < c);
        Ok(k.min(self.pieces.len() - 1))
    }

    pub fn evaluate(&self, c: f64) -> Result<f64> {
        let k = self.piece_index(c)?;
        if let Some(o) = self.overrides.iter().find(|o| o.c == c) {
            return Ok((o.slope * c + o.intercept).clamp(0.0, 1.0));
        }
        Ok(self.pieces[k].apply(c))
    }

    /// The fixed point inside piece `k`, if there is one.
    pub fn fixed_point_of(&self, k: usize) -> Option<FixedPoint> {
        let p = &self.pieces[k];
        if p.degenerate {
            return Some(FixedPoint::WholePiece { piece: k, lo: p.lo, hi: p.hi });
        }
        let c = p.intercept / (1.0 - p.slope);
        if !p.contains(c) {
            return None;
        }
        let fc = self.evaluate(c).ok()?;
        ((fc - c).abs() < 1e-12).then_some(FixedPoint::Isolated { c, piece: k, stable: p.slope < 1.0 })
    }
}

pub fn find_fixed_points(map: &PiecewiseLinearMap) -> Vec<FixedPoint> {
    (0..map.pieces.len()).filter_map(|k| map.fixed_point_of(k)).collect()
}
