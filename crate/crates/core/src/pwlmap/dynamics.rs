//! Orbits of the consensus map: fixed points, cycles and agent labels.

use serde::{Deserialize, Serialize};

use super::classify::{classify_periodic, AgentLabel};
use super::{FixedPoint, PiecewiseLinearMap};
use crate::decisions::{diverse_choice, Choice};
use crate::error::{invalid, Result};

/// Longest cycle the detector looks for.
pub const MAX_CYCLE_PERIOD: usize = 64;
pub const DEFAULT_CYCLE_TOLERANCE: f64 = 1e-9;

/// Smallest `p` in `2..=max_period` such that the last `p` keys repeat the
/// `p` before them, are not all equal, and every one of the last `p` values
/// lies within `tol` of the value `p` steps earlier (`distance(j, j - p)`).
pub fn detect_cycle<K: PartialEq>(
    keys: &[K],
    tol: f64,
    max_period: usize,
    distance: impl Fn(usize, usize) -> f64,
) -> Option<usize> {
    let n = keys.len();
    for p in 2..=max_period {
        if n < 2 * p {
            break;
        }
        let window = &keys[n - p..];
        if window.iter().all(|k| *k == window[0]) || keys[n - 2 * p..n - p] != *window {
            continue;
        }
        if (n - p..n).all(|j| distance(j, j - p) < tol) {
            return Some(p);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    FixedPoint {
        c: f64,
        piece: usize,
    },
    Periodic {
        /// Exact orbit in visiting order.
        orbit: Vec<f64>,
        period: usize,
        pieces: Vec<usize>,
        /// Product of the slopes along the cycle.
        composed_slope: f64,
    },
    Undetermined {
        max_iter: usize,
        last: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub outcome: Outcome,
    /// `c_0, c_1, ...` as iterated.
    pub trajectory: Vec<f64>,
    /// From the decision rule at a fixed point, or the periodic tables.
    pub labels: Vec<AgentLabel>,
    /// Decisions actually taken along a periodic orbit.
    pub observed_labels: Option<Vec<AgentLabel>>,
}

pub fn analyze_dynamics(map: &PiecewiseLinearMap, c0: f64, max_iter: usize, tol: f64) -> Result<DynamicsReport> {
    if !(0.0..=1.0).contains(&c0) {
        return Err(invalid(format!("c0 = {c0} is outside [0, 1]")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let mut trajectory = vec![c0];
    let mut keys: Vec<usize> = Vec::new();
    let mut c = c0;
    for _ in 0..max_iter {
        let k = map.piece_index(c)?;
        keys.push(k);
        let next = map.evaluate(c)?;
        trajectory.push(next);

        if (next - c).abs() < tol {
            let fixed = match map.fixed_point_of(k) {
                Some(FixedPoint::WholePiece { .. }) if next == c => Some(c),
                Some(FixedPoint::Isolated { c: star, .. }) => Some(star),
                _ => None,
            };
            if let Some(star) = fixed {
                let labels = decision_labels(map, &[star]);
                return Ok(DynamicsReport {
                    outcome: Outcome::FixedPoint { c: star, piece: k },
                    trajectory,
                    labels,
                    observed_labels: None,
                });
            }
        }

        let found = detect_cycle(&keys, tol, MAX_CYCLE_PERIOD, |i, j| (trajectory[i] - trajectory[j]).abs());
        if let Some(p) = found {
            let cycle = keys[keys.len() - p..].to_vec();
            if let Some((orbit, composed_slope)) = exact_orbit(map, &cycle) {
                let p0 = orbit.iter().copied().fold(f64::INFINITY, f64::min);
                let p1 = orbit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let labels = classify_periodic(&map.classification, map.x, p0, p1)?;
                let observed = decision_labels(map, &orbit);
                return Ok(DynamicsReport {
                    outcome: Outcome::Periodic { orbit, period: p, pieces: cycle, composed_slope },
                    trajectory,
                    labels,
                    observed_labels: Some(observed),
                });
            }
        }
        c = next;
    }
    Ok(DynamicsReport {
        outcome: Outcome::Undetermined { max_iter, last: c },
        trajectory,
        labels: Vec::new(),
        observed_labels: None,
    })
}

/// The unique orbit following `cycle`, if every point lands in its piece.
fn exact_orbit(map: &PiecewiseLinearMap, cycle: &[usize]) -> Option<(Vec<f64>, f64)> {
    let (mut slope, mut shift) = (1.0, 0.0);
    for &k in cycle {
        let p = &map.pieces[k];
        slope *= p.slope;
        shift = p.slope * shift + p.intercept;
    }
    if !(slope < 1.0) {
        return None;
    }
    let start = shift / (1.0 - slope);
    let mut orbit = Vec::with_capacity(cycle.len());
    let mut c = start;
    for &k in cycle {
        let piece = &map.pieces[k];
        if !piece.contains(c) || map.overrides.iter().any(|o| o.c == c) {
            return None;
        }
        orbit.push(c);
        c = piece.apply(c);
    }
    ((c - start).abs() < 1e-12).then_some((orbit, slope))
}

/// Follower / resistant / sticker when an agent's choice is the same at every
/// point, oscillator otherwise.
fn decision_labels(map: &PiecewiseLinearMap, points: &[f64]) -> Vec<AgentLabel> {
    map.classification
        .agents
        .iter()
        .map(|a| {
            let mut choices = points.iter().map(|&c| diverse_choice(a.sigma, a.phi, c, map.x));
            let first = choices.next();
            match first {
                Some(ch) if choices.all(|o| o == ch) => match ch {
                    Choice::SampleLeader => AgentLabel::Follower,
                    Choice::SamplePolicymaker => AgentLabel::Resistant,
                    Choice::StickToPrior => AgentLabel::Sticker,
                },
                _ => AgentLabel::Oscillator,
            }
        })
        .collect()
}
