//! Which majority groups a hate-spreading leader should target.
//!
//! Targeting more people dilutes the leader's credibility: each targeted
//! agent's effective credibility drops by `N_S / K`. At equilibrium a targeted
//! group settles on its largest credibility, so the leader's return is
//! `sum_{g in S} phi_g |g| - N_S^2 / K - |S| cost`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::model::{GroupId, ModelParams, Population};

pub const BRUTE_FORCE_MAX_GROUPS: usize = 20;
/// Returns closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupProfile {
    pub id: GroupId,
    pub size: usize,
    /// Largest leader credibility among members.
    pub phi_max: f64,
}

impl GroupProfile {
    pub fn check(&self) -> Result<()> {
        if self.size == 0 {
            return Err(invalid(format!("{} has size 0", self.id)));
        }
        if !(self.phi_max > 0.0 && self.phi_max < 1.0) {
            return Err(invalid(format!("{}: phi_max {} outside (0, 1)", self.id, self.phi_max)));
        }
        Ok(())
    }
}

/// Profiles of every non-scapegoat group.
pub fn profiles_from_population(population: &Population) -> Vec<GroupProfile> {
    population
        .groups
        .iter()
        .filter(|g| !g.is_scapegoat)
        .map(|g| GroupProfile {
            id: g.id,
            size: g.size(),
            phi_max: g
                .members
                .iter()
                .map(|a| population.agents[a.0].phi_leader)
                .fold(0.0, f64::max),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSet {
    /// Sorted by id.
    pub groups: Vec<GroupId>,
    pub total_size: usize,
}

impl TargetSet {
    pub fn empty() -> Self {
        TargetSet { groups: Vec::new(), total_size: 0 }
    }

    /// The set of `profiles[i]` for every bit `i` of `mask`.
    fn from_mask(mask: u64, profiles: &[GroupProfile]) -> Self {
        let mut groups = Vec::new();
        let mut total_size = 0;
        for (i, p) in profiles.iter().enumerate() {
            if mask >> i & 1 == 1 {
                groups.push(p.id);
                total_size += p.size;
            }
        }
        groups.sort_unstable();
        TargetSet { groups, total_size }
    }

    pub fn from_ids(ids: &[GroupId], profiles: &[GroupProfile]) -> Result<Self> {
        let mut groups = ids.to_vec();
        groups.sort_unstable();
        groups.dedup();
        let mut total_size = 0;
        for id in &groups {
            let p = profiles
                .iter()
                .find(|p| p.id == *id)
                .ok_or_else(|| invalid(format!("{id} has no profile")))?;
            total_size += p.size;
        }
        Ok(TargetSet { groups, total_size })
    }

    pub fn contains(&self, id: GroupId) -> bool {
        self.groups.binary_search(&id).is_ok()
    }
}

pub fn effective_credibility(phi: f64, target: &TargetSet, k_total: usize) -> f64 {
    (phi - target.total_size as f64 / k_total as f64).max(0.0)
}

fn check_problem(profiles: &[GroupProfile], k_total: usize) -> Result<()> {
    if k_total == 0 {
        return Err(invalid("K must be at least 1"));
    }
    for p in profiles {
        p.check()?;
    }
    let total: usize = profiles.iter().map(|p| p.size).sum();
    if total > k_total {
        return Err(invalid(format!("group sizes add to {total}, more than K = {k_total}")));
    }
    Ok(())
}

pub fn equilibrium_return(
    target: &TargetSet,
    profiles: &[GroupProfile],
    k_total: usize,
    params: &ModelParams,
) -> Result<f64> {
    if k_total == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let mut gain = 0.0;
    for id in &target.groups {
        let p = profiles
            .iter()
            .find(|p| p.id == *id)
            .ok_or_else(|| invalid(format!("{id} has no profile")))?;
        gain += p.phi_max * p.size as f64;
    }
    let n = target.total_size as f64;
    Ok(gain - n * n / k_total as f64 - target.groups.len() as f64 * params.comm_cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BruteForce,
    Greedy,
    ClosedFormHomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub best: TargetSet,
    pub value: f64,
    /// Other sets whose return ties `value`.
    pub alternates: Vec<TargetSet>,
}

pub fn optimal_target_set(
    profiles: &[GroupProfile],
    k_total: usize,
    params: &ModelParams,
    method: Method,
    exec: Execution,
) -> Result<Optimum> {
    check_problem(profiles, k_total)?;
    match method {
        Method::BruteForce => brute_force(profiles, k_total, params, exec),
        Method::Greedy => greedy(profiles, k_total, params),
        Method::ClosedFormHomogeneous => closed_form(profiles, k_total, params),
    }
}

fn mask_value(mask: u64, profiles: &[GroupProfile], k: f64, cost: f64) -> f64 {
    let (mut gain, mut n, mut count) = (0.0, 0usize, 0usize);
    for (i, p) in profiles.iter().enumerate() {
        if mask >> i & 1 == 1 {
            gain += p.phi_max * p.size as f64;
            n += p.size;
            count += 1;
        }
    }
    let n = n as f64;
    gain - n * n / k - count as f64 * cost
}

fn brute_force(profiles: &[GroupProfile], k_total: usize, params: &ModelParams, exec: Execution) -> Result<Optimum> {
    let m = profiles.len();
    if m > BRUTE_FORCE_MAX_GROUPS {
        return Err(invalid(format!(
            "brute force handles at most {BRUTE_FORCE_MAX_GROUPS} groups, got {m}"
        )));
    }
    let k = k_total as f64;
    let cost = params.comm_cost;
    let masks = 1u64 << m;
    const CHUNK: u64 = 1 << 12;
    let chunks = masks.div_ceil(CHUNK) as usize;
    // Each chunk keeps its best value and the masks within tolerance of it.
    let partial = exec.map_range(chunks, |c| {
        let lo = c as u64 * CHUNK;
        let hi = (lo + CHUNK).min(masks);
        let mut best = f64::NEG_INFINITY;
        let mut found: Vec<(u64, f64)> = Vec::new();
        for mask in lo..hi {
            let v = mask_value(mask, profiles, k, cost);
            if v > best + TIE_TOLERANCE {
                best = v;
                found.retain(|(_, fv)| *fv >= v - TIE_TOLERANCE);
            }
            if v >= best - TIE_TOLERANCE {
                found.push((mask, v));
            }
        }
        (best, found)
    });
    let best = partial.iter().map(|(b, _)| *b).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<(u64, f64)> = partial
        .into_iter()
        .flat_map(|(_, f)| f)
        .filter(|(_, v)| *v >= best - TIE_TOLERANCE)
        .collect();
    let (first_mask, _) = winners
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |acc, w| if w.1 > acc.1 + TIE_TOLERANCE { w } else { acc });
    let best_set = TargetSet::from_mask(first_mask, profiles);
    let alternates = winners
        .iter()
        .filter(|(mask, _)| *mask != first_mask)
        .map(|(mask, _)| TargetSet::from_mask(*mask, profiles))
        .collect();
    let value = mask_value(first_mask, profiles, k, cost);
    Ok(Optimum { best: best_set, value, alternates })
}

fn greedy(profiles: &[GroupProfile], k_total: usize, params: &ModelParams) -> Result<Optimum> {
    let k = k_total as f64;
    let cost = params.comm_cost;
    let mut value = 0.0;
    let mut taken = vec![false; profiles.len()];
    let mut n = 0.0;
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for (i, p) in profiles.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let s = p.size as f64;
            let gain = p.phi_max * s - (2.0 * n * s + s * s) / k - cost;
            if gain > 0.0 && pick.is_none_or(|(_, g)| gain > g) {
                pick = Some((i, gain));
            }
        }
        let Some((i, gain)) = pick else { break };
        taken[i] = true;
        n += profiles[i].size as f64;
        value += gain;
    }
    let mut groups: Vec<GroupId> = profiles.iter().zip(&taken).filter(|(_, t)| **t).map(|(p, _)| p.id).collect();
    groups.sort_unstable();
    let total_size = profiles.iter().zip(&taken).filter(|(_, t)| **t).map(|(p, _)| p.size).sum();
    Ok(Optimum { best: TargetSet { groups, total_size }, value, alternates: Vec::new() })
}

/// With a common credibility `phi`, the return `phi N - N^2/K` peaks at
/// `N = phi K / 2`; pick the reachable total closest to it.
fn closed_form(profiles: &[GroupProfile], k_total: usize, params: &ModelParams) -> Result<Optimum> {
    let Some(first) = profiles.first() else {
        return Ok(Optimum { best: TargetSet::empty(), value: 0.0, alternates: Vec::new() });
    };
    let phi = first.phi_max;
    if profiles.iter().any(|p| p.phi_max != phi) {
        return Err(invalid("closed form needs every group to share the same phi_max"));
    }
    // reach[s] = fewest groups summing to s, with the last group used
    let total: usize = profiles.iter().map(|p| p.size).sum();
    let mut reach: Vec<Option<(usize, Vec<usize>)>> = vec![None; total + 1];
    reach[0] = Some((0, Vec::new()));
    for (i, p) in profiles.iter().enumerate() {
        for s in (p.size..=total).rev() {
            if let Some((count, ref used)) = reach[s - p.size] {
                let cand = count + 1;
                if reach[s].as_ref().is_none_or(|(c, _)| cand < *c) {
                    let mut u = used.clone();
                    u.push(i);
                    reach[s] = Some((cand, u));
                }
            }
        }
    }
    let target = phi * k_total as f64 / 2.0;
    let mut best_dist = f64::INFINITY;
    let mut nearest: Vec<usize> = Vec::new();
    for (s, r) in reach.iter().enumerate() {
        if r.is_none() {
            continue;
        }
        let d = (s as f64 - target).abs();
        if d < best_dist - 1e-12 {
            best_dist = d;
            nearest = vec![s];
        } else if (d - best_dist).abs() <= 1e-12 {
            nearest.push(s);
        }
    }
    let sets: Vec<TargetSet> = nearest
        .iter()
        .map(|&s| {
            let used = &reach[s].as_ref().expect("reachable").1;
            let ids: Vec<GroupId> = used.iter().map(|&i| profiles[i].id).collect();
            TargetSet::from_ids(&ids, profiles)
        })
        .collect::<Result<_>>()?;
    let value = equilibrium_return(&sets[0], profiles, k_total, params)?;
    let mut iter = sets.into_iter();
    let best = iter.next().expect("at least the empty set is reachable");
    Ok(Optimum { best, value, alternates: iter.collect() })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalOptimalityReport {
    /// Omitted groups that would raise the return if added.
    pub omitted_violators: Vec<GroupId>,
    /// Included groups that would raise the return if dropped.
    pub included_violators: Vec<GroupId>,
}

impl LocalOptimalityReport {
    pub fn is_clean(&self) -> bool {
        self.omitted_violators.is_empty() && self.included_violators.is_empty()
    }
}

/// Zero-cost marginal conditions, weak so that ties pass:
/// omitted `phi_m <= |g_m|/K + 2 N/K`, included `phi_s >= |g_s|/K + 2 (N - |g_s|)/K`.
pub fn verify_local_optimality(target: &TargetSet, profiles: &[GroupProfile], k_total: usize) -> LocalOptimalityReport {
    let k = k_total as f64;
    let n = target.total_size as f64;
    let mut report = LocalOptimalityReport::default();
    for p in profiles {
        let s = p.size as f64;
        if target.contains(p.id) {
            if p.phi_max < s / k + 2.0 * (n - s) / k - TIE_TOLERANCE {
                report.included_violators.push(p.id);
            }
        } else if p.phi_max > s / k + 2.0 * n / k + TIE_TOLERANCE {
            report.omitted_violators.push(p.id);
        }
    }
    report
}

/// Reference rule for equal-size groups: target every group with `phi_g > |g|/K`.
/// It ignores the interaction between targeted groups, so it is reported
/// for comparison only.
pub fn equal_size_rule(profiles: &[GroupProfile], k_total: usize) -> Vec<GroupId> {
    profiles
        .iter()
        .filter(|p| p.phi_max > p.size as f64 / k_total as f64)
        .map(|p| p.id)
        .collect()
}
