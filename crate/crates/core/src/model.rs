//! Agents, social groups, model parameters and seeded population generation.

use std::fmt;

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent {}", self.0)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "group {}", self.0)
    }
}

/// Leader signal. The leader always pushes the hate state.
pub const LEADER_SIGNAL: f64 = 1.0;
/// Policymaker signal, taken at its limit value.
pub const POLICYMAKER_SIGNAL: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Punishment magnitude for acting on the hate belief.
    pub chi: f64,
    /// Leader's per-group communication cost.
    pub comm_cost: f64,
}

impl ModelParams {
    pub fn new(chi: f64, comm_cost: f64) -> Result<Self> {
        let p = ModelParams { chi, comm_cost };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.chi.is_finite() && self.chi > 0.0) {
            return Err(invalid(format!("chi must be > 0, got {}", self.chi)));
        }
        if !(self.comm_cost.is_finite() && self.comm_cost >= 0.0) {
            return Err(invalid(format!("comm_cost must be >= 0, got {}", self.comm_cost)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub group: GroupId,
    /// Weight on psychological utility.
    pub sigma: f64,
    /// Credibility the agent grants the leader.
    pub phi_leader: f64,
}

impl Agent {
    pub fn new(id: usize, group: usize, sigma: f64, phi_leader: f64) -> Self {
        Agent { id: AgentId(id), group: GroupId(group), sigma, phi_leader }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialGroup {
    pub id: GroupId,
    pub members: Vec<AgentId>,
    #[serde(default)]
    pub is_scapegoat: bool,
}

impl SocialGroup {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Agents plus their partition into groups. `agents[i].id == AgentId(i)` and
/// `groups[g].id == GroupId(g)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub agents: Vec<Agent>,
    pub groups: Vec<SocialGroup>,
}

impl Population {
    /// Builds a population from `(sigma, phi)` pairs and a group label per agent.
    pub fn from_parts(pairs: &[(f64, f64)], group_of: &[usize]) -> Result<Self> {
        if pairs.len() != group_of.len() {
            return Err(invalid("one group label per agent is required"));
        }
        if pairs.is_empty() {
            return Err(invalid("population must contain at least one agent"));
        }
        let k = group_of.iter().max().map_or(0, |m| m + 1);
        let mut groups: Vec<SocialGroup> = (0..k)
            .map(|g| SocialGroup { id: GroupId(g), members: Vec::new(), is_scapegoat: false })
            .collect();
        let agents = pairs
            .iter()
            .zip(group_of)
            .enumerate()
            .map(|(i, (&(s, p), &g))| {
                groups[g].members.push(AgentId(i));
                Agent::new(i, g, s, p)
            })
            .collect();
        if let Some(empty) = groups.iter().find(|g| g.members.is_empty()) {
            return Err(invalid(format!("{} has no members", empty.id)));
        }
        Ok(Population { agents, groups })
    }

    /// One group holding every agent.
    pub fn single_group(pairs: &[(f64, f64)]) -> Result<Self> {
        Population::from_parts(pairs, &vec![0; pairs.len()])
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn member_indices(&self) -> Vec<Vec<usize>> {
        self.groups
            .iter()
            .map(|g| g.members.iter().map(|a| a.0).collect())
            .collect()
    }

    /// Appends a scapegoat group of `size` agents. Their preferences are
    /// irrelevant to the dynamics; they are set to the midpoint.
    pub fn add_scapegoat(&mut self, size: usize) -> Result<GroupId> {
        if size == 0 {
            return Err(invalid("scapegoat group must be non-empty"));
        }
        let gid = GroupId(self.groups.len());
        let start = self.agents.len();
        let members: Vec<AgentId> = (start..start + size).map(AgentId).collect();
        for &id in &members {
            self.agents.push(Agent { id, group: gid, sigma: 0.5, phi_leader: 0.5 });
        }
        self.groups.push(SocialGroup { id: gid, members, is_scapegoat: true });
        Ok(gid)
    }
}

/// How a per-agent preference value is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// i.i.d. uniform on the open interval (0, 1).
    IidUniformOpenUnit,
    ExplicitList { values: Vec<f64> },
    Constant { value: f64 },
}

impl DistributionSpec {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let values = match self {
            DistributionSpec::IidUniformOpenUnit => {
                (0..n).map(|_| Open01.sample(rng)).collect::<Vec<f64>>()
            }
            DistributionSpec::ExplicitList { values } => {
                if values.len() != n {
                    return Err(invalid(format!(
                        "explicit list has {} values for {} agents",
                        values.len(),
                        n
                    )));
                }
                values.clone()
            }
            DistributionSpec::Constant { value } => vec![*value; n],
        };
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && **v < 1.0)) {
            return Err(invalid(format!("value {v} for agent {i} is outside (0, 1)")));
        }
        Ok(values)
    }
}

/// Seeded population with round-robin group assignment.
pub fn generate_population(
    n: usize,
    k_groups: usize,
    sigma: &DistributionSpec,
    phi: &DistributionSpec,
    seed: u64,
) -> Result<Population> {
    if n == 0 || k_groups == 0 {
        return Err(invalid("n and k_groups must both be at least 1"));
    }
    if n < k_groups {
        return Err(invalid(format!("cannot spread {n} agents over {k_groups} groups")));
    }
    let labels: Vec<usize> = (0..n).map(|i| i % k_groups).collect();
    draw_population(&labels, sigma, phi, seed)
}

/// Seeded population with explicit, contiguous group sizes.
pub fn generate_population_with_sizes(
    sizes: &[usize],
    sigma: &DistributionSpec,
    phi: &DistributionSpec,
    seed: u64,
) -> Result<Population> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(invalid("group sizes must be non-empty and positive"));
    }
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
        .collect();
    draw_population(&labels, sigma, phi, seed)
}

fn draw_population(
    labels: &[usize],
    sigma: &DistributionSpec,
    phi: &DistributionSpec,
    seed: u64,
) -> Result<Population> {
    let n = labels.len();
    // Separate streams keep sigma draws unchanged when only the phi spec changes.
    let mut rng_sigma = ChaCha8Rng::seed_from_u64(seed);
    let mut rng_phi = ChaCha8Rng::seed_from_u64(seed);
    rng_phi.set_stream(1);
    let sigmas = sigma.draw(n, &mut rng_sigma)?;
    let phis = phi.draw(n, &mut rng_phi)?;
    let pairs: Vec<(f64, f64)> = sigmas.into_iter().zip(phis).collect();
    Population::from_parts(&pairs, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_population() {
        let u = DistributionSpec::IidUniformOpenUnit;
        let a = generate_population(50, 3, &u, &u, 7).unwrap();
        let b = generate_population(50, 3, &u, &u, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_population(50, 3, &u, &u, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_sigma_mean_near_half() {
        let u = DistributionSpec::IidUniformOpenUnit;
        let pop = generate_population(100_000, 1, &u, &u, 11).unwrap();
        let mean = pop.agents.iter().map(|a| a.sigma).sum::<f64>() / pop.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
        assert!(pop.agents.iter().all(|a| a.sigma > 0.0 && a.sigma < 1.0));
    }

    #[test]
    fn constant_spec() {
        let pop = generate_population(
            6,
            2,
            &DistributionSpec::Constant { value: 0.9 },
            &DistributionSpec::Constant { value: 0.5 },
            0,
        )
        .unwrap();
        assert!(pop.agents.iter().all(|a| a.sigma == 0.9 && a.phi_leader == 0.5));
    }

    #[test]
    fn round_robin_partition_is_disjoint_and_covering() {
        let u = DistributionSpec::IidUniformOpenUnit;
        let pop = generate_population(10, 3, &u, &u, 1).unwrap();
        let mut seen: Vec<usize> = pop.groups.iter().flat_map(|g| g.members.iter().map(|a| a.0)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(pop.groups[0].size(), 4);
        assert_eq!(pop.agents[4].group, GroupId(1));
    }

    #[test]
    fn rejects_degenerate_sizes() {
        let u = DistributionSpec::IidUniformOpenUnit;
        assert!(generate_population(0, 1, &u, &u, 0).is_err());
        assert!(generate_population(3, 0, &u, &u, 0).is_err());
        assert!(generate_population(2, 3, &u, &u, 0).is_err());
        let bad = DistributionSpec::Constant { value: 1.0 };
        assert!(generate_population(2, 1, &bad, &u, 0).is_err());
    }

    #[test]
    fn explicit_sizes_are_contiguous() {
        let u = DistributionSpec::IidUniformOpenUnit;
        let pop = generate_population_with_sizes(&[2, 3], &u, &u, 3).unwrap();
        assert_eq!(pop.member_indices(), vec![vec![0, 1], vec![2, 3, 4]]);
    }
}
