//! JSON run configuration, dotted-path overrides and scenario assembly.

use std::path::Path;

use belief_dynamics::leader::{GroupProfile, Method};
use belief_dynamics::matrix::{build_credibility_matrix, CredibilityMatrix, MatrixGenerator};
use belief_dynamics::model::{
    generate_population, generate_population_with_sizes, DistributionSpec, ModelParams, Population,
};
use belief_dynamics::scenario::{validate_scenario, Regime, Scenario, ViolationKind, DEFAULT_COMM_TOLERANCE};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Meanfield,
    Entropy,
    LeaderOpt,
    MapAnalyze,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Meanfield => "meanfield",
            Command::Entropy => "entropy",
            Command::LeaderOpt => "leader-opt",
            Command::MapAnalyze => "map-analyze",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub command: Option<Command>,
    /// Punishment for acting on the hate belief.
    pub x: f64,
    #[serde(default)]
    pub comm_cost: f64,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    pub horizon: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_comm_tolerance")]
    pub comm_tolerance: f64,
    #[serde(default = "default_true")]
    pub stop_early: bool,
    pub population: Option<PopulationConfig>,
    pub matrix: Option<MatrixGenerator>,
    pub meanfield: Option<MeanfieldConfig>,
    pub entropy: Option<EntropyConfig>,
    pub leader: Option<LeaderConfig>,
    pub map: Option<MapConfig>,
    pub sweep: Option<SweepConfig>,
}

fn default_regime() -> Regime {
    Regime::Diverse
}

fn default_comm_tolerance() -> f64 {
    DEFAULT_COMM_TOLERANCE
}

fn default_true() -> bool {
    true
}

/// Either explicit `agents`, or `n` / `group_sizes` drawn from `sigma` and `phi`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub agents: Option<Vec<AgentConfig>>,
    pub n: Option<usize>,
    pub k_groups: Option<usize>,
    pub group_sizes: Option<Vec<usize>>,
    pub sigma: Option<DistributionSpec>,
    pub phi: Option<DistributionSpec>,
    /// Size of an untargeted minority group appended at the end.
    pub scapegoat_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub sigma: f64,
    pub phi: f64,
    #[serde(default)]
    pub group: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldConfig {
    #[serde(default)]
    pub c0: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for MeanfieldConfig {
    fn default() -> Self {
        MeanfieldConfig { c0: 0.0, tol: default_tol(), max_iter: default_max_iter() }
    }
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    10_000
}

/// Entropy of an explicit vector `p`, or of the population's policymaker
/// sampling probabilities at consensus `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub p: Option<Vec<f64>>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderConfig {
    #[serde(default = "default_method")]
    pub method: Method,
    /// Majority population size; defaults to the targetable population.
    pub k_total: Option<usize>,
    /// Profiles given directly instead of derived from the population.
    pub groups: Option<Vec<GroupProfile>>,
}

fn default_method() -> Method {
    Method::BruteForce
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    #[serde(default)]
    pub c0: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { c0: 0.0, max_iter: default_max_iter(), tol: default_tol() }
    }
}

/// Grid over `x`, population size and replicate seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// What every cell runs.
    #[serde(default = "default_cell_command")]
    pub command: Command,
    pub x: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

fn default_cell_command() -> Command {
    Command::Simulate
}

fn default_replicates() -> usize {
    1
}

/// Reads `path`, applies `--set` overrides and `--seed`, and deserializes.
pub fn load_config(path: &Path, overrides: &[String], seed: Option<u64>) -> CliResult<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, overrides, seed)
}

pub fn parse_config(text: &str, overrides: &[String], seed: Option<u64>) -> CliResult<Config> {
    if overrides.is_empty() && seed.is_none() {
        // straight from the text so errors carry line and column
        let de = &mut serde_json::Deserializer::from_str(text);
        return serde_path_to_error::deserialize(de).map_err(path_error);
    }
    let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    if let Some(s) = seed {
        set_path(&mut value, "seed", Value::from(s))?;
    }
    serde_path_to_error::deserialize(value).map_err(path_error)
}

fn path_error<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> CliError {
    let path = e.path().to_string();
    if path == "." {
        CliError::Parse(e.inner().to_string())
    } else {
        CliError::Parse(format!("field `{path}`: {}", e.inner()))
    }
}

/// `a.b.0.c=value`, where the value is JSON if it parses and a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("--set {assignment}: expected key=value")))?;
    if path.is_empty() {
        return Err(CliError::Parse(format!("--set {assignment}: empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(root, path, value)
}

fn set_path(root: &mut Value, path: &str, value: Value) -> CliResult<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (depth, key) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let i: usize = key
                    .parse()
                    .map_err(|_| CliError::Parse(format!("--set {path}: `{key}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(i)
                    .ok_or_else(|| CliError::Parse(format!("--set {path}: index {i} out of range ({len} items)")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Parse(format!("--set {path}: `{key}` is inside a scalar"))),
        };
    }
    unreachable!("the loop returns on the last path component")
}

impl Config {
    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.x, self.comm_cost)?)
    }

    pub fn build_population(&self) -> CliResult<Population> {
        let p = self
            .population
            .as_ref()
            .ok_or_else(|| CliError::Parse("missing field `population`".into()))?;
        let mut pop = if let Some(agents) = &p.agents {
            if p.n.is_some() || p.group_sizes.is_some() || p.sigma.is_some() || p.phi.is_some() {
                return Err(CliError::invalid("population: give either `agents` or a generator, not both"));
            }
            let pairs: Vec<(f64, f64)> = agents.iter().map(|a| (a.sigma, a.phi)).collect();
            let groups: Vec<usize> = agents.iter().map(|a| a.group).collect();
            Population::from_parts(&pairs, &groups)?
        } else {
            let sigma = p.sigma.clone().unwrap_or(DistributionSpec::IidUniformOpenUnit);
            let phi = p.phi.clone().unwrap_or(DistributionSpec::IidUniformOpenUnit);
            match (&p.group_sizes, p.n) {
                (Some(sizes), None) => generate_population_with_sizes(sizes, &sigma, &phi, self.seed)?,
                (None, Some(n)) => generate_population(n, p.k_groups.unwrap_or(1), &sigma, &phi, self.seed)?,
                (Some(_), Some(_)) => {
                    return Err(CliError::invalid("population: give `n` or `group_sizes`, not both"))
                }
                (None, None) => return Err(CliError::invalid("population: needs `agents`, `n` or `group_sizes`")),
            }
        };
        if let Some(size) = p.scapegoat_size {
            pop.add_scapegoat(size)?;
        }
        Ok(pop)
    }

    pub fn build_matrix(&self, population: &Population) -> CliResult<CredibilityMatrix> {
        let generator = self.matrix.clone().unwrap_or(MatrixGenerator::EqualWeights);
        match &generator {
            // validation below reports every bad row rather than the first
            MatrixGenerator::Explicit { rows } => {
                if rows.len() != population.len() {
                    return Err(CliError::invalid(format!(
                        "matrix has {} rows for {} agents",
                        rows.len(),
                        population.len()
                    )));
                }
                Ok(CredibilityMatrix::from_rows(rows, population.member_indices())?)
            }
            _ => Ok(build_credibility_matrix(population, &generator, self.seed)?),
        }
    }

    /// Population, matrix and parameters, checked against every invariant.
    pub fn build_scenario(&self) -> CliResult<Scenario> {
        let population = self.build_population()?;
        let matrix = self.build_matrix(&population)?;
        let scenario = Scenario {
            population,
            params: ModelParams { chi: self.x, comm_cost: self.comm_cost },
            matrix,
            regime: self.regime,
            horizon: self.horizon.unwrap_or(0),
            comm_tolerance: self.comm_tolerance,
            seed: self.seed,
        };
        let report = validate_scenario(&scenario);
        // commands without a horizon never step
        let messages: Vec<String> = report
            .violations
            .iter()
            .filter(|v| self.horizon.is_some() || v.kind != ViolationKind::Horizon)
            .map(|v| v.message.clone())
            .collect();
        if messages.is_empty() {
            Ok(scenario)
        } else {
            Err(CliError::Validation(messages))
        }
    }
}
