//! One function per subcommand. Each writes its files and a manifest into
//! the output directory and returns a short JSON summary.

use std::path::Path;

use belief_dynamics::analysis::{iterate_meanfield, meanfield_fractions, sampling_probabilities, shannon_entropy};
use belief_dynamics::consensus::stationary_weights;
use belief_dynamics::leader::{
    equal_size_rule, equilibrium_return, optimal_target_set, profiles_from_population, verify_local_optimality,
    TargetSet,
};
use belief_dynamics::model::GroupId;
use belief_dynamics::pwlmap::{analyze_dynamics, build_map, find_fixed_points};
use belief_dynamics::scenario::Regime;
use belief_dynamics::simulate::{run_with, RunOptions};
use belief_dynamics::Execution;
use serde_json::{json, Value};

use crate::artifacts::{fmt_sig, rows_csv, sha256_hex, trajectory_csv, ArtifactWriter, Manifest, TRAJECTORY_FILE};
use crate::config::{Command, Config};
use crate::error::{CliError, CliResult};

pub const MEANFIELD_FILE: &str = "meanfield.csv";
pub const ENTROPY_FILE: &str = "entropy.json";
pub const OPTIMIZER_FILE: &str = "optimizer.json";
pub const MAP_FILE: &str = "map.json";
pub const CELLS_FILE: &str = "cells.csv";

/// Runs `command` on `config`, writing everything under `out`.
pub fn execute(command: Command, config: &Config, out: &Path, command_line: &[String]) -> CliResult<Value> {
    if let Some(declared) = config.command {
        if declared != command {
            return Err(CliError::Parse(format!(
                "field `command`: config declares `{}` but `{}` was requested",
                declared.name(),
                command.name()
            )));
        }
    }
    let mut writer = ArtifactWriter::new(out)?;
    let (summary, deferred) = match command {
        Command::Simulate => (simulate(config, &mut writer)?, None),
        Command::Meanfield => meanfield(config, &mut writer)?,
        Command::Entropy => (entropy(config, &mut writer)?, None),
        Command::LeaderOpt => (leader_opt(config, &mut writer)?, None),
        Command::MapAnalyze => (map_analyze(config, &mut writer)?, None),
        Command::Sweep => sweep(config, &mut writer, command_line)?,
    };
    let config_json = serde_json::to_vec(config).map_err(|e| CliError::Io(e.to_string()))?;
    writer.finish(Manifest {
        tool: "beliefdyn",
        tool_version: env!("CARGO_PKG_VERSION"),
        core_version: belief_dynamics::VERSION,
        command: command.name(),
        command_line,
        seed: config.seed,
        x: config.x,
        config_sha256: sha256_hex(&config_json),
        files: Vec::new(),
        summary: summary.clone(),
    })?;
    // files are on disk even when the run itself reports a failure
    match deferred {
        Some(err) => Err(err),
        None => Ok(summary),
    }
}

fn simulate(config: &Config, writer: &mut ArtifactWriter) -> CliResult<Value> {
    if config.horizon.is_none() {
        return Err(CliError::Parse("missing field `horizon`".into()));
    }
    let scenario = config.build_scenario()?;
    let options = RunOptions {
        stop_early: config.stop_early,
        record_decisions: false,
        execution: Execution::Parallel,
        ..RunOptions::default()
    };
    let trajectory = run_with(&scenario, options)?;
    writer.write(TRAJECTORY_FILE, &trajectory_csv(&trajectory)?)?;
    let last: Vec<String> = trajectory
        .records
        .last()
        .map(|r| r.group_consensus.iter().map(|c| fmt_sig(*c)).collect())
        .unwrap_or_default();
    Ok(json!({
        "periods": trajectory.records.len(),
        "terminal": trajectory.terminal,
        "final_consensus": last,
    }))
}

fn meanfield(config: &Config, writer: &mut ArtifactWriter) -> CliResult<(Value, Option<CliError>)> {
    let mf = config.meanfield.unwrap_or_default();
    let run = iterate_meanfield(mf.c0, config.x, mf.tol, mf.max_iter)?;
    // period k decides against c_k and ends at c_{k+1}, as in a simulated run
    let rows = run
        .trajectory
        .windows(2)
        .enumerate()
        .map(|(k, w)| Ok((k, 0, w[1], meanfield_fractions(w[0], config.x)?)))
        .collect::<CliResult<Vec<_>>>()?;
    writer.write(MEANFIELD_FILE, &rows_csv(rows)?)?;
    let summary = json!({
        "iterations": run.trajectory.len() - 1,
        "limit": run.limit,
    });
    let err = run.limit.is_none().then(|| {
        CliError::Numerical(format!("mean-field iteration did not settle within {} steps", mf.max_iter))
    });
    Ok((summary, err))
}

fn entropy(config: &Config, writer: &mut ArtifactWriter) -> CliResult<Value> {
    let spec = config
        .entropy
        .as_ref()
        .ok_or_else(|| CliError::Parse("missing field `entropy`".into()))?;
    let (source, p) = match (&spec.p, spec.c) {
        (Some(p), None) => ("explicit", p.clone()),
        (None, Some(c)) => {
            let pop = config.build_population()?;
            let targeted: Vec<_> = pop
                .agents
                .iter()
                .filter(|a| !pop.groups[a.group.0].is_scapegoat)
                .copied()
                .collect();
            ("sampling-probabilities", sampling_probabilities(&targeted, c, config.x)?)
        }
        _ => return Err(CliError::invalid("entropy: give exactly one of `p` and `c`")),
    };
    let h = shannon_entropy(&p)?;
    let max = (p.len() as f64).ln();
    let report = json!({
        "source": source,
        "probabilities": p,
        "entropy": h,
        "max_entropy": max,
    });
    writer.write_json(ENTROPY_FILE, &report)?;
    Ok(json!({ "entropy": h, "max_entropy": max }))
}

fn leader_opt(config: &Config, writer: &mut ArtifactWriter) -> CliResult<Value> {
    let spec = config
        .leader
        .clone()
        .ok_or_else(|| CliError::Parse("missing field `leader`".into()))?;
    let params = config.params()?;
    let profiles = match spec.groups {
        Some(groups) => groups,
        None => profiles_from_population(&config.build_population()?),
    };
    let k_total = spec.k_total.unwrap_or_else(|| profiles.iter().map(|p| p.size).sum());
    let optimum = optimal_target_set(&profiles, k_total, &params, spec.method, Execution::Parallel)?;
    // the marginal conditions are stated without communication cost
    let local = (params.comm_cost == 0.0).then(|| {
        std::iter::once(&optimum.best)
            .chain(&optimum.alternates)
            .map(|t| verify_local_optimality(t, &profiles, k_total))
            .collect::<Vec<_>>()
    });
    let rule: Vec<GroupId> = equal_size_rule(&profiles, k_total);
    let rule_set = TargetSet::from_ids(&rule, &profiles)?;
    let rule_return = equilibrium_return(&rule_set, &profiles, k_total, &params)?;
    let rule_is_optimal = std::iter::once(&optimum.best).chain(&optimum.alternates).any(|t| *t == rule_set);
    let report = json!({
        "method": spec.method,
        "k_total": k_total,
        "comm_cost": params.comm_cost,
        "profiles": profiles,
        "best": optimum.best,
        "value": optimum.value,
        "alternates": optimum.alternates,
        "local_optimality": local,
        "equal_size_rule": {
            "targets": rule,
            "return": rule_return,
            "matches_optimum": rule_is_optimal,
        },
    });
    writer.write_json(OPTIMIZER_FILE, &report)?;
    Ok(json!({
        "value": optimum.value,
        "targets": optimum.best.groups,
        "ties": optimum.alternates.len(),
    }))
}

fn map_analyze(config: &Config, writer: &mut ArtifactWriter) -> CliResult<Value> {
    if config.regime != Regime::Diverse {
        return Err(CliError::invalid("map-analyze needs the diverse regime"));
    }
    let scenario = config.build_scenario()?;
    let spec = config.map.unwrap_or_default();
    let weights = stationary_weights(&scenario.matrix)?;
    let pop = &scenario.population;
    let mut groups = Vec::new();
    let mut summary = Vec::new();
    for (g, group) in pop.groups.iter().enumerate() {
        if group.is_scapegoat {
            continue;
        }
        let members = &weights.groups[g];
        let agents: Vec<_> = members.iter().map(|&a| pop.agents[a]).collect();
        let w: Vec<f64> = members.iter().map(|&a| weights.weights[a]).collect();
        let map = build_map(&agents, &w, config.x)?;
        let fixed_points = find_fixed_points(&map);
        let dynamics = analyze_dynamics(&map, spec.c0, spec.max_iter, spec.tol)?;
        summary.push(json!({ "group_id": g, "outcome": dynamics.outcome }));
        groups.push(json!({
            "group_id": g,
            "map": map,
            "fixed_points": fixed_points,
            "dynamics": dynamics,
        }));
    }
    writer.write_json(MAP_FILE, &json!({ "x": config.x, "c0": spec.c0, "groups": groups }))?;
    Ok(json!({ "groups": summary }))
}

struct Cell {
    index: usize,
    x: f64,
    n: Option<usize>,
    seed: u64,
}

fn sweep(config: &Config, writer: &mut ArtifactWriter, command_line: &[String]) -> CliResult<(Value, Option<CliError>)> {
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Parse("missing field `sweep`".into()))?;
    if spec.command == Command::Sweep {
        return Err(CliError::invalid("sweep cells cannot themselves sweep"));
    }
    if spec.replicates == 0 {
        return Err(CliError::invalid("sweep.replicates must be at least 1"));
    }
    let xs = spec.x.clone().unwrap_or_else(|| vec![config.x]);
    let ns: Vec<Option<usize>> = match &spec.n {
        Some(ns) => ns.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut cells = Vec::new();
    for &x in &xs {
        for &n in &ns {
            for _ in 0..spec.replicates {
                let index = cells.len();
                cells.push(Cell { index, x, n, seed: config.seed.wrapping_add(index as u64) });
            }
        }
    }
    let base = writer.dir().to_path_buf();
    let results = Execution::Parallel.map_range(cells.len(), |i| {
        let cell = &cells[i];
        let mut cfg = config.clone();
        cfg.command = None;
        cfg.sweep = None;
        cfg.x = cell.x;
        cfg.seed = cell.seed;
        if let Some(n) = cell.n {
            let pop = cfg.population.get_or_insert_with(Default::default);
            pop.n = Some(n);
        }
        execute(spec.command, &cfg, &base.join(cell_dir(cell.index)), command_line)
    });

    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["cell", "x", "n", "seed", "dir", "status"]).map_err(io)?;
    let mut failures = Vec::new();
    for (cell, result) in cells.iter().zip(&results) {
        let status = match result {
            Ok(_) => "ok".to_string(),
            Err(e) => {
                failures.push(format!("{}: {e}", cell_dir(cell.index)));
                format!("exit-{}", e.exit_code())
            }
        };
        w.write_record([
            cell.index.to_string(),
            fmt_sig(cell.x),
            cell.n.map(|n| n.to_string()).unwrap_or_default(),
            cell.seed.to_string(),
            cell_dir(cell.index),
            status,
        ])
        .map_err(io)?;
    }
    writer.write(CELLS_FILE, &w.into_inner().map_err(|e| CliError::Io(e.to_string()))?)?;
    let summary = json!({ "cells": cells.len(), "failed": failures });
    let first = results.into_iter().find_map(|r| r.err());
    let err = match first {
        // a bad grid fails in every cell; report it once with its own code
        Some(e) if failures.len() == cells.len() => Some(e),
        Some(_) => Some(CliError::Numerical(format!("{} of {} sweep cells failed", failures.len(), cells.len()))),
        None => None,
    };
    Ok((summary, err))
}

pub fn cell_dir(index: usize) -> String {
    format!("cell-{index:04}")
}
