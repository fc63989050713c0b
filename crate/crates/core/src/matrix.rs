//! Row-stochastic credibility matrices, stored per social group.

use std::borrow::Cow;
use std::collections::VecDeque;

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{GroupId, Population};
use crate::scenario::{Violation, ViolationKind};

pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SELF_WEIGHT_FLOOR: f64 = 0.05;

/// The in-group block of the credibility matrix, indexed by position in the
/// group's member list.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockWeights {
    /// Row-major `m x m`.
    Dense { m: usize, data: Vec<f64> },
    /// Every entry equal to `1/m`. Kept implicit so very large groups stay cheap.
    Uniform { m: usize },
}

impl BlockWeights {
    pub fn size(&self) -> usize {
        match self {
            BlockWeights::Dense { m, .. } | BlockWeights::Uniform { m } => *m,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            BlockWeights::Dense { m, data } => data[i * m + j],
            BlockWeights::Uniform { m } => 1.0 / *m as f64,
        }
    }

    /// `v * B` (row vector on the left).
    pub fn left_product(&self, v: &[f64]) -> Vec<f64> {
        match self {
            BlockWeights::Dense { m, data } => {
                let mut out = vec![0.0; *m];
                for (i, &vi) in v.iter().enumerate() {
                    if vi == 0.0 {
                        continue;
                    }
                    let row = &data[i * m..(i + 1) * m];
                    for (o, &b) in out.iter_mut().zip(row) {
                        *o += vi * b;
                    }
                }
                out
            }
            BlockWeights::Uniform { m } => vec![v.iter().sum::<f64>() / *m as f64; *m],
        }
    }

    /// `B * v` (each agent averages its neighbours with its own row weights).
    pub fn right_product(&self, v: &[f64]) -> Vec<f64> {
        match self {
            BlockWeights::Dense { m, data } => data
                .chunks_exact(*m)
                .map(|row| row.iter().zip(v).map(|(b, x)| b * x).sum())
                .collect(),
            BlockWeights::Uniform { m } => vec![v.iter().sum::<f64>() / *m as f64; *m],
        }
    }

    fn violations(&self, group: GroupId, members: &[usize], row_sums: bool, out: &mut Vec<Violation>) {
        let BlockWeights::Dense { m, data } = self else {
            return;
        };
        let m = *m;
        for i in 0..m {
            let row = &data[i * m..(i + 1) * m];
            let agent = members[i];
            if let Some(j) = row.iter().position(|w| !w.is_finite() || *w < 0.0) {
                out.push(Violation::new(
                    ViolationKind::NegativeEntry,
                    format!("row {agent}: entry for agent {} is {}", members[j], row[j]),
                ));
            }
            let s: f64 = row.iter().sum();
            if row_sums && (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                out.push(Violation::new(
                    ViolationKind::RowNotStochastic,
                    format!("row {agent}: row not stochastic (sums to {s})"),
                ));
            }
            if !(row[i] > 0.0) {
                out.push(Violation::new(
                    ViolationKind::ZeroDiagonal,
                    format!("row {agent}: self-weight must be positive"),
                ));
            }
        }
        if m > 1 && !strongly_connected(m, |i, j| data[i * m + j] > 0.0) {
            out.push(Violation::new(
                ViolationKind::NotStronglyConnected,
                format!("{group}: block is not strongly connected"),
            ));
        }
    }
}

/// Reachability from node 0 along `edge` and along its reverse.
fn strongly_connected(m: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    #[allow(clippy::needless_range_loop)]
    let reach_all = |forward: bool| {
        let mut seen = vec![false; m];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..m {
                let e = if forward { edge(u, v) } else { edge(v, u) };
                if e && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reach_all(true) && reach_all(false)
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Full `n x n` row-major matrix, possibly violating the block structure.
    Full(Vec<f64>),
    Blocks(Vec<BlockWeights>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredibilityMatrix {
    n: usize,
    groups: Vec<Vec<usize>>,
    repr: Repr,
}

impl CredibilityMatrix {
    /// Wraps a full matrix. Only the shape is checked here; see [`Self::violations`].
    pub fn from_rows(rows: &[Vec<f64>], groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(invalid(format!("matrix row {i} has {} entries, expected {n}", r.len())));
        }
        check_partition(n, &groups)?;
        Ok(CredibilityMatrix { n, groups, repr: Repr::Full(rows.concat()) })
    }

    pub fn from_blocks(groups: Vec<Vec<usize>>, blocks: Vec<BlockWeights>) -> Result<Self> {
        if groups.len() != blocks.len() {
            return Err(invalid("one block per group is required"));
        }
        for (g, (members, b)) in groups.iter().zip(&blocks).enumerate() {
            if members.len() != b.size() {
                return Err(invalid(format!("block {g} has size {}, group has {}", b.size(), members.len())));
            }
            if let BlockWeights::Dense { m, data } = b {
                if data.len() != m * m {
                    return Err(invalid(format!("block {g} data has wrong length")));
                }
            }
        }
        let n = groups.iter().map(Vec::len).sum();
        check_partition(n, &groups)?;
        Ok(CredibilityMatrix { n, groups, repr: Repr::Blocks(blocks) })
    }

    pub fn equal_weights(groups: Vec<Vec<usize>>) -> Result<Self> {
        let blocks = groups.iter().map(|g| BlockWeights::Uniform { m: g.len() }).collect();
        CredibilityMatrix::from_blocks(groups, blocks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Full(data) => data[i * self.n + j],
            Repr::Blocks(blocks) => {
                for (members, b) in self.groups.iter().zip(blocks) {
                    if let (Some(li), Some(lj)) = (
                        members.iter().position(|&a| a == i),
                        members.iter().position(|&a| a == j),
                    ) {
                        return b.entry(li, lj);
                    }
                }
                0.0
            }
        }
    }

    /// The in-group block for group index `g`.
    pub fn block(&self, g: usize) -> Cow<'_, BlockWeights> {
        match &self.repr {
            Repr::Blocks(blocks) => Cow::Borrowed(&blocks[g]),
            Repr::Full(data) => {
                let members = &self.groups[g];
                let m = members.len();
                let mut sub = Vec::with_capacity(m * m);
                for &i in members {
                    sub.extend(members.iter().map(|&j| data[i * self.n + j]));
                }
                Cow::Owned(BlockWeights::Dense { m, data: sub })
            }
        }
    }

    /// Every broken matrix invariant, naming the row or block concerned.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Repr::Full(data) = &self.repr {
            let mut group_of = vec![0usize; self.n];
            for (g, members) in self.groups.iter().enumerate() {
                for &a in members {
                    group_of[a] = g;
                }
            }
            for i in 0..self.n {
                for j in 0..self.n {
                    if group_of[i] != group_of[j] && data[i * self.n + j] != 0.0 {
                        out.push(Violation::new(
                            ViolationKind::CrossGroupCredibility,
                            format!("row {i}: cross-group credibility to agent {j}"),
                        ));
                    }
                }
            }
            for i in 0..self.n {
                let s: f64 = data[i * self.n..(i + 1) * self.n].iter().sum();
                if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                    out.push(Violation::new(
                        ViolationKind::RowNotStochastic,
                        format!("row {i}: row not stochastic (sums to {s})"),
                    ));
                }
            }
        }
        // full rows are summed above, including any cross-group mass
        let block_row_sums = matches!(self.repr, Repr::Blocks(_));
        for (g, members) in self.groups.iter().enumerate() {
            self.block(g).violations(GroupId(g), members, block_row_sums, &mut out);
        }
        out
    }
}

fn check_partition(n: usize, groups: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; n];
    for members in groups {
        if members.is_empty() {
            return Err(invalid("empty group in matrix partition"));
        }
        for &a in members {
            if a >= n || std::mem::replace(&mut seen[a], true) {
                return Err(invalid(format!("agent {a} is out of range or in two groups")));
            }
        }
    }
    if let Some(a) = seen.iter().position(|s| !s) {
        return Err(invalid(format!("agent {a} belongs to no group")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixGenerator {
    Explicit { rows: Vec<Vec<f64>> },
    EqualWeights,
    RandomRowStochastic {
        #[serde(default = "default_floor")]
        self_floor: f64,
    },
}

fn default_floor() -> f64 {
    DEFAULT_SELF_WEIGHT_FLOOR
}

pub fn build_credibility_matrix(
    population: &Population,
    generator: &MatrixGenerator,
    seed: u64,
) -> Result<CredibilityMatrix> {
    let groups = population.member_indices();
    match generator {
        MatrixGenerator::Explicit { rows } => {
            if rows.len() != population.len() {
                return Err(invalid(format!(
                    "matrix has {} rows for {} agents",
                    rows.len(),
                    population.len()
                )));
            }
            let m = CredibilityMatrix::from_rows(rows, groups)?;
            let v = m.violations();
            if !v.is_empty() {
                let msgs: Vec<String> = v.iter().map(|v| v.message.clone()).collect();
                return Err(invalid(msgs.join("; ")));
            }
            Ok(m)
        }
        MatrixGenerator::EqualWeights => CredibilityMatrix::equal_weights(groups),
        MatrixGenerator::RandomRowStochastic { self_floor } => {
            if !(*self_floor > 0.0 && *self_floor <= 1.0) {
                return Err(invalid(format!("self-weight floor {self_floor} outside (0, 1]")));
            }
            // streams 0 and 1 draw the population from the same seed
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2);
            let blocks = groups
                .iter()
                .map(|members| random_block(members.len(), *self_floor, &mut rng))
                .collect();
            CredibilityMatrix::from_blocks(groups, blocks)
        }
    }
}

fn random_block(m: usize, floor: f64, rng: &mut ChaCha8Rng) -> BlockWeights {
    let mut data = Vec::with_capacity(m * m);
    for i in 0..m {
        let mut row: Vec<f64> = (0..m).map(|_| Open01.sample(rng)).collect();
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|w| *w /= total);
        if row[i] < floor {
            let off: f64 = row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, w)| w).sum();
            let scale = (1.0 - floor) / off;
            for (j, w) in row.iter_mut().enumerate() {
                *w = if j == i { floor } else { *w * scale };
            }
        }
        data.extend(row);
    }
    BlockWeights::Dense { m, data }
}
