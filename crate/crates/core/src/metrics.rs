//! Fitness, oracle regret, network statistics and Monte Carlo aggregation.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, SocialGraph};
use crate::learner::{ActionKind, SocialAction};
use crate::policies::ActionSet;
use crate::reward::{RewardError, RewardModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("confidence interval needs at least 2 trials, got {0}")]
    TooFewTrials(usize),
    #[error("series lengths differ: expected {expected}, found {found}")]
    RaggedSeries { expected: usize, found: usize },
    #[error(transparent)]
    Reward(#[from] RewardError),
}

/// What an agent did in a step, for costing purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    Explore,
    Exploit,
    Idle,
}

impl ActionClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionClass::Explore => "explore",
            ActionClass::Exploit => "exploit",
            ActionClass::Idle => "idle",
        }
    }
}

impl From<ActionKind> for ActionClass {
    fn from(kind: ActionKind) -> Self {
        match kind {
            ActionKind::Explore => ActionClass::Explore,
            ActionKind::Exploit => ActionClass::Exploit,
        }
    }
}

/// Weights of the composite fitness `w_reward·r − w_cost·C(kind)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessParams {
    pub w_reward: f64,
    pub w_cost: f64,
    pub cost_explore: f64,
    pub cost_exploit: f64,
    pub cost_idle: f64,
}

impl Default for FitnessParams {
    fn default() -> Self {
        Self {
            w_reward: 1.0,
            w_cost: 1.0,
            cost_explore: 0.10,
            cost_exploit: 0.02,
            cost_idle: 0.0,
        }
    }
}

impl FitnessParams {
    pub fn cost(&self, class: ActionClass) -> f64 {
        match class {
            ActionClass::Explore => self.cost_explore,
            ActionClass::Exploit => self.cost_exploit,
            ActionClass::Idle => self.cost_idle,
        }
    }
}

pub fn fitness(reward: f64, class: ActionClass, params: &FitnessParams) -> f64 {
    params.w_reward * reward - params.w_cost * params.cost(class)
}

/// Additive structural term on top of [`fitness`]. The simulator ships only
/// [`NoBonus`]; centrality- or community-based terms plug in here.
pub trait TopologyBonus: Send + Sync {
    fn bonus(&self, graph: &SocialGraph, agent: NodeId) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoBonus;

impl TopologyBonus for NoBonus {
    fn bonus(&self, _graph: &SocialGraph, _agent: NodeId) -> f64 {
        0.0
    }
}

/// Regret is measured in fitness units or, for ablations, raw expected reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretUnits {
    Fitness,
    Reward,
}

fn expected_value(
    model: &RewardModel,
    i: NodeId,
    action: Option<&SocialAction>,
    params: &FitnessParams,
    units: RegretUnits,
) -> Result<f64, RewardError> {
    let (mu, class) = match action {
        Some(a) => (model.true_mean(i, a.target)?, ActionClass::from(a.kind)),
        None => (0.0, ActionClass::Idle),
    };
    Ok(match units {
        RegretUnits::Fitness => fitness(mu, class, params),
        RegretUnits::Reward => mu,
    })
}

/// Expected-value shortfall of `chosen` (`None` = idle) against the best
/// action in the set the agent actually faced, floored at 0.
pub fn step_regret(
    model: &RewardModel,
    i: NodeId,
    chosen: Option<&SocialAction>,
    actions: &ActionSet,
    params: &FitnessParams,
    units: RegretUnits,
) -> Result<f64, MetricsError> {
    if actions.is_empty() {
        return Ok(0.0);
    }
    let mut best = f64::NEG_INFINITY;
    for a in actions.iter() {
        best = best.max(expected_value(model, i, Some(a), params, units)?);
    }
    let got = expected_value(model, i, chosen, params, units)?;
    Ok((best - got).max(0.0))
}

/// Per-step regret log with its running total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    per_step: Vec<f64>,
    cumulative: f64,
}

impl RegretLedger {
    pub fn record(&mut self, regret: f64) -> f64 {
        debug_assert!(regret >= 0.0);
        let regret = regret.max(0.0);
        self.per_step.push(regret);
        self.cumulative += regret;
        self.cumulative
    }

    pub fn per_step(&self) -> &[f64] {
        &self.per_step
    }

    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub avg_degree: f64,
    pub avg_clustering: f64,
    pub largest_component: usize,
    pub edge_count: usize,
}

/// Unweighted structural statistics: mean degree, mean local clustering
/// (nodes of degree < 2 count as 0) and the largest connected component,
/// where isolated nodes are components of size 1.
pub fn network_stats(graph: &SocialGraph) -> NetworkStats {
    let n = graph.node_count();
    let edge_count = graph.edge_count();

    let mut clustering_sum = 0.0;
    let mut mark = vec![false; n];
    for v in 0..n {
        let nbrs: Vec<NodeId> = graph.neighbor_ids(v).collect();
        let k = nbrs.len();
        if k < 2 {
            continue;
        }
        for &x in &nbrs {
            mark[x] = true;
        }
        // each link among neighbors is seen from both ends
        let twice: usize = nbrs.iter().map(|&x| graph.neighbor_ids(x).filter(|&y| mark[y]).count()).sum();
        for &x in &nbrs {
            mark[x] = false;
        }
        clustering_sum += (twice / 2) as f64 / (k * (k - 1) / 2) as f64;
    }

    let mut seen = vec![false; n];
    let mut largest = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for w in graph.neighbor_ids(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        largest = largest.max(size);
    }

    NetworkStats {
        avg_degree: 2.0 * edge_count as f64 / n as f64,
        avg_clustering: clustering_sum / n as f64,
        largest_component: largest,
        edge_count,
    }
}

/// Pointwise mean and normal-approximation 95% half-width over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    pub half_width: Vec<f64>,
}

pub const Z_95: f64 = 1.96;

/// Mean and `1.96·sd/√K` (sample sd) at every index of `K >= 2` equal-length series.
pub fn aggregate_trials(series: &[Vec<f64>]) -> Result<Aggregate, MetricsError> {
    let k = series.len();
    if k < 2 {
        return Err(MetricsError::TooFewTrials(k));
    }
    let len = series[0].len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(MetricsError::RaggedSeries { expected: len, found: bad.len() });
    }
    let mut mean = vec![0.0; len];
    let mut half_width = vec![0.0; len];
    for t in 0..len {
        let m = series.iter().map(|s| s[t]).sum::<f64>() / k as f64;
        let var = series.iter().map(|s| (s[t] - m).powi(2)).sum::<f64>() / (k - 1) as f64;
        mean[t] = m;
        half_width[t] = Z_95 * var.sqrt() / (k as f64).sqrt();
    }
    Ok(Aggregate { mean, half_width })
}

/// Mean and 95% half-width of a single sample; the half-width is `None`
/// when fewer than two values are given.
pub fn mean_ci(values: &[f64]) -> (f64, Option<f64>) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, None);
    }
    let series: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    match aggregate_trials(&series) {
        Ok(agg) => (agg.mean[0], Some(agg.half_width[0])),
        Err(_) => (values[0], None),
    }
}
