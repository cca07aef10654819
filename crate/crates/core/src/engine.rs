//! Simulation loop, single trials and Monte Carlo experiments.
//!
//! Within a step agents act one at a time, in a fresh random order, on the
//! live graph; each agent's choice, reward, tie update and learning update
//! happen together. Passive tie decay runs once after everyone has acted.
//! Every random draw comes from a named per-trial stream (see [`crate::rng`]),
//! so a `(config, master_seed)` pair fully determines a run.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, SimConfig};
use crate::graph::{GraphError, NodeId, SocialGraph};
use crate::io::{self, CsvWriter, Curves, IoError, OutputFile, RunManifest, SummaryRow};
use crate::learner::{AgentLearner, AgentState, LearnerError, SocialAction, LEARNER_DUMP_HEADER};
use crate::metrics::{
    aggregate_trials, fitness, mean_ci, network_stats, step_regret, ActionClass, FitnessParams, MetricsError,
    NetworkStats, NoBonus, TopologyBonus,
};
use crate::policies::{
    enumerate_actions, select_exploit_only, select_mab_only, select_random_walk, select_social_ucb, ActionSet,
    FrozenArms, PolicyKind,
};
use crate::reward::{RewardError, RewardModel};
use crate::rng::{stream_rng, SimRng, Stream};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// One agent's step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub step: u64,
    pub agent: NodeId,
    pub kind: ActionClass,
    /// `None` when idle.
    pub target: Option<NodeId>,
    pub reward: f64,
    pub fitness: f64,
    pub cum_fitness: f64,
    pub step_regret: f64,
    pub cum_regret: f64,
}

struct Streams {
    policy: SimRng,
    rewards: SimRng,
    decay: SimRng,
    permutation: SimRng,
}

/// Mutable state of one trial.
pub struct World {
    pub graph: SocialGraph,
    pub rewards: RewardModel,
    pub learners: Vec<AgentLearner>,
    pub cum_fitness: Vec<f64>,
    pub cum_regret: Vec<f64>,
    frozen_arms: Vec<Option<FrozenArms>>,
    config: SimConfig,
    fitness: FitnessParams,
    bonus: Arc<dyn TopologyBonus>,
    trial: usize,
    streams: Streams,
}

impl World {
    /// Initial graph, reward model and learners for trial `trial`.
    pub fn new(config: &SimConfig, trial: usize) -> Result<Self, EngineError> {
        config.validate()?;
        let seed = config.master_seed;
        let t = trial as u64;
        let graph = SocialGraph::init_random_sparse(
            config.n_agents,
            config.density,
            config.edge_params(),
            &mut stream_rng(seed, t, Stream::Graph),
        )?;
        let mut reward_rng = stream_rng(seed, t, Stream::Rewards);
        let rewards = RewardModel::init(config.n_agents, config.reward_shape(), &mut reward_rng)?;
        Self::from_parts(config, trial, graph, rewards, reward_rng)
    }

    /// A world over a given graph and reward model; used for fixtures.
    pub fn with_environment(
        config: &SimConfig,
        trial: usize,
        graph: SocialGraph,
        rewards: RewardModel,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let reward_rng = stream_rng(config.master_seed, trial as u64, Stream::Rewards);
        Self::from_parts(config, trial, graph, rewards, reward_rng)
    }

    fn from_parts(
        config: &SimConfig,
        trial: usize,
        graph: SocialGraph,
        rewards: RewardModel,
        reward_rng: SimRng,
    ) -> Result<Self, EngineError> {
        let n = config.n_agents;
        let seed = config.master_seed;
        let t = trial as u64;
        let params = config.learner_params();
        Ok(Self {
            graph,
            rewards,
            learners: (0..n).map(|i| AgentLearner::new(i, params)).collect(),
            cum_fitness: vec![0.0; n],
            cum_regret: vec![0.0; n],
            frozen_arms: vec![None; n],
            config: config.clone(),
            fitness: config.fitness_params(),
            bonus: Arc::new(NoBonus),
            trial,
            streams: Streams {
                policy: stream_rng(seed, t, Stream::Policy),
                rewards: reward_rng,
                decay: stream_rng(seed, t, Stream::Decay),
                permutation: stream_rng(seed, t, Stream::Permutation),
            },
        })
    }

    /// Adds a structural term to every fitness evaluation.
    pub fn with_bonus(mut self, bonus: Arc<dyn TopologyBonus>) -> Self {
        self.bonus = bonus;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn frozen_arms(&self, agent: NodeId) -> Option<&FrozenArms> {
        self.frozen_arms[agent].as_ref()
    }

    fn act(&mut self, i: NodeId, t: u64) -> Result<TrialRecord, EngineError> {
        let cap = self.config.candidate_cap;
        let policy = self.config.policy;
        let ties = self.graph.neighbors(i)?;
        let state = AgentState::from_ties(&ties);

        let (actions, choice): (ActionSet, Option<SocialAction>) = match policy {
            PolicyKind::SocialUcb => {
                let actions = enumerate_actions(&self.graph, i, cap, &mut self.streams.policy);
                let choice = select_social_ucb(&self.learners[i], state, &actions, t, &mut self.streams.policy)
                    .map(|(a, _)| a);
                (actions, choice)
            }
            PolicyKind::RandomWalk => {
                let actions = enumerate_actions(&self.graph, i, cap, &mut self.streams.policy);
                let choice = select_random_walk(&actions, &mut self.streams.policy);
                (actions, choice)
            }
            PolicyKind::ExploitOnly => {
                let actions = enumerate_actions(&self.graph, i, cap, &mut self.streams.policy);
                let choice = select_exploit_only(
                    &self.learners[i],
                    &actions,
                    self.config.warmup,
                    t,
                    &mut self.streams.policy,
                );
                (actions, choice)
            }
            PolicyKind::MabOnly => {
                if self.frozen_arms[i].is_none() {
                    let initial = enumerate_actions(&self.graph, i, cap, &mut self.streams.policy);
                    self.frozen_arms[i] = Some(FrozenArms::from_actions(&initial));
                }
                let arms = self.frozen_arms[i].as_ref().expect("arms frozen above");
                let actions = arms.as_action_set(&self.graph, i);
                let choice = select_mab_only(&self.learners[i], arms, t).map(|j| {
                    if self.graph.has_edge(i, j) {
                        SocialAction::exploit(j)
                    } else {
                        SocialAction::explore(j)
                    }
                });
                (actions, choice)
            }
        };

        let (class, reward) = match &choice {
            Some(a) => {
                let r = self.rewards.sample_reward(i, a.target, &mut self.streams.rewards)?;
                self.graph.reinforce_or_create(i, a.target, r, t)?;
                (ActionClass::from(a.kind), r)
            }
            None => (ActionClass::Idle, 0.0),
        };
        let fit = fitness(reward, class, &self.fitness) + self.bonus.bonus(&self.graph, i);

        if let Some(a) = &choice {
            let learner = &mut self.learners[i];
            match policy {
                PolicyKind::SocialUcb => {
                    learner.update_mean(a.target, reward);
                    let next_ties = self.graph.neighbors(i)?;
                    let next_state = AgentState::from_ties(&next_ties);
                    let mut next_actions: Vec<SocialAction> =
                        next_ties.iter().map(|&(j, _)| SocialAction::exploit(j)).collect();
                    // The explore column is shared, so any stranger stands in for all.
                    if let Some(k) = (0..self.graph.node_count()).find(|&k| k != i && !self.graph.has_edge(i, k)) {
                        next_actions.push(SocialAction::explore(k));
                    }
                    let td_reward = if self.config.fitness_as_reward { fit } else { reward };
                    learner.td_update(state, a, td_reward, next_state, &next_actions)?;
                    learner.enforce_memory(&next_ties);
                }
                PolicyKind::ExploitOnly | PolicyKind::MabOnly => {
                    learner.update_mean(a.target, reward);
                }
                PolicyKind::RandomWalk => {}
            }
        }

        let regret = step_regret(&self.rewards, i, choice.as_ref(), &actions, &self.fitness, self.config.regret_units)?;
        self.cum_fitness[i] += fit;
        self.cum_regret[i] += regret;
        Ok(TrialRecord {
            trial: self.trial,
            step: t,
            agent: i,
            kind: class,
            target: choice.map(|a| a.target),
            reward,
            fitness: fit,
            cum_fitness: self.cum_fitness[i],
            step_regret: regret,
            cum_regret: self.cum_regret[i],
        })
    }
}

/// Advances the world by step `t >= 1`; returns one record per agent,
/// ordered by agent id.
pub fn run_step(world: &mut World, t: u64) -> Result<Vec<TrialRecord>, EngineError> {
    let n = world.graph.node_count();
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut world.streams.permutation);
    let mut rows: Vec<Option<TrialRecord>> = vec![None; n];
    for i in order {
        rows[i] = Some(world.act(i, t)?);
    }
    world
        .graph
        .decay_step(world.config.p_frag, world.config.decay_factor, t, &mut world.streams.decay)?;
    Ok(rows.into_iter().map(|r| r.expect("every agent acts once")).collect())
}

/// Per-step population means of one trial, index `t - 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialCurves {
    pub mean_cum_fitness: Vec<f64>,
    pub mean_cum_regret: Vec<f64>,
    pub mean_reward: Vec<f64>,
}

pub struct TrialOutput {
    pub trial: usize,
    pub records: Vec<TrialRecord>,
    pub curves: TrialCurves,
    /// Stats at t = 0, every `stats_interval` steps, and at T.
    pub network: Vec<(u64, NetworkStats)>,
    pub snapshots: Vec<(u64, SocialGraph)>,
    pub final_graph: SocialGraph,
    pub rewards: RewardModel,
    pub learners: Vec<AgentLearner>,
}

impl TrialOutput {
    /// Population-mean cumulative fitness at the horizon.
    pub fn final_fitness(&self) -> f64 {
        self.curves.mean_cum_fitness.last().copied().unwrap_or(0.0)
    }

    pub fn final_regret(&self) -> f64 {
        self.curves.mean_cum_regret.last().copied().unwrap_or(0.0)
    }

    pub fn stats_at(&self, step: u64) -> Option<&NetworkStats> {
        self.network.iter().find(|(s, _)| *s == step).map(|(_, st)| st)
    }
}

/// Runs one complete trial with streams derived from `(master_seed, trial)`.
pub fn run_trial(config: &SimConfig, trial: usize) -> Result<TrialOutput, EngineError> {
    let mut world = World::new(config, trial)?;
    let n = config.n_agents as f64;
    let horizon = config.horizon;
    let snapshot_steps = config.snapshot_steps();

    let mut records = Vec::with_capacity(config.n_agents * horizon as usize);
    let mut curves = TrialCurves::default();
    let mut network = vec![(0, network_stats(&world.graph))];
    let mut snapshots = Vec::new();
    if snapshot_steps.contains(&0) {
        snapshots.push((0, world.graph.clone()));
    }

    for t in 1..=horizon {
        let rows = run_step(&mut world, t)?;
        curves.mean_cum_fitness.push(rows.iter().map(|r| r.cum_fitness).sum::<f64>() / n);
        curves.mean_cum_regret.push(rows.iter().map(|r| r.cum_regret).sum::<f64>() / n);
        curves.mean_reward.push(rows.iter().map(|r| r.reward).sum::<f64>() / n);
        records.extend(rows);
        if t % config.stats_interval == 0 || t == horizon {
            network.push((t, network_stats(&world.graph)));
        }
        if snapshot_steps.contains(&t) {
            snapshots.push((t, world.graph.clone()));
        }
    }

    Ok(TrialOutput {
        trial,
        records,
        curves,
        network,
        snapshots,
        final_graph: world.graph.clone(),
        rewards: world.rewards,
        learners: world.learners,
    })
}

/// Aggregated results of `K` trials.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: SimConfig,
    pub final_fitness: Vec<f64>,
    pub final_regret: Vec<f64>,
    pub curves: Curves,
    pub network: Vec<Vec<(u64, NetworkStats)>>,
    pub outputs: Vec<OutputFile>,
}

impl ExperimentResult {
    pub fn summary(&self) -> SummaryRow {
        let (mean, ci) = mean_ci(&self.final_fitness);
        let regret = self.final_regret.iter().sum::<f64>() / self.final_regret.len() as f64;
        SummaryRow {
            policy: self.config.policy.to_string(),
            mean_final_cum_fitness: mean,
            ci95: ci,
            mean_final_cum_regret: regret,
        }
    }

    /// Mean over trials of a network statistic at `step`.
    pub fn mean_stat_at(&self, step: u64, stat: impl Fn(&NetworkStats) -> f64) -> Option<f64> {
        let values: Option<Vec<f64>> = self
            .network
            .iter()
            .map(|series| series.iter().find(|(s, _)| *s == step).map(|(_, st)| stat(st)))
            .collect();
        values.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }
}

struct Sinks {
    dir: PathBuf,
    records: CsvWriter,
    network: CsvWriter,
}

fn aggregate(series: Vec<Vec<f64>>) -> Result<(Vec<f64>, Option<Vec<f64>>), MetricsError> {
    if series.len() < 2 {
        return Ok((series.into_iter().next().unwrap_or_default(), None));
    }
    let agg = aggregate_trials(&series)?;
    Ok((agg.mean, Some(agg.half_width)))
}

/// Runs `config.trials` trials and aggregates them. With `out_dir`, also
/// writes `records.csv`, `network.csv`, `curves.csv`, `summary.csv`,
/// `manifest.json`, and trial 0's graph snapshots, true means and learner
/// dump. Trials run in parallel; output is identical to a sequential run.
pub fn run_experiment(config: &SimConfig, out_dir: Option<&Path>) -> Result<ExperimentResult, EngineError> {
    config.validate()?;
    let started = io::unix_now();
    let mut sinks = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| IoError::new(dir, e))?;
            Some(Sinks {
                dir: dir.to_path_buf(),
                records: CsvWriter::create(&dir.join("records.csv"), io::RECORDS_HEADER)?,
                network: CsvWriter::create(&dir.join("network.csv"), io::NETWORK_HEADER)?,
            })
        }
        None => None,
    };
    let mut outputs = Vec::new();

    let mut fitness_series = Vec::with_capacity(config.trials);
    let mut regret_series = Vec::with_capacity(config.trials);
    let mut reward_series = Vec::with_capacity(config.trials);
    let mut network = Vec::with_capacity(config.trials);

    let chunk = rayon::current_num_threads().max(1);
    let indices: Vec<usize> = (0..config.trials).collect();
    for batch in indices.chunks(chunk) {
        let outputs_batch: Vec<TrialOutput> =
            batch.par_iter().map(|&k| run_trial(config, k)).collect::<Result<_, _>>()?;
        for out in outputs_batch {
            if let Some(s) = sinks.as_mut() {
                s.records.records(&out.records)?;
                for (step, stats) in &out.network {
                    s.network.line(&io::network_row(out.trial, *step, stats))?;
                }
                if out.trial == 0 {
                    for (step, g) in &out.snapshots {
                        let name = format!("graph_t{step}.edges");
                        io::write_text(&s.dir.join(&name), &g.to_edge_list())?;
                        outputs.push(OutputFile { file: name, rows: g.edge_count() });
                    }
                    io::write_text(&s.dir.join("true_means.csv"), &out.rewards.means_csv())?;
                    outputs.push(OutputFile { file: "true_means.csv".into(), rows: out.rewards.pair_count() });
                    let mut dump = format!("{LEARNER_DUMP_HEADER}\n");
                    for l in &out.learners {
                        dump.push_str(&l.dump_rows());
                    }
                    let rows = dump.lines().count() - 1;
                    io::write_text(&s.dir.join("learners.csv"), &dump)?;
                    outputs.push(OutputFile { file: "learners.csv".into(), rows });
                }
            }
            network.push(out.network);
            fitness_series.push(out.curves.mean_cum_fitness);
            regret_series.push(out.curves.mean_cum_regret);
            reward_series.push(out.curves.mean_reward);
        }
    }

    let final_fitness: Vec<f64> = fitness_series.iter().map(|s| s.last().copied().unwrap_or(0.0)).collect();
    let final_regret: Vec<f64> = regret_series.iter().map(|s| s.last().copied().unwrap_or(0.0)).collect();
    let (mean_cum_fitness, ci_cum_fitness) = aggregate(fitness_series)?;
    let (mean_cum_regret, ci_cum_regret) = aggregate(regret_series)?;
    let (mean_reward, ci_reward) = aggregate(reward_series)?;
    let curves = Curves { mean_cum_fitness, ci_cum_fitness, mean_cum_regret, ci_cum_regret, mean_reward, ci_reward };

    let mut result = ExperimentResult { config: config.clone(), final_fitness, final_regret, curves, network, outputs };

    if let Some(s) = sinks {
        let dir = s.dir;
        let rows = s.records.finish()?;
        result.outputs.insert(0, OutputFile { file: "records.csv".into(), rows });
        let rows = s.network.finish()?;
        result.outputs.insert(1, OutputFile { file: "network.csv".into(), rows });
        let rows = io::write_curves(&dir.join("curves.csv"), &result.curves)?;
        result.outputs.push(OutputFile { file: "curves.csv".into(), rows });
        let rows = io::write_summary(&dir.join("summary.csv"), &[result.summary()])?;
        result.outputs.push(OutputFile { file: "summary.csv".into(), rows });
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            started_unix: started,
            finished_unix: io::unix_now(),
            config: config.clone(),
            outputs: result.outputs.clone(),
        };
        io::write_manifest(&dir.join("manifest.json"), &manifest)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeParams;
    use crate::reward::RewardShape;

    fn small(policy: PolicyKind) -> SimConfig {
        SimConfig { n_agents: 8, horizon: 30, trials: 2, density: 0.3, policy, ..SimConfig::default() }
    }

    #[test]
    fn complete_pair_never_idles() {
        let cfg = SimConfig { n_agents: 2, horizon: 1, density: 1.0, ..small(PolicyKind::SocialUcb) };
        let mut w = World::new(&cfg, 0).unwrap();
        let rows = run_step(&mut w, 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.kind != ActionClass::Idle));
    }

    #[test]
    fn single_step_rows() {
        let out = run_trial(&SimConfig { horizon: 1, ..small(PolicyKind::RandomWalk) }, 0).unwrap();
        assert_eq!(out.records.len(), 8);
        assert_eq!(out.network.len(), 2);
    }

    #[test]
    fn trial_is_deterministic() {
        for p in PolicyKind::ALL {
            let a = run_trial(&small(p), 1).unwrap();
            let b = run_trial(&small(p), 1).unwrap();
            assert_eq!(a.records, b.records, "{p}");
            assert_eq!(a.final_graph, b.final_graph);
        }
    }

    #[test]
    fn trial_index_changes_reward_model() {
        let cfg = small(PolicyKind::SocialUcb);
        let a = run_trial(&cfg, 0).unwrap();
        let b = run_trial(&cfg, 1).unwrap();
        assert_ne!(a.rewards.means_csv(), b.rewards.means_csv());
    }

    #[test]
    fn cumulative_columns_are_prefix_sums() {
        let out = run_trial(&small(PolicyKind::SocialUcb), 0).unwrap();
        for agent in 0..8 {
            let (mut f, mut r) = (0.0, 0.0);
            for rec in out.records.iter().filter(|x| x.agent == agent) {
                f += rec.fitness;
                r += rec.step_regret;
                assert!((rec.cum_fitness - f).abs() < 1e-9);
                assert!((rec.cum_regret - r).abs() < 1e-9);
                assert!(rec.step_regret >= 0.0);
            }
        }
    }

    #[test]
    fn rows_ordered_by_step_then_agent() {
        let out = run_trial(&small(PolicyKind::ExploitOnly), 0).unwrap();
        let keys: Vec<(u64, usize)> = out.records.iter().map(|r| (r.step, r.agent)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn hand_traced_greedy_step() {
        // Path 0-1-2; epsilon pinned near zero so every agent takes the greedy
        // branch. With all Q at 0 the greedy tie-break picks the lowest-id
        // neighbor: 0 -> 1, 1 -> 0, 2 -> 1.
        let cfg = SimConfig {
            n_agents: 3,
            horizon: 1,
            epsilon0: 1e-12,
            p_frag: 0.0,
            family: crate::reward::RewardFamily::ClippedGaussian,
            sigma_scale: 0.0,
            ..SimConfig::default()
        };
        let mut g = SocialGraph::empty(3, EdgeParams::default()).unwrap();
        g.set_edge(0, 1, 0.5, 0).unwrap();
        g.set_edge(1, 2, 0.5, 0).unwrap();
        // pairs (0,1) (0,2) (1,2)
        let shape = cfg.reward_shape();
        let model = RewardModel::with_means(3, shape, vec![0.9, 0.2, 0.6]).unwrap();
        let mut w = World::with_environment(&cfg, 0, g, model).unwrap();
        let rows = run_step(&mut w, 1).unwrap();
        let targets: Vec<_> = rows.iter().map(|r| r.target).collect();
        assert_eq!(targets, vec![Some(1), Some(0), Some(1)]);
        assert!(rows.iter().all(|r| r.kind == ActionClass::Exploit));
        assert_eq!(rows[0].reward, 0.9);
        assert_eq!(rows[2].reward, 0.6);
        assert!((rows[0].fitness - 0.88).abs() < 1e-12);
        // edge (0,1): two successes of 0.9 -> 0.5 + 0.08 + 0.08
        assert!((w.graph.weight(0, 1).unwrap() - 0.66).abs() < 1e-12);
        // edge (1,2): 0.5 + 0.2 * 0.1
        assert!((w.graph.weight(1, 2).unwrap() - 0.52).abs() < 1e-12);
        // agent 2 faced exploit(1) = 0.58 and explore(0) = 0.1: no regret
        assert_eq!(rows[2].step_regret, 0.0);
        // Q(s0, exploit 1) = 0.1 * (0.88 + 0.9 * 0) for agent 0
        let s0 = AgentState::from_ties(&[(1, 0.5)]);
        assert!((w.learners[0].q_value(s0, &SocialAction::exploit(1)) - 0.088).abs() < 1e-12);
        assert_eq!(w.learners[0].visits(1), 1);
    }

    #[test]
    fn edges_never_lost_without_decay_or_failure() {
        let cfg = SimConfig {
            n_agents: 10,
            horizon: 200,
            density: 0.2,
            p_frag: 0.0,
            eta_minus: 0.0,
            family: crate::reward::RewardFamily::ClippedGaussian,
            sigma_scale: 0.0,
            threshold: 0.0,
            policy: PolicyKind::RandomWalk,
            ..SimConfig::default()
        };
        let out = run_trial(&cfg, 0).unwrap();
        let counts: Vec<usize> = out.network.iter().map(|(_, s)| s.edge_count).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }

    #[test]
    fn mab_arms_stay_frozen() {
        let cfg = SimConfig { horizon: 1, ..small(PolicyKind::MabOnly) };
        let mut w = World::new(&cfg, 0).unwrap();
        run_step(&mut w, 1).unwrap();
        let arms: Vec<FrozenArms> = (0..8).map(|i| w.frozen_arms(i).unwrap().clone()).collect();
        for t in 2..80 {
            run_step(&mut w, t).unwrap();
            for (i, a) in arms.iter().enumerate() {
                assert_eq!(w.frozen_arms(i), Some(a));
            }
        }
    }

    #[test]
    fn exploit_only_never_explores_after_warmup() {
        let cfg = SimConfig { horizon: 200, ..small(PolicyKind::ExploitOnly) };
        let out = run_trial(&cfg, 0).unwrap();
        assert!(out.records.iter().all(|r| r.kind != ActionClass::Explore));
    }

    #[test]
    fn bonus_hook_shifts_fitness() {
        struct Flat;
        impl TopologyBonus for Flat {
            fn bonus(&self, _: &SocialGraph, _: NodeId) -> f64 {
                1.0
            }
        }
        let cfg = SimConfig { horizon: 1, ..small(PolicyKind::RandomWalk) };
        let mut plain = World::new(&cfg, 0).unwrap();
        let mut boosted = World::new(&cfg, 0).unwrap().with_bonus(Arc::new(Flat));
        let a = run_step(&mut plain, 1).unwrap();
        let b = run_step(&mut boosted, 1).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y.fitness - x.fitness - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn experiment_aggregates_trials() {
        let cfg = small(PolicyKind::SocialUcb);
        let res = run_experiment(&cfg, None).unwrap();
        assert_eq!(res.final_fitness.len(), 2);
        assert_eq!(res.curves.mean_cum_fitness.len(), 30);
        assert!(res.curves.ci_cum_fitness.is_some());
        let single = run_experiment(&SimConfig { trials: 1, ..cfg }, None).unwrap();
        assert!(single.curves.ci_cum_fitness.is_none());
        assert_eq!(single.final_fitness[0], res.final_fitness[0]);
    }

    #[test]
    fn invalid_config_fails_before_work() {
        let cfg = SimConfig { gamma: 2.0, ..SimConfig::default() };
        assert!(matches!(run_trial(&cfg, 0), Err(EngineError::Config(_))));
        let shape = RewardShape::default();
        assert!(RewardModel::with_means(2, shape, vec![0.5]).is_ok());
    }
}
