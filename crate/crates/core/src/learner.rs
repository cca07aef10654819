//! Per-agent learning state: running reward means, visit counts, a tabular
//! Q-function over a coarse local-network state, and the bounded-memory and
//! value-clipping constraints.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::io::fmt6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("timestep must be >= 1, got {0}")]
    InvalidTimestep(u64),
    #[error("action targeting agent {target} is not representable in the Q-table of agent {agent}")]
    Schema { agent: NodeId, target: NodeId },
    #[error("reward {0} is not finite")]
    NonFiniteReward(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Exploit,
    Explore,
}

impl ActionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Exploit => "exploit",
            ActionKind::Explore => "explore",
        }
    }
}

/// Interact with `target`, either over an existing tie or as a new contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SocialAction {
    pub kind: ActionKind,
    pub target: NodeId,
}

impl SocialAction {
    pub fn exploit(target: NodeId) -> Self {
        Self { kind: ActionKind::Exploit, target }
    }

    pub fn explore(target: NodeId) -> Self {
        Self { kind: ActionKind::Explore, target }
    }

    /// Q-table column this action reads and writes.
    pub fn key(&self) -> QKey {
        match self.kind {
            ActionKind::Exploit => QKey::Exploit(self.target),
            // All new-contact actions share one column per state; which
            // stranger to approach is left to the UCB bonus.
            ActionKind::Explore => QKey::Explore,
        }
    }
}

impl fmt::Display for SocialAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind.as_str(), self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QKey {
    Exploit(NodeId),
    Explore,
}

pub const DEGREE_BUCKETS: usize = 5;
pub const STRENGTH_BUCKETS: usize = 4;

/// Coarse view of an agent's local network: degree bucket over
/// `{0, 1, 2-3, 4-7, 8+}` and the quartile of its mean tie strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentState {
    pub degree_bucket: u8,
    pub strength_bucket: u8,
}

impl AgentState {
    pub fn from_ties(ties: &[(NodeId, f64)]) -> Self {
        let degree_bucket = match ties.len() {
            0 => 0,
            1 => 1,
            2..=3 => 2,
            4..=7 => 3,
            _ => 4,
        };
        let strength_bucket = if ties.is_empty() {
            0
        } else {
            let mean = ties.iter().map(|&(_, w)| w).sum::<f64>() / ties.len() as f64;
            ((mean * 4.0).floor() as i64).clamp(0, 3) as u8
        };
        Self { degree_bucket, strength_bucket }
    }

    /// Dense index in `0..20`.
    pub fn index(&self) -> usize {
        self.degree_bucket as usize * STRENGTH_BUCKETS + self.strength_bucket as usize
    }
}

/// `ε_t = ε0 / √t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub epsilon0: f64,
}

impl EpsilonSchedule {
    pub fn at(&self, t: u64) -> Result<f64, LearnerError> {
        epsilon_at(self.epsilon0, t)
    }
}

pub fn epsilon_at(epsilon0: f64, t: u64) -> Result<f64, LearnerError> {
    if t == 0 {
        return Err(LearnerError::InvalidTimestep(t));
    }
    Ok(epsilon0 / (t as f64).sqrt())
}

/// `q + c·√(ln t / (n + 1))`. The `+1` keeps untried actions finite while
/// still giving them the largest bonus.
pub fn ucb_score(q: f64, n: u64, t: u64, c: f64) -> f64 {
    let t = t.max(1) as f64;
    q + c * (t.ln() / (n as f64 + 1.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub alpha: f64,
    pub gamma: f64,
    pub ucb_c: f64,
    pub epsilon0: f64,
    /// Maximum number of tracked neighbors, M.
    pub memory_cap: usize,
    /// Explore candidate cap, L; also bounds tracked non-neighbors.
    pub candidate_cap: usize,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            ucb_c: 1.0,
            epsilon0: 0.5,
            memory_cap: 10,
            candidate_cap: 10,
            v_min: -1.0,
            v_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentLearner {
    agent: NodeId,
    params: LearnerParams,
    mu_hat: BTreeMap<NodeId, f64>,
    visits: BTreeMap<NodeId, u64>,
    // Logical time of the latest observation per target, for evicting stale
    // non-neighbor entries.
    touched: BTreeMap<NodeId, u64>,
    clock: u64,
    q: BTreeMap<(AgentState, QKey), f64>,
}

impl AgentLearner {
    pub fn new(agent: NodeId, params: LearnerParams) -> Self {
        Self {
            agent,
            params,
            mu_hat: BTreeMap::new(),
            visits: BTreeMap::new(),
            touched: BTreeMap::new(),
            clock: 0,
            q: BTreeMap::new(),
        }
    }

    pub fn agent(&self) -> NodeId {
        self.agent
    }

    pub fn params(&self) -> &LearnerParams {
        &self.params
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule { epsilon0: self.params.epsilon0 }
    }

    /// Running mean reward for `target`; `None` before the first visit.
    pub fn mu_hat(&self, target: NodeId) -> Option<f64> {
        self.mu_hat.get(&target).copied()
    }

    pub fn visits(&self, target: NodeId) -> u64 {
        self.visits.get(&target).copied().unwrap_or(0)
    }

    /// Targets with any tracked belief, ascending.
    pub fn tracked(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.visits.keys().copied()
    }

    pub fn q_value(&self, state: AgentState, action: &SocialAction) -> f64 {
        self.q.get(&(state, action.key())).copied().unwrap_or(0.0)
    }

    pub fn set_q(&mut self, state: AgentState, action: &SocialAction, value: f64) {
        let value = value.clamp(self.params.v_min, self.params.v_max);
        self.q.insert((state, action.key()), value);
    }

    /// All stored Q-values.
    pub fn q_values(&self) -> impl Iterator<Item = (AgentState, QKey, f64)> + '_ {
        self.q.iter().map(|(&(s, k), &v)| (s, k, v))
    }

    pub fn ucb(&self, state: AgentState, action: &SocialAction, t: u64) -> f64 {
        ucb_score(self.q_value(state, action), self.visits(action.target), t, self.params.ucb_c)
    }

    /// Delta-rule running mean: `N += 1; μ̂ += (r − μ̂) / N`.
    pub fn update_mean(&mut self, target: NodeId, reward: f64) -> (f64, u64) {
        let n = self.visits.entry(target).or_insert(0);
        *n += 1;
        let n = *n;
        let mu = self.mu_hat.entry(target).or_insert(0.0);
        *mu += (reward - *mu) / n as f64;
        let mu = *mu;
        self.clock += 1;
        self.touched.insert(target, self.clock);
        (mu, n)
    }

    /// One Q-learning backup of `Q(state, action)` toward
    /// `reward + γ·max_{a'} Q(next_state, a')`, clipped to `[v_min, v_max]`.
    /// An empty `available_next` bootstraps from 0.
    pub fn td_update(
        &mut self,
        state: AgentState,
        action: &SocialAction,
        reward: f64,
        next_state: AgentState,
        available_next: &[SocialAction],
    ) -> Result<f64, LearnerError> {
        if action.target == self.agent {
            return Err(LearnerError::Schema { agent: self.agent, target: action.target });
        }
        if !reward.is_finite() {
            return Err(LearnerError::NonFiniteReward(reward));
        }
        let next_max = available_next
            .iter()
            .map(|a| self.q_value(next_state, a))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.max(v))))
            .unwrap_or(0.0);
        let p = self.params;
        let current = self.q_value(state, action);
        let updated = current + p.alpha * (reward + p.gamma * next_max - current);
        let updated = updated.clamp(p.v_min, p.v_max);
        self.q.insert((state, action.key()), updated);
        Ok(updated)
    }

    fn forget(&mut self, target: NodeId) {
        self.mu_hat.remove(&target);
        self.visits.remove(&target);
        self.touched.remove(&target);
        self.q.retain(|&(_, key), _| key != QKey::Exploit(target));
    }

    /// Applies the memory bound against the agent's current ties
    /// (`(neighbor, weight)`, any order).
    ///
    /// Tracked neighbors beyond `memory_cap` are evicted weakest tie first,
    /// the higher id first among equal weights. Tracked targets that are not
    /// neighbors are kept up to `candidate_cap`, least recently observed
    /// evicted first. Returns the evicted targets in eviction order.
    pub fn enforce_memory(&mut self, ties: &[(NodeId, f64)]) -> Vec<NodeId> {
        let weight_of: BTreeMap<NodeId, f64> = ties.iter().copied().collect();
        let mut tracked_ties: Vec<(NodeId, f64)> = Vec::new();
        let mut strangers: Vec<(NodeId, u64)> = Vec::new();
        for &target in self.visits.keys() {
            match weight_of.get(&target) {
                Some(&w) => tracked_ties.push((target, w)),
                None => strangers.push((target, self.touched.get(&target).copied().unwrap_or(0))),
            }
        }
        let mut evicted = Vec::new();
        let cap = self.params.memory_cap.max(1);
        if tracked_ties.len() > cap {
            // weakest first; equal weights evict the higher id first
            tracked_ties.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            let excess = tracked_ties.len() - cap;
            evicted.extend(tracked_ties[..excess].iter().map(|&(t, _)| t));
        }
        if strangers.len() > self.params.candidate_cap {
            strangers.sort_by_key(|&(t, touched)| (touched, t));
            let excess = strangers.len() - self.params.candidate_cap;
            evicted.extend(strangers[..excess].iter().map(|&(t, _)| t));
        }
        for &target in &evicted {
            self.forget(target);
        }
        evicted
    }

    /// CSV rows `agent,target,mu_hat,visits,q_state,q_value`. Targets without
    /// Q rows get empty Q columns; the shared explore column is written with
    /// target -1 and empty belief columns.
    pub fn dump_rows(&self) -> String {
        let mut out = String::new();
        let a = self.agent;
        for (&target, &n) in &self.visits {
            let mu = fmt6(self.mu_hat[&target]);
            let mut any = false;
            for (&(state, key), &v) in &self.q {
                if key == QKey::Exploit(target) {
                    any = true;
                    let _ = writeln!(out, "{a},{target},{mu},{n},{},{}", state.index(), fmt6(v));
                }
            }
            if !any {
                let _ = writeln!(out, "{a},{target},{mu},{n},,");
            }
        }
        for (&(state, key), &v) in &self.q {
            if key == QKey::Explore {
                let _ = writeln!(out, "{a},-1,,,{},{}", state.index(), fmt6(v));
            }
        }
        out
    }
}

pub const LEARNER_DUMP_HEADER: &str = "agent,target,mu_hat,visits,q_state,q_value";
