//! Action enumeration and the four selection strategies: Social-UCB and the
//! random-walk, exploit-only and static-arm UCB1 baselines.
//!
//! Selectors return `None` when the agent has nothing to do this step (idle).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, SocialGraph};
use crate::learner::{epsilon_at, ActionKind, AgentLearner, AgentState, SocialAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "social_ucb")]
    SocialUcb,
    #[serde(rename = "random_walk")]
    RandomWalk,
    #[serde(rename = "exploit_only")]
    ExploitOnly,
    #[serde(rename = "mab_only")]
    MabOnly,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] =
        [PolicyKind::SocialUcb, PolicyKind::RandomWalk, PolicyKind::ExploitOnly, PolicyKind::MabOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::SocialUcb => "social_ucb",
            PolicyKind::RandomWalk => "random_walk",
            PolicyKind::ExploitOnly => "exploit_only",
            PolicyKind::MabOnly => "mab_only",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "social_ucb" | "socialucb" => Ok(PolicyKind::SocialUcb),
            "random_walk" | "randomwalk" | "random" => Ok(PolicyKind::RandomWalk),
            "exploit_only" | "exploitonly" => Ok(PolicyKind::ExploitOnly),
            "mab_only" | "mabonly" | "mab" => Ok(PolicyKind::MabOnly),
            other => Err(format!(
                "unknown policy `{other}`, expected one of social_ucb, random_walk, exploit_only, mab_only"
            )),
        }
    }
}

/// The actions available to one agent at one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionSet {
    /// One per current neighbor, ascending id.
    pub exploit: Vec<SocialAction>,
    /// Candidate new contacts, at most `L`.
    pub explore: Vec<SocialAction>,
}

impl ActionSet {
    pub fn len(&self) -> usize {
        self.exploit.len() + self.explore.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exploit.is_empty() && self.explore.is_empty()
    }

    /// Exploit actions first, then explore actions.
    pub fn iter(&self) -> impl Iterator<Item = &SocialAction> {
        self.exploit.iter().chain(self.explore.iter())
    }
}

/// Builds agent `i`'s action set: every neighbor as an exploit action, plus up
/// to `cap` explore candidates. Friends-of-friends come first in ascending id;
/// remaining slots are filled with uniformly drawn non-neighbors.
pub fn enumerate_actions<R: Rng + ?Sized>(graph: &SocialGraph, i: NodeId, cap: usize, rng: &mut R) -> ActionSet {
    let exploit: Vec<SocialAction> = graph.neighbor_ids(i).map(SocialAction::exploit).collect();

    let n = graph.node_count();
    let mut is_neighbor = vec![false; n];
    for a in &exploit {
        is_neighbor[a.target] = true;
    }
    let mut is_fof = vec![false; n];
    for a in &exploit {
        for k in graph.neighbor_ids(a.target) {
            is_fof[k] = k != i && !is_neighbor[k];
        }
    }
    let mut explore: Vec<SocialAction> =
        (0..n).filter(|&k| is_fof[k]).take(cap).map(SocialAction::explore).collect();

    if explore.len() < cap {
        let mut pool: Vec<NodeId> = (0..n).filter(|&k| k != i && !is_neighbor[k] && !is_fof[k]).collect();
        let want = (cap - explore.len()).min(pool.len());
        if want > 0 {
            let (picked, _) = pool.partial_shuffle(rng, want);
            picked.sort_unstable();
            explore.extend(picked.iter().copied().map(SocialAction::explore));
        }
    }
    ActionSet { exploit, explore }
}

// Ordering for argmax ties: exploit before explore, then the lower target.
fn tie_rank(a: &SocialAction) -> (u8, NodeId) {
    (if a.kind == ActionKind::Exploit { 0 } else { 1 }, a.target)
}

fn argmax_by<'a, F>(actions: impl Iterator<Item = &'a SocialAction>, mut score: F) -> Option<SocialAction>
where
    F: FnMut(&SocialAction) -> f64,
{
    let mut best: Option<(SocialAction, f64)> = None;
    for a in actions {
        let s = score(a);
        best = match best {
            Some((b, bs)) if bs > s || (bs == s && tie_rank(&b) <= tie_rank(a)) => Some((b, bs)),
            _ => Some((*a, s)),
        };
    }
    best.map(|(a, _)| a)
}

/// Which branch of the epsilon-greedy rule produced a Social-UCB choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Ucb,
    Greedy,
}

/// Social-UCB selection: with probability `ε_t` take the action with the
/// highest UCB score, otherwise the one with the highest Q-value. Both
/// branches range over every available action.
pub fn select_social_ucb<R: Rng + ?Sized>(
    learner: &AgentLearner,
    state: AgentState,
    actions: &ActionSet,
    t: u64,
    rng: &mut R,
) -> Option<(SocialAction, Branch)> {
    let u: f64 = rng.random();
    if actions.is_empty() {
        return None;
    }
    let eps = epsilon_at(learner.params().epsilon0, t.max(1)).unwrap_or(0.0);
    select_social_ucb_with(learner, state, actions, t, u < eps)
}

/// Social-UCB selection with the branch fixed by the caller.
pub fn select_social_ucb_with(
    learner: &AgentLearner,
    state: AgentState,
    actions: &ActionSet,
    t: u64,
    explore_branch: bool,
) -> Option<(SocialAction, Branch)> {
    if explore_branch {
        argmax_by(actions.iter(), |a| learner.ucb(state, a, t)).map(|a| (a, Branch::Ucb))
    } else {
        argmax_by(actions.iter(), |a| learner.q_value(state, a)).map(|a| (a, Branch::Greedy))
    }
}

/// Uniform choice over all available actions.
pub fn select_random_walk<R: Rng + ?Sized>(actions: &ActionSet, rng: &mut R) -> Option<SocialAction> {
    if actions.is_empty() {
        return None;
    }
    let k = rng.random_range(0..actions.len());
    actions.iter().nth(k).copied()
}

/// Greedy exploitation of existing ties. During the first `warmup` steps a
/// neighbor is picked uniformly to form early estimates; afterwards the
/// neighbor with the highest running mean (unvisited counts as 0, ties to
/// the lowest id). Never explores.
pub fn select_exploit_only<R: Rng + ?Sized>(
    learner: &AgentLearner,
    actions: &ActionSet,
    warmup: u64,
    t: u64,
    rng: &mut R,
) -> Option<SocialAction> {
    if actions.exploit.is_empty() {
        return None;
    }
    if t <= warmup {
        let k = rng.random_range(0..actions.exploit.len());
        return Some(actions.exploit[k]);
    }
    argmax_by(actions.exploit.iter(), |a| learner.mu_hat(a.target).unwrap_or(0.0))
}

/// The fixed arm set of a static-arm UCB1 agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenArms {
    arms: Vec<NodeId>,
}

impl FrozenArms {
    pub fn new(mut arms: Vec<NodeId>) -> Self {
        arms.sort_unstable();
        arms.dedup();
        Self { arms }
    }

    /// Arms fixed from the agent's initial action set: its neighbors plus the
    /// explore candidates it sees at the start.
    pub fn from_actions(actions: &ActionSet) -> Self {
        Self::new(actions.iter().map(|a| a.target).collect())
    }

    pub fn arms(&self) -> &[NodeId] {
        &self.arms
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    /// The arms as actions, kind taken from the current graph.
    pub fn as_action_set(&self, graph: &SocialGraph, i: NodeId) -> ActionSet {
        let mut set = ActionSet::default();
        for &j in &self.arms {
            if graph.has_edge(i, j) {
                set.exploit.push(SocialAction::exploit(j));
            } else {
                set.explore.push(SocialAction::explore(j));
            }
        }
        set
    }
}

/// Classic UCB1 over a frozen arm set: every untried arm once in ascending id
/// order, then `argmax μ̂ + c·√(ln t / N)`. Returns the chosen arm.
pub fn select_mab_only(learner: &AgentLearner, arms: &FrozenArms, t: u64) -> Option<NodeId> {
    if arms.is_empty() {
        return None;
    }
    if let Some(&untried) = arms.arms.iter().find(|&&j| learner.visits(j) == 0) {
        return Some(untried);
    }
    let c = learner.params().ucb_c;
    let ln_t = (t.max(1) as f64).ln();
    let mut best: Option<(NodeId, f64)> = None;
    for &j in &arms.arms {
        let n = learner.visits(j) as f64;
        let score = learner.mu_hat(j).unwrap_or(0.0) + c * (ln_t / n).sqrt();
        if best.is_none_or(|(_, bs)| score > bs) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;
    use super::*;
    use crate::graph::EdgeParams;
    use crate::learner::LearnerParams;
    use crate::rng::SimRng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    const S: AgentState = AgentState { degree_bucket: 1, strength_bucket: 2 };

    fn graph(n: usize, edges: &[(usize, usize)]) -> SocialGraph {
        let mut g = SocialGraph::empty(n, EdgeParams::default()).unwrap();
        for &(i, j) in edges {
            g.set_edge(i, j, 0.5, 0).unwrap();
        }
        g
    }

    fn rng() -> SimRng {
        SimRng::seed_from_u64(17)
    }

    #[test]
    fn complete_graph_has_no_explore_candidates() {
        let edges: Vec<_> = (0..5).flat_map(|i| ((i + 1)..5).map(move |j| (i, j))).collect();
        let g = graph(5, &edges);
        let set = enumerate_actions(&g, 2, 10, &mut rng());
        assert!(set.explore.is_empty());
        assert_eq!(set.exploit.len(), 4);
    }

    #[test]
    fn isolated_node_sees_every_other_node() {
        let g = graph(5, &[(1, 2)]);
        let set = enumerate_actions(&g, 0, 10, &mut rng());
        assert!(set.exploit.is_empty());
        let targets: Vec<_> = set.explore.iter().map(|a| a.target).collect();
        assert_eq!(targets, vec![1, 2, 3, 4]);
    }

    #[test]
    fn star_center_respects_cap() {
        let g = graph(10, &[(0, 1), (0, 2)]);
        let set = enumerate_actions(&g, 0, 2, &mut rng());
        assert_eq!(set.explore.len(), 2);
        assert_eq!(set.exploit.len(), 2);
    }

    #[test]
    fn friends_of_friends_come_first() {
        // 0 - 1 - {5, 7}, 0 - 2 - 9
        let g = graph(12, &[(0, 1), (1, 5), (1, 7), (0, 2), (2, 9)]);
        let set = enumerate_actions(&g, 0, 2, &mut rng());
        assert_eq!(set.explore, vec![SocialAction::explore(5), SocialAction::explore(7)]);
        let set = enumerate_actions(&g, 0, 5, &mut rng());
        assert_eq!(&set.explore[..3], &[SocialAction::explore(5), SocialAction::explore(7), SocialAction::explore(9)]);
        assert_eq!(set.explore.len(), 5);
    }

    #[test]
    fn enumeration_is_deterministic_and_disjoint() {
        let g = graph(30, &[(0, 1), (1, 2), (3, 4)]);
        let a = enumerate_actions(&g, 0, 10, &mut rng());
        let b = enumerate_actions(&g, 0, 10, &mut rng());
        assert_eq!(a, b);
        let ex: BTreeSet<_> = a.exploit.iter().map(|x| x.target).collect();
        for x in &a.explore {
            assert!(!ex.contains(&x.target));
            assert_ne!(x.target, 0);
        }
        let uniq: BTreeSet<_> = a.explore.iter().map(|x| x.target).collect();
        assert_eq!(uniq.len(), a.explore.len());
    }

    fn set(exploit: &[usize], explore: &[usize]) -> ActionSet {
        ActionSet {
            exploit: exploit.iter().copied().map(SocialAction::exploit).collect(),
            explore: explore.iter().copied().map(SocialAction::explore).collect(),
        }
    }

    #[test]
    fn ucb_branch_prefers_untried_candidate() {
        let mut l = AgentLearner::new(0, LearnerParams::default());
        let actions = set(&[1], &[2]);
        for _ in 0..20 {
            l.update_mean(1, 0.5);
        }
        l.set_q(S, &SocialAction::exploit(1), 0.3);
        l.set_q(S, &SocialAction::explore(2), 0.3);
        // q equal; n = 20 vs 0 at t = 21
        let (a, branch) = select_social_ucb_with(&l, S, &actions, 21, true).unwrap();
        assert_eq!(a, SocialAction::explore(2));
        assert_eq!(branch, Branch::Ucb);
    }

    #[test]
    fn greedy_branch_takes_highest_q() {
        let mut l = AgentLearner::new(0, LearnerParams::default());
        l.set_q(S, &SocialAction::exploit(1), 0.9);
        l.set_q(S, &SocialAction::exploit(2), 0.4);
        let actions = set(&[1, 2], &[]);
        let (a, branch) = select_social_ucb_with(&l, S, &actions, 5, false).unwrap();
        assert_eq!((a, branch), (SocialAction::exploit(1), Branch::Greedy));
    }

    #[test]
    fn greedy_ties_prefer_exploit_then_low_id() {
        let l = AgentLearner::new(0, LearnerParams::default());
        let actions = set(&[7, 4], &[1, 3]);
        let (a, _) = select_social_ucb_with(&l, S, &actions, 5, false).unwrap();
        assert_eq!(a, SocialAction::exploit(4));
        let actions = set(&[], &[9, 3, 5]);
        let (a, _) = select_social_ucb_with(&l, S, &actions, 5, false).unwrap();
        assert_eq!(a, SocialAction::explore(3));
    }

    #[test]
    fn single_action_always_chosen() {
        let l = AgentLearner::new(0, LearnerParams::default());
        let actions = set(&[], &[6]);
        let mut r = rng();
        for t in 1..50 {
            let (a, _) = select_social_ucb(&l, S, &actions, t, &mut r).unwrap();
            assert_eq!(a, SocialAction::explore(6));
        }
        assert_eq!(select_social_ucb(&l, S, &ActionSet::default(), 1, &mut r), None);
    }

    #[test]
    fn random_walk_basics() {
        let mut r = rng();
        assert_eq!(select_random_walk(&ActionSet::default(), &mut r), None);
        assert_eq!(select_random_walk(&set(&[3], &[]), &mut r), Some(SocialAction::exploit(3)));
    }

    #[test]
    fn random_walk_is_uniform() {
        let actions = set(&[1, 2], &[3, 4]);
        let mut r = rng();
        let mut counts = [0usize; 5];
        let draws = 100_000;
        for _ in 0..draws {
            counts[select_random_walk(&actions, &mut r).unwrap().target] += 1;
        }
        for &c in &counts[1..] {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn exploit_only_rules() {
        let mut l = AgentLearner::new(0, LearnerParams::default());
        l.update_mean(1, 0.8);
        l.update_mean(2, 0.3);
        let mut r = rng();
        assert_eq!(select_exploit_only(&l, &set(&[1, 2], &[5]), 10, 11, &mut r), Some(SocialAction::exploit(1)));
        assert_eq!(select_exploit_only(&l, &set(&[], &[5, 6]), 10, 11, &mut r), None);
        let fresh = AgentLearner::new(0, LearnerParams::default());
        assert_eq!(select_exploit_only(&fresh, &set(&[4, 2], &[]), 0, 1, &mut r), Some(SocialAction::exploit(2)));
        for t in 1..=10 {
            let a = select_exploit_only(&fresh, &set(&[4, 2], &[1]), 10, t, &mut r).unwrap();
            assert_eq!(a.kind, ActionKind::Exploit);
        }
    }

    #[test]
    fn mab_only_round_robin_then_ucb1() {
        let mut l = AgentLearner::new(0, LearnerParams::default());
        let arms = FrozenArms::new(vec![5, 2, 8]);
        let mut order = Vec::new();
        for t in 1..=3 {
            let j = select_mab_only(&l, &arms, t).unwrap();
            order.push(j);
            l.update_mean(j, 0.5);
        }
        assert_eq!(order, vec![2, 5, 8]);
        // equal means and counts: lowest id
        assert_eq!(select_mab_only(&l, &arms, 4), Some(2));
        assert_eq!(select_mab_only(&l, &FrozenArms::new(vec![]), 4), None);
    }

    #[test]
    fn mab_only_prefers_better_arm() {
        let mut l = AgentLearner::new(0, LearnerParams::default());
        for _ in 0..50 {
            l.update_mean(1, 0.9);
            l.update_mean(2, 0.1);
        }
        assert_eq!(select_mab_only(&l, &FrozenArms::new(vec![1, 2]), 10_000), Some(1));
    }

    #[test]
    fn frozen_arms_classify_by_current_ties() {
        let g = graph(5, &[(0, 3)]);
        let set = FrozenArms::new(vec![3, 1]).as_action_set(&g, 0);
        assert_eq!(set.exploit, vec![SocialAction::exploit(3)]);
        assert_eq!(set.explore, vec![SocialAction::explore(1)]);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.as_str().parse::<PolicyKind>().unwrap(), p);
        }
        assert!("greedy".parse::<PolicyKind>().is_err());
    }

    proptest! {
        #[test]
        fn greedy_choice_invariant_to_constant_shift(
            qs in proptest::collection::vec(-1.0..1.0f64, 1..8),
            shift in -0.5..0.5f64,
        ) {
            let mut base = AgentLearner::new(0, LearnerParams { v_min: -10.0, v_max: 10.0, ..LearnerParams::default() });
            let mut shifted = base.clone();
            let actions = set(&(1..=qs.len()).collect::<Vec<_>>(), &[]);
            for (a, &q) in actions.exploit.iter().zip(&qs) {
                base.set_q(S, a, q);
                shifted.set_q(S, a, q + shift);
            }
            let a = select_social_ucb_with(&base, S, &actions, 3, false).unwrap().0;
            let b = select_social_ucb_with(&shifted, S, &actions, 3, false).unwrap().0;
            // shifting can only reorder values that were within rounding of each other
            let qa = qs[a.target - 1];
            let qb = qs[b.target - 1];
            prop_assert!(a == b || (qa - qb).abs() < 1e-12);
        }

        #[test]
        fn eventual_coverage_on_static_set(seed in 0u64..4) {
            let mut l = AgentLearner::new(0, LearnerParams::default());
            let actions = set(&[1, 2, 3], &[4, 5]);
            let mut r = SimRng::seed_from_u64(seed);
            let means = [0.0, 0.9, 0.6, 0.4, 0.2, 0.1];
            for t in 1..=10_000u64 {
                let (a, _) = select_social_ucb(&l, S, &actions, t, &mut r).unwrap();
                let reward = means[a.target];
                l.update_mean(a.target, reward);
                l.td_update(S, &a, reward, S, &actions.iter().copied().collect::<Vec<_>>()).unwrap();
            }
            for j in 1..=5 {
                prop_assert!(l.visits(j) >= 1, "action {} never tried", j);
            }
        }
    }
}
