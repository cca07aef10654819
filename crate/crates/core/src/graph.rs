//! Dynamic undirected weighted social graph.
//!
//! Edge weights are tie strengths in `[w_min, 1]`. Each unordered pair is
//! stored once under its canonical key `(min, max)`, so symmetry holds by
//! construction. Ties are reinforced or weakened by interaction outcomes
//! ([`SocialGraph::reinforce_or_create`]) and passively decay when left alone
//! ([`SocialGraph::decay_step`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::fmt6;

/// Agent / node identifier, 0-indexed.
pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid population: need at least 2 agents, got {0}")]
    InvalidPopulation(usize),
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(NodeId),
    #[error("node {node} out of range for graph of {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("{name} = {value} out of range, expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
}

/// Constants of the interaction-driven edge update rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    /// Interaction threshold θ: rewards at or above it strengthen the tie.
    pub threshold: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    /// Ties weaker than this are removed.
    pub w_min: f64,
    /// Base weight of a tie created by a successful first interaction.
    pub w_init_new: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            eta_plus: 0.2,
            eta_minus: 0.2,
            w_min: 0.01,
            w_init_new: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeState {
    pub weight: f64,
    pub last_interaction_step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    node_count: usize,
    edges: BTreeMap<(NodeId, NodeId), EdgeState>,
    // Neighbor index kept in lockstep with `edges`.
    adjacency: Vec<BTreeSet<NodeId>>,
    params: EdgeParams,
}

fn canonical(i: NodeId, j: NodeId) -> (NodeId, NodeId) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl SocialGraph {
    /// An edgeless graph on `node_count` nodes.
    pub fn empty(node_count: usize, params: EdgeParams) -> Result<Self, GraphError> {
        if node_count < 2 {
            return Err(GraphError::InvalidPopulation(node_count));
        }
        Ok(Self {
            node_count,
            edges: BTreeMap::new(),
            adjacency: vec![BTreeSet::new(); node_count],
            params,
        })
    }

    /// Erdős–Rényi style sparse start: each pair is a tie with probability
    /// `density`, weights uniform on (0, 1].
    pub fn init_random_sparse<R: Rng + ?Sized>(
        node_count: usize,
        density: f64,
        params: EdgeParams,
        rng: &mut R,
    ) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&density) {
            return Err(GraphError::InvalidParameter {
                name: "density",
                value: density,
                expected: "[0, 1]",
            });
        }
        let mut graph = Self::empty(node_count, params)?;
        for i in 0..node_count {
            for j in (i + 1)..node_count {
                if rng.random::<f64>() < density {
                    // random::<f64>() is on [0, 1); map to (0, 1].
                    let weight = 1.0 - rng.random::<f64>();
                    // Draws under w_min would be pruned immediately.
                    if weight >= params.w_min {
                        graph.insert(i, j, EdgeState { weight, last_interaction_step: 0 });
                    }
                }
            }
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn params(&self) -> &EdgeParams {
        &self.params
    }

    fn check_node(&self, node: NodeId) -> Result<(), GraphError> {
        if node >= self.node_count {
            Err(GraphError::NodeOutOfRange { node, node_count: self.node_count })
        } else {
            Ok(())
        }
    }

    fn check_pair(&self, i: NodeId, j: NodeId) -> Result<(), GraphError> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        Ok(())
    }

    /// Inserts or overwrites an edge. Intended for fixtures and tests; the
    /// weight must already be within `[w_min, 1]`.
    pub fn set_edge(&mut self, i: NodeId, j: NodeId, weight: f64, step: u64) -> Result<(), GraphError> {
        self.check_pair(i, j)?;
        if !(weight >= self.params.w_min && weight <= 1.0) {
            return Err(GraphError::InvalidParameter {
                name: "weight",
                value: weight,
                expected: "[w_min, 1]",
            });
        }
        self.insert(i, j, EdgeState { weight, last_interaction_step: step });
        Ok(())
    }

    fn insert(&mut self, i: NodeId, j: NodeId, state: EdgeState) {
        self.edges.insert(canonical(i, j), state);
        self.adjacency[i].insert(j);
        self.adjacency[j].insert(i);
    }

    fn remove(&mut self, i: NodeId, j: NodeId) {
        self.edges.remove(&canonical(i, j));
        self.adjacency[i].remove(&j);
        self.adjacency[j].remove(&i);
    }

    pub fn edge(&self, i: NodeId, j: NodeId) -> Option<&EdgeState> {
        self.edges.get(&canonical(i, j))
    }

    pub fn weight(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.edge(i, j).map(|e| e.weight)
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        i < self.node_count && self.adjacency[i].contains(&j)
    }

    pub fn degree(&self, i: NodeId) -> usize {
        self.adjacency[i].len()
    }

    /// Neighbor ids of `i` in ascending order. Panics on an invalid id.
    pub fn neighbor_ids(&self, i: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[i].iter().copied()
    }

    /// `(neighbor, weight)` pairs of `i`, ascending by neighbor id.
    pub fn neighbors(&self, i: NodeId) -> Result<Vec<(NodeId, f64)>, GraphError> {
        self.check_node(i)?;
        Ok(self.adjacency[i]
            .iter()
            .map(|&j| (j, self.edges[&canonical(i, j)].weight))
            .collect())
    }

    /// All edges as `(i, j, state)` with `i < j`, lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, &EdgeState)> + '_ {
        self.edges.iter().map(|(&(i, j), e)| (i, j, e))
    }

    /// Applies the outcome of an interaction between `i` and `j`.
    ///
    /// Rewards at or above the threshold strengthen the tie (creating it if
    /// absent); rewards below it weaken an existing tie, removing it once it
    /// drops under `w_min`. A failed interaction on a non-edge changes nothing.
    /// Returns the tie's state afterwards, `None` if there is no tie.
    pub fn reinforce_or_create(
        &mut self,
        i: NodeId,
        j: NodeId,
        reward: f64,
        step: u64,
    ) -> Result<Option<EdgeState>, GraphError> {
        self.check_pair(i, j)?;
        if !(0.0..=1.0).contains(&reward) {
            return Err(GraphError::InvalidParameter {
                name: "reward",
                value: reward,
                expected: "[0, 1]",
            });
        }
        let p = self.params;
        let key = canonical(i, j);
        if reward >= p.threshold {
            let gain = p.eta_plus * (reward - p.threshold);
            let weight = match self.edges.get(&key) {
                Some(e) => e.weight + gain,
                None => p.w_init_new + gain,
            }
            .clamp(p.w_min, 1.0);
            let state = EdgeState { weight, last_interaction_step: step };
            self.insert(i, j, state);
            Ok(Some(state))
        } else {
            let Some(current) = self.edges.get(&key).copied() else {
                return Ok(None);
            };
            let weight = (current.weight - p.eta_minus * (p.threshold - reward)).clamp(0.0, 1.0);
            if weight < p.w_min {
                self.remove(i, j);
                Ok(None)
            } else {
                let state = EdgeState { weight, last_interaction_step: step };
                self.edges.insert(key, state);
                Ok(Some(state))
            }
        }
    }

    /// Passive decay of ties not interacted with at `step`: each such tie is
    /// scaled by `lambda` with probability `p_frag`. Returns the number of
    /// ties removed for falling under `w_min`.
    pub fn decay_step<R: Rng + ?Sized>(
        &mut self,
        p_frag: f64,
        lambda: f64,
        step: u64,
        rng: &mut R,
    ) -> Result<usize, GraphError> {
        if !(0.0..=1.0).contains(&p_frag) {
            return Err(GraphError::InvalidParameter {
                name: "p_frag",
                value: p_frag,
                expected: "[0, 1]",
            });
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(GraphError::InvalidParameter {
                name: "decay_factor",
                value: lambda,
                expected: "(0, 1)",
            });
        }
        if p_frag == 0.0 {
            return Ok(0);
        }
        let w_min = self.params.w_min;
        let mut dead = Vec::new();
        for (&(i, j), edge) in self.edges.iter_mut() {
            if edge.last_interaction_step >= step {
                continue;
            }
            if rng.random::<f64>() < p_frag {
                edge.weight *= lambda;
                if edge.weight < w_min {
                    dead.push((i, j));
                }
            }
        }
        for &(i, j) in &dead {
            self.remove(i, j);
        }
        Ok(dead.len())
    }

    /// Edge-list snapshot: one `i,j,weight` line per tie, `i < j`, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 16);
        for (i, j, e) in self.edges() {
            let _ = writeln!(out, "{i},{j},{}", fmt6(e.weight));
        }
        out
    }
}
