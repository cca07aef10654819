//! Latent pairwise reward distributions and the true-mean oracle.
//!
//! Every unordered agent pair gets a stationary reward distribution on
//! `[0, 1]`. Both directions of a pair share it; each draw is independent.
//! The model is immutable once built and keeps no RNG of its own.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::io::fmt6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("invalid population: need at least 2 agents, got {0}")]
    InvalidPopulation(usize),
    #[error("agent {0} cannot interact with itself")]
    SelfInteraction(NodeId),
    #[error("node {node} out of range for {node_count} agents")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("no candidate actions to evaluate")]
    NoCandidates,
    #[error("invalid reward configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardFamily {
    Beta,
    ClippedGaussian,
}

impl RewardFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            RewardFamily::Beta => "beta",
            RewardFamily::ClippedGaussian => "clipped_gaussian",
        }
    }
}

/// Shape parameters shared by every pair distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardShape {
    pub family: RewardFamily,
    /// Volatility multiplier on the base dispersion, `>= 0`.
    pub sigma_scale: f64,
    /// Beta concentration at `sigma_scale = 1`.
    pub kappa: f64,
    /// Gaussian standard deviation at `sigma_scale = 1`.
    pub sigma_base: f64,
}

impl Default for RewardShape {
    fn default() -> Self {
        Self {
            family: RewardFamily::Beta,
            sigma_scale: 1.0,
            kappa: 10.0,
            sigma_base: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
enum PairDist {
    Beta(Beta<f64>),
    Gaussian { mean: f64, std: f64 },
}

#[derive(Debug, Clone)]
pub struct RewardModel {
    node_count: usize,
    shape: RewardShape,
    // Indexed by the triangular index of the canonical pair.
    means: Vec<f64>,
    dists: Vec<PairDist>,
}

impl RewardModel {
    /// Draws a true mean uniformly for every pair and builds its distribution.
    pub fn init<R: Rng + ?Sized>(node_count: usize, shape: RewardShape, rng: &mut R) -> Result<Self, RewardError> {
        if node_count < 2 {
            return Err(RewardError::InvalidPopulation(node_count));
        }
        let pairs = node_count * (node_count - 1) / 2;
        let means = (0..pairs)
            .map(|_| loop {
                // Exact 0 would give a degenerate Beta(0, b).
                let mu = rng.random::<f64>();
                if mu > 0.0 {
                    break mu;
                }
            })
            .collect();
        Self::with_means(node_count, shape, means)
    }

    /// Builds a model from explicit per-pair means, listed in canonical pair
    /// order `(0,1), (0,2), …, (0,n-1), (1,2), …`.
    pub fn with_means(node_count: usize, shape: RewardShape, means: Vec<f64>) -> Result<Self, RewardError> {
        if node_count < 2 {
            return Err(RewardError::InvalidPopulation(node_count));
        }
        let pairs = node_count * (node_count - 1) / 2;
        if means.len() != pairs {
            return Err(RewardError::Config(format!(
                "expected {pairs} pair means for {node_count} agents, got {}",
                means.len()
            )));
        }
        if !(shape.sigma_scale >= 0.0 && shape.sigma_scale.is_finite()) {
            return Err(RewardError::Config(format!(
                "sigma_scale = {} must be a finite value >= 0",
                shape.sigma_scale
            )));
        }
        let dists = means
            .iter()
            .map(|&mu| {
                if !(0.0..=1.0).contains(&mu) {
                    return Err(RewardError::Config(format!("pair mean {mu} outside [0, 1]")));
                }
                match shape.family {
                    RewardFamily::Beta => {
                        let concentration = shape.kappa / shape.sigma_scale;
                        let (a, b) = (mu * concentration, (1.0 - mu) * concentration);
                        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                            return Err(RewardError::Config(format!(
                                "Beta parameters a = {a}, b = {b} invalid (mean {mu}, kappa {}, sigma_scale {})",
                                shape.kappa, shape.sigma_scale
                            )));
                        }
                        Beta::new(a, b)
                            .map(PairDist::Beta)
                            .map_err(|e| RewardError::Config(format!("Beta({a}, {b}): {e}")))
                    }
                    RewardFamily::ClippedGaussian => {
                        let std = shape.sigma_base * shape.sigma_scale;
                        if !(std >= 0.0 && std.is_finite()) {
                            return Err(RewardError::Config(format!("gaussian std {std} invalid")));
                        }
                        Ok(PairDist::Gaussian { mean: mu, std })
                    }
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { node_count, shape, means, dists })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn shape(&self) -> &RewardShape {
        &self.shape
    }

    pub fn pair_count(&self) -> usize {
        self.means.len()
    }

    fn index(&self, i: NodeId, j: NodeId) -> Result<usize, RewardError> {
        for node in [i, j] {
            if node >= self.node_count {
                return Err(RewardError::NodeOutOfRange { node, node_count: self.node_count });
            }
        }
        if i == j {
            return Err(RewardError::SelfInteraction(i));
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let n = self.node_count;
        Ok(a * (2 * n - a - 1) / 2 + (b - a - 1))
    }

    /// True mean reward of the pair.
    pub fn true_mean(&self, i: NodeId, j: NodeId) -> Result<f64, RewardError> {
        Ok(self.means[self.index(i, j)?])
    }

    /// One reward draw for an interaction between `i` and `j`, in `[0, 1]`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, i: NodeId, j: NodeId, rng: &mut R) -> Result<f64, RewardError> {
        let r = match &self.dists[self.index(i, j)?] {
            PairDist::Beta(beta) => beta.sample(rng),
            PairDist::Gaussian { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
        };
        Ok(r.clamp(0.0, 1.0))
    }

    /// The candidate with the highest true mean for `i`; ties go to the
    /// lowest id.
    pub fn oracle_best(&self, i: NodeId, candidates: &[NodeId]) -> Result<(NodeId, f64), RewardError> {
        let mut best: Option<(NodeId, f64)> = None;
        for &j in candidates {
            let mu = self.true_mean(i, j)?;
            best = match best {
                Some((b, bmu)) if bmu > mu || (bmu == mu && b < j) => Some((b, bmu)),
                _ => Some((j, mu)),
            };
        }
        best.ok_or(RewardError::NoCandidates)
    }

    /// True-mean table as `i,j,mu` CSV, `i < j`.
    pub fn means_csv(&self) -> String {
        let mut out = String::from("i,j,mu\n");
        let n = self.node_count;
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let _ = writeln!(out, "{i},{j},{}", fmt6(self.means[k]));
                k += 1;
            }
        }
        out
    }
}
