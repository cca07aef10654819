//! Run configuration.
//!
//! Config files are flat TOML documents (`key = value` lines); every key is
//! optional and falls back to its default. Command-line overrides of the form
//! `key=value` are applied on top of the file, then every field is range
//! checked.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::EdgeParams;
use crate::learner::LearnerParams;
use crate::metrics::{FitnessParams, RegretUnits};
use crate::policies::PolicyKind;
use crate::reward::{RewardFamily, RewardShape};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("malformed override `{0}`, expected key=value")]
    MalformedOverride(String),
    #[error("{key} = {value} out of range: expected {expected}")]
    OutOfRange {
        key: &'static str,
        value: String,
        expected: &'static str,
    },
}

/// Every tunable of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    // population and schedule
    pub n_agents: usize,
    pub horizon: u64,
    pub trials: usize,
    pub density: f64,
    pub policy: PolicyKind,
    #[serde(with = "seed_format")]
    pub master_seed: u64,
    pub stats_interval: u64,

    // learner
    pub alpha: f64,
    pub gamma: f64,
    pub ucb_c: f64,
    pub epsilon0: f64,
    pub memory_cap: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub candidate_cap: usize,
    pub warmup: u64,

    // tie dynamics
    pub threshold: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub w_min: f64,
    pub w_init_new: f64,
    pub p_frag: f64,
    pub decay_factor: f64,

    // reward environment
    pub family: RewardFamily,
    pub sigma_scale: f64,
    pub kappa: f64,
    pub sigma_base: f64,

    // fitness and regret
    pub w_reward: f64,
    pub w_cost: f64,
    pub cost_explore: f64,
    pub cost_exploit: f64,
    pub cost_idle: f64,
    pub fitness_as_reward: bool,
    pub regret_units: RegretUnits,

    pub output_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        let learner = LearnerParams::default();
        let edges = EdgeParams::default();
        let shape = RewardShape::default();
        let fitness = FitnessParams::default();
        Self {
            n_agents: 50,
            horizon: 5000,
            trials: 30,
            density: 0.04,
            policy: PolicyKind::SocialUcb,
            master_seed: 20_250_101,
            stats_interval: 10,

            alpha: learner.alpha,
            gamma: learner.gamma,
            ucb_c: learner.ucb_c,
            epsilon0: learner.epsilon0,
            memory_cap: learner.memory_cap,
            v_min: learner.v_min,
            v_max: learner.v_max,
            candidate_cap: learner.candidate_cap,
            warmup: 10,

            threshold: edges.threshold,
            eta_plus: edges.eta_plus,
            eta_minus: edges.eta_minus,
            w_min: edges.w_min,
            w_init_new: edges.w_init_new,
            p_frag: 0.05,
            decay_factor: 0.9,

            family: shape.family,
            sigma_scale: shape.sigma_scale,
            kappa: shape.kappa,
            sigma_base: shape.sigma_base,

            w_reward: fitness.w_reward,
            w_cost: fitness.w_cost,
            cost_explore: fitness.cost_explore,
            cost_exploit: fitness.cost_exploit,
            cost_idle: fitness.cost_idle,
            fitness_as_reward: true,
            regret_units: RegretUnits::Fitness,

            output_dir: PathBuf::from("out"),
        }
    }
}

// TOML integers are signed 64-bit; seeds above i64::MAX are written as strings.
mod seed_format {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        if *seed <= i64::MAX as u64 {
            s.serialize_i64(*seed as i64)
        } else {
            s.serialize_str(&seed.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(v),
            Raw::Text(s) => s.trim().parse().map_err(serde::de::Error::custom),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "n_agents",
    "horizon",
    "trials",
    "density",
    "policy",
    "master_seed",
    "stats_interval",
    "alpha",
    "gamma",
    "ucb_c",
    "epsilon0",
    "memory_cap",
    "v_min",
    "v_max",
    "candidate_cap",
    "warmup",
    "threshold",
    "eta_plus",
    "eta_minus",
    "w_min",
    "w_init_new",
    "p_frag",
    "decay_factor",
    "family",
    "sigma_scale",
    "kappa",
    "sigma_base",
    "w_reward",
    "w_cost",
    "cost_explore",
    "cost_exploit",
    "cost_idle",
    "fitness_as_reward",
    "regret_units",
    "output_dir",
];

fn out_of_range(key: &'static str, value: impl ToString, expected: &'static str) -> ConfigError {
    ConfigError::OutOfRange { key, value: value.to_string(), expected }
}

fn check(ok: bool, key: &'static str, value: impl ToString, expected: &'static str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(out_of_range(key, value, expected))
    }
}

fn open01(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

fn closed01(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn nonneg(x: f64) -> bool {
    x >= 0.0 && x.is_finite()
}

impl SimConfig {
    /// Range-checks every field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.n_agents >= 2, "n_agents", self.n_agents, "N >= 2")?;
        check(self.horizon >= 1, "horizon", self.horizon, "T >= 1")?;
        check(self.trials >= 1, "trials", self.trials, "K >= 1")?;
        check(closed01(self.density), "density", self.density, "density ∈ [0, 1]")?;
        check(self.stats_interval >= 1, "stats_interval", self.stats_interval, "stats_interval >= 1")?;

        check(open01(self.alpha), "alpha", self.alpha, "α ∈ (0, 1)")?;
        check(open01(self.gamma), "gamma", self.gamma, "γ ∈ (0, 1)")?;
        check(self.ucb_c > 0.0 && self.ucb_c.is_finite(), "ucb_c", self.ucb_c, "c > 0")?;
        check(self.epsilon0 > 0.0 && self.epsilon0 <= 1.0, "epsilon0", self.epsilon0, "ε0 ∈ (0, 1]")?;
        check(self.memory_cap >= 1, "memory_cap", self.memory_cap, "M >= 1")?;
        check(self.candidate_cap >= 1, "candidate_cap", self.candidate_cap, "L >= 1")?;
        check(self.v_min.is_finite(), "v_min", self.v_min, "finite V_min < V_max")?;
        check(self.v_max.is_finite() && self.v_max > self.v_min, "v_max", self.v_max, "finite V_max > V_min")?;

        check(closed01(self.threshold), "threshold", self.threshold, "θ ∈ [0, 1]")?;
        check(nonneg(self.eta_plus), "eta_plus", self.eta_plus, "η+ >= 0")?;
        check(nonneg(self.eta_minus), "eta_minus", self.eta_minus, "η- >= 0")?;
        check(open01(self.w_min), "w_min", self.w_min, "w_min ∈ (0, 1)")?;
        check(
            self.w_init_new > 0.0 && self.w_init_new <= 1.0,
            "w_init_new",
            self.w_init_new,
            "w_init_new ∈ (0, 1]",
        )?;
        check(closed01(self.p_frag), "p_frag", self.p_frag, "p_frag ∈ [0, 1]")?;
        check(open01(self.decay_factor), "decay_factor", self.decay_factor, "λ ∈ (0, 1)")?;

        check(nonneg(self.sigma_scale), "sigma_scale", self.sigma_scale, "sigma_scale >= 0")?;
        check(self.kappa > 0.0 && self.kappa.is_finite(), "kappa", self.kappa, "κ > 0")?;
        check(nonneg(self.sigma_base), "sigma_base", self.sigma_base, "σ_base >= 0")?;
        if self.family == RewardFamily::Beta {
            check(
                self.sigma_scale > 0.0,
                "sigma_scale",
                self.sigma_scale,
                "sigma_scale > 0 for the beta family (zero gives infinite concentration)",
            )?;
        }

        check(nonneg(self.w_reward), "w_reward", self.w_reward, "w_R >= 0")?;
        check(nonneg(self.w_cost), "w_cost", self.w_cost, "w_C >= 0")?;
        check(nonneg(self.cost_explore), "cost_explore", self.cost_explore, "cost_explore >= 0")?;
        check(nonneg(self.cost_exploit), "cost_exploit", self.cost_exploit, "cost_exploit >= 0")?;
        check(nonneg(self.cost_idle), "cost_idle", self.cost_idle, "cost_idle >= 0")?;
        Ok(())
    }

    pub fn learner_params(&self) -> LearnerParams {
        LearnerParams {
            alpha: self.alpha,
            gamma: self.gamma,
            ucb_c: self.ucb_c,
            epsilon0: self.epsilon0,
            memory_cap: self.memory_cap,
            candidate_cap: self.candidate_cap,
            v_min: self.v_min,
            v_max: self.v_max,
        }
    }

    pub fn edge_params(&self) -> EdgeParams {
        EdgeParams {
            threshold: self.threshold,
            eta_plus: self.eta_plus,
            eta_minus: self.eta_minus,
            w_min: self.w_min,
            w_init_new: self.w_init_new,
        }
    }

    pub fn reward_shape(&self) -> RewardShape {
        RewardShape {
            family: self.family,
            sigma_scale: self.sigma_scale,
            kappa: self.kappa,
            sigma_base: self.sigma_base,
        }
    }

    pub fn fitness_params(&self) -> FitnessParams {
        FitnessParams {
            w_reward: self.w_reward,
            w_cost: self.w_cost,
            cost_explore: self.cost_explore,
            cost_exploit: self.cost_exploit,
            cost_idle: self.cost_idle,
        }
    }

    /// Graph snapshot times: 0, 100, 300 and T, those not beyond T.
    pub fn snapshot_steps(&self) -> Vec<u64> {
        let mut steps: Vec<u64> = [0, 100, 300, self.horizon].into_iter().filter(|&s| s <= self.horizon).collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    /// Serialized form with every key present.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("SimConfig always serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| ConfigError::Parse { origin: "config".into(), message: e.to_string() })?;
        finish(table)
    }

    /// Applies `key=value` overrides, then validates.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table = toml::Table::try_from(self).expect("SimConfig always serializes");
        apply_overrides(&mut table, overrides)?;
        finish(table)
    }
}

fn from_table(table: toml::Table) -> Result<SimConfig, ConfigError> {
    if let Some(key) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let config: SimConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse { origin: "config".into(), message: e.to_string() })?;
    config.validate()?;
    Ok(config)
}

fn parse_override_value(raw: &str) -> toml::Value {
    // Bare words (policy names, paths) are taken as strings.
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), ConfigError> {
    for item in overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| ConfigError::MalformedOverride(item.clone()))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        table.insert(key.to_string(), parse_override_value(value.trim()));
    }
    Ok(())
}

fn defaults_table() -> toml::Table {
    toml::Table::try_from(SimConfig::default()).expect("SimConfig always serializes")
}

// `p_frag = 1` is a valid way to write a real-valued key.
fn coerce_integers(table: &mut toml::Table) {
    let defaults = defaults_table();
    for (key, value) in table.iter_mut() {
        if let (Some(toml::Value::Float(_)), toml::Value::Integer(i)) = (defaults.get(key), &*value) {
            *value = toml::Value::Float(*i as f64);
        }
    }
}

fn finish(mut table: toml::Table) -> Result<SimConfig, ConfigError> {
    for (key, value) in defaults_table() {
        table.entry(key).or_insert(value);
    }
    coerce_integers(&mut table);
    from_table(table)
}

/// Loads `path` (if any), applies `overrides` and validates the result.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<SimConfig, ConfigError> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| ConfigError::Unreadable { path: p.to_path_buf(), source })?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| ConfigError::Parse { origin: p.display().to_string(), message: e.to_string() })?
        }
        None => toml::Table::new(),
    };
    if let Some(key) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    apply_overrides(&mut table, overrides)?;
    finish(table)
}
