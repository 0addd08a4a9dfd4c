//! Reasoning-module activation as a tabular, epsilon-greedy Q-learner.
//!
//! The state is the intent cluster plus three system features in `[0, 1]`,
//! each cut into [`FEATURE_BINS`] bins. Episodes are one-step contextual
//! bandits: observe a state, pick a module, receive the episode's composite
//! utility as reward.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::physics::NetworkScenario;
use crate::rng::SplitMix64;

pub const FEATURE_BINS: usize = 4;
const STATES_PER_CLUSTER: u32 = (FEATURE_BINS * FEATURE_BINS * FEATURE_BINS) as u32;

#[derive(Debug, Error)]
pub enum ActivationError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("episode environment failed: {0}")]
    Environment(String),
    #[error("malformed policy file: {0}")]
    MalformedPolicy(String),
}

pub type Result<T> = std::result::Result<T, ActivationError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationState {
    pub cluster: usize,
    /// `[user_density, range_norm, power_budget_norm]`.
    pub features: [f64; 3],
}

impl ActivationState {
    pub fn new(cluster: usize, features: [f64; 3]) -> Result<Self> {
        if features.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(ActivationError::InvalidParameter(format!("features {features:?} outside [0, 1]")));
        }
        Ok(Self { cluster, features })
    }

    /// Features of a scenario: users per km² / 100, `(range - 200) / 400`,
    /// and max power / 20 dBm, each clamped to `[0, 1]`.
    pub fn from_scenario(cluster: usize, scenario: &NetworkScenario) -> Self {
        let km2 = scenario.area_m.width * scenario.area_m.height / 1e6;
        let density = scenario.users.len() as f64 / km2 / 100.0;
        let range = scenario.uavs.first().map_or(200.0, |u| u.comm_range_m);
        let features = [
            density.clamp(0.0, 1.0),
            ((range - 200.0) / 400.0).clamp(0.0, 1.0),
            (scenario.max_tx_power_dbm / 20.0).clamp(0.0, 1.0),
        ];
        Self { cluster, features }
    }

    pub fn state_id(&self) -> u32 {
        let bin = |f: f64| ((f * FEATURE_BINS as f64) as usize).min(FEATURE_BINS - 1) as u32;
        let b = FEATURE_BINS as u32;
        self.cluster as u32 * STATES_PER_CLUSTER + bin(self.features[0]) * b * b + bin(self.features[1]) * b
            + bin(self.features[2])
    }
}

/// Sparse Q table; missing entries read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction {
    pub table: BTreeMap<(u32, usize), f64>,
    pub n_actions: usize,
}

impl QFunction {
    pub fn new(n_actions: usize) -> Self {
        Self { table: BTreeMap::new(), n_actions }
    }

    pub fn get(&self, state_id: u32, action: usize) -> f64 {
        self.table.get(&(state_id, action)).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, state_id: u32, action: usize, value: f64) {
        self.table.insert((state_id, action), value);
    }

    pub fn row(&self, state_id: u32) -> Vec<f64> {
        (0..self.n_actions).map(|a| self.get(state_id, a)).collect()
    }

    /// Argmax over actions, lowest index on ties.
    pub fn best_action(&self, state_id: u32) -> usize {
        let row = self.row(state_id);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, state_id: u32) -> f64 {
        self.row(state_id).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationPolicy {
    pub q: QFunction,
    pub epsilon: f64,
    pub seed: u64,
    rng: SplitMix64,
}

impl ActivationPolicy {
    pub fn new(q: QFunction, epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(ActivationError::InvalidParameter(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if q.n_actions == 0 {
            return Err(ActivationError::InvalidParameter("policy needs at least one action".into()));
        }
        Ok(Self { q, epsilon, seed, rng: SplitMix64::new(seed) })
    }

    /// Epsilon-greedy choice; advances the policy's own random stream.
    pub fn select_module(&mut self, state: &ActivationState) -> usize {
        if self.rng.next_f64() < self.epsilon {
            self.rng.next_index(self.q.n_actions)
        } else {
            self.greedy_action(state)
        }
    }

    pub fn greedy_action(&self, state: &ActivationState) -> usize {
        self.q.best_action(state.state_id())
    }

    pub fn to_json(&self) -> Value {
        let q: serde_json::Map<String, Value> =
            self.q.table.iter().map(|(&(s, a), &v)| (format!("{s}:{a}"), json!(v))).collect();
        json!({
            "n_actions": self.q.n_actions,
            "bins": FEATURE_BINS,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "q": q,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| ActivationError::MalformedPolicy(m.to_string());
        let n_actions = v.get("n_actions").and_then(Value::as_u64).ok_or_else(|| bad("n_actions"))? as usize;
        let bins = v.get("bins").and_then(Value::as_u64).ok_or_else(|| bad("bins"))?;
        if bins as usize != FEATURE_BINS {
            return Err(bad("bins does not match this build"));
        }
        let seed = v.get("seed").and_then(Value::as_u64).ok_or_else(|| bad("seed"))?;
        let epsilon = v.get("epsilon").and_then(Value::as_f64).unwrap_or(0.0);
        let mut q = QFunction::new(n_actions);
        for (key, val) in v.get("q").and_then(Value::as_object).ok_or_else(|| bad("q"))? {
            let (s, a) = key.split_once(':').ok_or_else(|| bad("q key must be stateId:action"))?;
            let s: u32 = s.parse().map_err(|_| bad("q state id"))?;
            let a: usize = a.parse().map_err(|_| bad("q action"))?;
            if a >= n_actions {
                return Err(bad("q action out of range"));
            }
            q.set(s, a, val.as_f64().ok_or_else(|| bad("q value"))?);
        }
        Self::new(q, epsilon, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    pub state: ActivationState,
    pub action: usize,
    pub reward: f64,
    /// `None` for a terminal transition (every bandit episode).
    pub next_state: Option<ActivationState>,
}

/// One Q-learning backup.
pub fn update_q(q: &mut QFunction, sample: &RewardSample, lr: f64, gamma: f64) -> Result<()> {
    if !(lr > 0.0 && lr <= 1.0) {
        return Err(ActivationError::InvalidParameter(format!("learning rate {lr} outside (0, 1]")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(ActivationError::InvalidParameter(format!("gamma {gamma} outside [0, 1)")));
    }
    if !sample.reward.is_finite() {
        return Err(ActivationError::InvalidParameter("reward must be finite".into()));
    }
    if sample.action >= q.n_actions {
        return Err(ActivationError::InvalidParameter(format!("action {} out of range", sample.action)));
    }
    let s = sample.state.state_id();
    let bootstrap = sample.next_state.map_or(0.0, |n| q.max_value(n.state_id()));
    let old = q.get(s, sample.action);
    q.set(s, sample.action, old + lr * (sample.reward + gamma * bootstrap - old));
    Ok(())
}

/// Source of training episodes. Must be deterministic given its own seed.
pub trait EpisodeOracle {
    fn n_actions(&self) -> usize;
    fn observe(&mut self) -> ActivationState;
    fn reward(&mut self, state: &ActivationState, action: usize) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub lr: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { episodes: 5000, lr: 0.1, gamma: 0.0, epsilon_start: 1.0, epsilon_end: 0.05, seed: 7 }
    }
}

impl TrainConfig {
    /// Linear decay from `epsilon_start` at episode 0 to `epsilon_end` at the last.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.epsilon_end;
        }
        let t = episode as f64 / (self.episodes - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// Trains against `env` and returns the greedy (`epsilon = 0`) policy.
pub fn train_activation(env: &mut dyn EpisodeOracle, cfg: &TrainConfig) -> Result<ActivationPolicy> {
    let mut policy = ActivationPolicy::new(QFunction::new(env.n_actions()), cfg.epsilon_start, cfg.seed)?;
    for ep in 0..cfg.episodes {
        policy.epsilon = cfg.epsilon_at(ep);
        let state = env.observe();
        let action = policy.select_module(&state);
        let reward = env.reward(&state, action)?;
        update_q(&mut policy.q, &RewardSample { state, action, reward, next_state: None }, cfg.lr, cfg.gamma)?;
    }
    ActivationPolicy::new(policy.q, 0.0, cfg.seed)
}

/// Single-state bandit with fixed arm means and uniform reward noise.
#[derive(Debug, Clone)]
pub struct SyntheticBandit {
    pub means: Vec<f64>,
    pub noise: f64,
    pub state: ActivationState,
    rng: SplitMix64,
}

impl SyntheticBandit {
    pub fn new(means: Vec<f64>, noise: f64, seed: u64) -> Self {
        let state = ActivationState { cluster: 0, features: [0.1, 0.5, 1.0] };
        Self { means, noise, state, rng: SplitMix64::new(seed) }
    }
}

impl EpisodeOracle for SyntheticBandit {
    fn n_actions(&self) -> usize {
        self.means.len()
    }

    fn observe(&mut self) -> ActivationState {
        self.state
    }

    fn reward(&mut self, _state: &ActivationState, action: usize) -> Result<f64> {
        let jitter = if self.noise > 0.0 { (self.rng.next_f64() * 2.0 - 1.0) * self.noise } else { 0.0 };
        Ok(self.means[action] + jitter)
    }
}
