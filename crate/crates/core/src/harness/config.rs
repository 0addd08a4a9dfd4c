//! Experiment configuration and its canonical hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::activation::TrainConfig;
use crate::evaluation::UtilityWeights;
use crate::intent::{CASE_STUDY_INTENT, DEFAULT_CLUSTERS};
use crate::optimizer::OptimizerConfig;
use crate::physics::{self, Area, ChannelParams, NetworkScenario, Position3D, UavNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pipeline {
    #[serde(rename = "cot")]
    Cot,
    #[serde(rename = "non_cot", alias = "non-cot")]
    NonCot,
}

impl Pipeline {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pipeline::Cot => "cot",
            Pipeline::NonCot => "non_cot",
        }
    }

    /// Accepts `cot`, `non_cot` and `non-cot`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cot" => Some(Pipeline::Cot),
            "non_cot" | "non-cot" => Some(Pipeline::NonCot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    Http,
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mock" => Some(BackendKind::Mock),
            "http" => Some(BackendKind::Http),
            _ => None,
        }
    }
}

/// Everything about a scenario except the user draw and the range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioTemplate {
    pub area_m: Area,
    pub user_count: usize,
    pub channel: ChannelParams,
    pub altitude_m: f64,
    pub max_tx_power_dbm: f64,
}

impl Default for ScenarioTemplate {
    fn default() -> Self {
        Self {
            area_m: Area::default(),
            user_count: 10,
            channel: ChannelParams::default(),
            altitude_m: physics::DEFAULT_ALTITUDE_M,
            max_tx_power_dbm: physics::DEFAULT_MAX_TX_POWER_DBM,
        }
    }
}

impl ScenarioTemplate {
    /// Users drawn from `seed`, one UAV at the area center at full power.
    pub fn instantiate(&self, seed: u64, range_m: f64) -> physics::Result<NetworkScenario> {
        let users = physics::generate_users(seed, self.user_count, self.area_m)?;
        let (cx, cy) = self.area_m.center();
        let scenario = NetworkScenario {
            area_m: self.area_m,
            users,
            uavs: vec![UavNode {
                id: 0,
                position: Position3D::new(cx, cy, self.altitude_m),
                tx_power_dbm: self.max_tx_power_dbm,
                comm_range_m: range_m,
            }],
            channel: self.channel,
            max_tx_power_dbm: self.max_tx_power_dbm,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioTemplate,
    pub intent: String,
    pub clusters: usize,
    pub range_sweep: Vec<f64>,
    pub seeds: Vec<u64>,
    pub pipelines: Vec<Pipeline>,
    pub backend: BackendKind,
    pub weights: UtilityWeights,
    pub optimizer: OptimizerConfig,
    pub activation: TrainConfig,
    /// Base of the per-cell random streams.
    pub config_seed: u64,
    /// Extra attempts after a failed HTTP request.
    pub retries: u32,
    pub timeout_s: u64,
    pub llm_model: String,
    pub embed_model: String,
    /// Trained activation policy to load instead of training one.
    pub policy_path: Option<PathBuf>,
    /// JSONL exemplar store merged into the built-in modules.
    pub exemplar_store: Option<PathBuf>,
    /// Runs at or above this `q_total` are appended to the exemplar store by `simulate`.
    pub feedback_threshold: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioTemplate::default(),
            intent: CASE_STUDY_INTENT.to_string(),
            clusters: DEFAULT_CLUSTERS,
            range_sweep: (0..8).map(|i| 200.0 + 50.0 * i as f64).collect(),
            seeds: (0..10).collect(),
            pipelines: vec![Pipeline::Cot, Pipeline::NonCot],
            backend: BackendKind::Mock,
            weights: UtilityWeights::default(),
            optimizer: OptimizerConfig::default(),
            activation: TrainConfig::default(),
            config_seed: 0,
            retries: 2,
            timeout_s: 60,
            llm_model: "gpt-4o".into(),
            embed_model: "text-embedding-3-small".into(),
            policy_path: None,
            exemplar_store: None,
            feedback_threshold: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.pipelines.is_empty() {
            return bad("pipelines must not be empty".into());
        }
        if let Some(r) = self.range_sweep.iter().find(|r| !(200.0..=600.0).contains(*r)) {
            return bad(format!("range {r} m outside [200, 600] m"));
        }
        if self.scenario.user_count == 0 {
            return bad("user_count must be at least 1".into());
        }
        if !(self.scenario.altitude_m > 0.0 && self.scenario.altitude_m.is_finite()) {
            return bad("altitude_m must be positive".into());
        }
        if !(self.weights.alpha >= 0.0 && self.weights.beta >= 0.0) {
            return bad("utility weights must be non-negative".into());
        }
        if self.clusters == 0 {
            return bad("clusters must be at least 1".into());
        }
        if self.intent.trim().is_empty() {
            return bad("intent must not be empty".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (object keys sorted), hex encoded.
    /// Independent of the key order of the file the config came from.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical_json(&value).as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// Compact JSON with object keys in sorted order at every level.
pub fn canonical_json(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical_json(&map[k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(canonical_json).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}
