//! Chain-of-thought reasoning: module registry, prompt composition, LLM
//! backends (live and mock), Auto-CoT exemplar construction, and strategy
//! extraction from a reply's structured block.

mod backend;
mod exemplars;
mod prompt;
mod strategy;

pub use backend::{
    parse_reply, render_strategy_block, HttpChatBackend, LlmBackend, MockCotBackend, MockDirectBackend,
    STRATEGY_FENCE,
};
pub use exemplars::{build_auto_cot_exemplars, ExemplarStore};
pub use prompt::{compose_direct_prompt, compose_prompt, compose_zero_shot_prompt, PromptBundle, ZERO_SHOT_TRIGGER};
pub use strategy::{extract_strategy, strategy_schema};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::TransportError;
use crate::intent::{IntentError, Objective};
use crate::optimizer::{DeploymentDecision, OptimizerError};
use crate::physics::{NetworkScenario, PhysicsError, Position3D};

#[derive(Debug, Error)]
pub enum CotError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("backend reply has no ```strategy block")]
    MalformedReply,
    #[error("prompt is missing {0}")]
    MalformedPrompt(&'static str),
    #[error("strategy block is not a JSON object: {0}")]
    Parse(String),
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("exemplar store I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl CotError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        CotError::Validation { field: field.to_string(), message: message.into() }
    }

    /// True for errors the harness answers with the baseline fallback.
    pub fn is_extraction_failure(&self) -> bool {
        matches!(self, CotError::MalformedReply | CotError::Parse(_) | CotError::Validation { .. })
    }
}

pub type Result<T> = std::result::Result<T, CotError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTag {
    Deployment,
    PowerControl,
    Joint,
    Generic,
}

impl TaskTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskTag::Deployment => "deployment",
            TaskTag::PowerControl => "power_control",
            TaskTag::Joint => "joint",
            TaskTag::Generic => "generic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [TaskTag::Deployment, TaskTag::PowerControl, TaskTag::Joint, TaskTag::Generic]
            .into_iter()
            .find(|t| t.as_str() == s)
    }

    /// Tag implied by a set of parsed objectives.
    pub fn for_objectives<'a>(objectives: impl IntoIterator<Item = &'a Objective>) -> Self {
        let set: Vec<Objective> = objectives.into_iter().copied().collect();
        let has = |o| set.contains(&o);
        match (has(Objective::Coverage), has(Objective::SumRate), has(Objective::Energy)) {
            (true, true, _) => TaskTag::Joint,
            (true, false, false) => TaskTag::Deployment,
            (_, _, true) | (false, true, _) => TaskTag::PowerControl,
            _ => TaskTag::Generic,
        }
    }
}

/// A named reasoning stage and the vocabulary that marks a step as covering it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasoningStage {
    IntentTranslation,
    ParameterExtraction,
    ProblemFormulation,
    Solving,
    UtilityComputation,
}

impl ReasoningStage {
    pub const ALL: [ReasoningStage; 5] = CASE_STUDY_STAGES;

    pub fn label(&self) -> &'static str {
        match self {
            ReasoningStage::IntentTranslation => "intent translation",
            ReasoningStage::ParameterExtraction => "parameter extraction",
            ReasoningStage::ProblemFormulation => "problem formulation",
            ReasoningStage::Solving => "solving",
            ReasoningStage::UtilityComputation => "utility computation",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.label() == s.trim().to_lowercase())
    }

    pub fn instruction(&self) -> &'static str {
        match self {
            ReasoningStage::IntentTranslation => {
                "translate the high-level intent into quantifiable goals"
            }
            ReasoningStage::ParameterExtraction => "extract user coordinates and wireless parameters from the inputs",
            ReasoningStage::ProblemFormulation => {
                "formulate the optimization using FSPL-based SINR and Shannon capacity"
            }
            ReasoningStage::Solving => {
                "solve for UAV positions and transmit powers under coverage and interference constraints"
            }
            ReasoningStage::UtilityComputation => {
                "compute the utility from coverage ratio, sum rate and reasoning quality"
            }
        }
    }

    fn keywords(&self) -> &'static [&'static str] {
        match self {
            ReasoningStage::IntentTranslation => &["intent", "objective", "goal"],
            ReasoningStage::ParameterExtraction => &["parameter", "extract", "coordinates"],
            ReasoningStage::ProblemFormulation => &["formulat", "sinr", "shannon", "fspl", "path loss"],
            ReasoningStage::Solving => &["solv", "heuristic", "search", "place"],
            ReasoningStage::UtilityComputation => &["utility", "q_total", "composite"],
        }
    }

    /// Whether a reasoning step covers this stage (case-insensitive keyword match).
    pub fn matches(&self, step: &str) -> bool {
        let lower = step.to_lowercase();
        self.keywords().iter().any(|k| lower.contains(k))
    }
}

/// The five stages of the UAV deployment and power-control task, in order.
pub const CASE_STUDY_STAGES: [ReasoningStage; 5] = [
    ReasoningStage::IntentTranslation,
    ReasoningStage::ParameterExtraction,
    ReasoningStage::ProblemFormulation,
    ReasoningStage::Solving,
    ReasoningStage::UtilityComputation,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarRecord {
    pub question: String,
    pub reasoning_chain: Vec<String>,
    pub answer: String,
    pub tag: TaskTag,
}

impl ExemplarRecord {
    pub fn validate(&self) -> Result<()> {
        if self.reasoning_chain.is_empty() {
            return Err(CotError::validation("reasoning_chain", "needs at least one step"));
        }
        if self.answer.trim().is_empty() {
            return Err(CotError::validation("answer", "must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotModuleSpec {
    pub id: usize,
    pub task_tag: TaskTag,
    pub exemplars: Vec<ExemplarRecord>,
    pub step_template: Vec<ReasoningStage>,
}

fn seed_exemplar(tag: TaskTag) -> ExemplarRecord {
    let (question, chain, answer): (&str, &[&str], &str) = match tag {
        TaskTag::Deployment => (
            "Place one UAV to cover three users at (100, 100), (140, 120) and (120, 160) in a 1000 x 1000 m area.",
            &[
                "1. Intent translation: the goal is coverage maximization.",
                "2. Parameter extraction: three users clustered near (120, 127); UAV altitude 100 m.",
                "3. Solving: place the UAV above the user centroid, position (120, 127), at full power.",
            ],
            r#"{"uav_positions":[[120,127]],"tx_powers_dbm":[20]}"#,
        ),
        TaskTag::PowerControl => (
            "Choose the transmit power of a UAV at (500, 500) serving users within 150 m while saving energy.",
            &[
                "1. Parameter extraction: UAV position (500, 500), altitude 100 m, power cap 20 dBm.",
                "2. Problem formulation: SINR falls with FSPL; Shannon rate grows logarithmically in power.",
                "3. Solving: lower power in 2 dB steps while the edge user keeps a useful SINR; settle at 14 dBm.",
            ],
            r#"{"uav_positions":[[500,500]],"tx_powers_dbm":[14]}"#,
        ),
        TaskTag::Joint => (
            "Deploy a UAV base station for users at (200, 200), (260, 240) and (700, 650) maximizing coverage and data rate.",
            &[
                "1. Intent translation: goals are coverage maximization and sum-rate improvement.",
                "2. Parameter extraction: 3 user coordinates, 2.4 GHz carrier, 20 MHz bandwidth, altitude 100 m, power cap 20 dBm.",
                "3. Problem formulation: maximize Q_c + Q_R with FSPL-based SINR and Shannon capacity.",
                "4. Solving: grid then pattern search favours the dense pair; place the UAV near (245, 235) at full power.",
                "5. Utility computation: two of three users covered; the composite utility weighs coverage, rate and reasoning quality.",
            ],
            r#"{"uav_positions":[[245,235]],"tx_powers_dbm":[20]}"#,
        ),
        TaskTag::Generic => (
            "Configure the UAV network for a mixed set of user requests.",
            &[
                "1. Intent translation: no specific objective dominates.",
                "2. Solving: place the UAV at the user centroid with full power as a safe default.",
            ],
            r#"{"uav_positions":[[500,500]],"tx_powers_dbm":[20]}"#,
        ),
    };
    ExemplarRecord {
        question: question.to_string(),
        reasoning_chain: chain.iter().map(|s| s.to_string()).collect(),
        answer: answer.to_string(),
        tag,
    }
}

/// The four built-in modules. Ids are indices and double as RL actions.
pub fn default_modules() -> Vec<CotModuleSpec> {
    use ReasoningStage::*;
    [
        (TaskTag::Deployment, vec![IntentTranslation, ParameterExtraction, Solving]),
        (TaskTag::PowerControl, vec![ParameterExtraction, ProblemFormulation, Solving]),
        (TaskTag::Joint, CASE_STUDY_STAGES.to_vec()),
        (TaskTag::Generic, vec![IntentTranslation, Solving]),
    ]
    .into_iter()
    .enumerate()
    .map(|(id, (task_tag, step_template))| CotModuleSpec {
        id,
        task_tag,
        exemplars: vec![seed_exemplar(task_tag)],
        step_template,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub steps: Vec<String>,
    pub final_block: String,
    pub backend_id: String,
    pub token_usage: Option<TokenUsage>,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Validated deployment command. Positions are `(x, y)`; altitude comes from
/// the scenario's UAV slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub uav_positions: Vec<(f64, f64)>,
    pub tx_powers_dbm: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignments: Option<BTreeMap<u32, usize>>,
}

impl ControlCommand {
    pub fn from_decision(d: &DeploymentDecision) -> Self {
        Self {
            uav_positions: d.uav_positions.iter().map(|p| (p.x, p.y)).collect(),
            tx_powers_dbm: d.tx_powers_dbm.clone(),
            assignments: None,
        }
    }

    pub fn to_decision(&self, scenario: &NetworkScenario) -> DeploymentDecision {
        DeploymentDecision {
            uav_positions: self
                .uav_positions
                .iter()
                .zip(&scenario.uavs)
                .map(|(&(x, y), slot)| Position3D::new(x, y, slot.position.z))
                .collect(),
            tx_powers_dbm: self.tx_powers_dbm.clone(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "uav_positions": self.uav_positions.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>(),
            "tx_powers_dbm": self.tx_powers_dbm,
        });
        if let Some(a) = &self.assignments {
            v["assignments"] = serde_json::json!(a.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>());
        }
        v
    }
}
