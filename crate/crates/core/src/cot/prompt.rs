//! Prompt assembly.
//!
//! A rendered prompt is the five bundle sections joined by blank lines, in
//! field order. The scenario section carries a human-readable summary and a
//! fenced `scenario` JSON block with the full user/UAV data; the schema
//! instruction is always last.

use serde::{Deserialize, Serialize};

use super::{strategy_schema, CotModuleSpec, ExemplarRecord, ReasoningStage, STRATEGY_FENCE};
use crate::intent::ParsedIntent;
use crate::physics::NetworkScenario;

/// The zero-shot chain-of-thought trigger.
pub const ZERO_SHOT_TRIGGER: &str = "Let's think step by step.";

pub(crate) const SCENARIO_FENCE: &str = "```scenario";
pub(crate) const MODULE_PREFIX: &str = "Reasoning module: ";
pub(crate) const INTENT_PREFIX: &str = "Intent: ";
pub(crate) const QUESTION_PREFIX: &str = "Question: ";
pub(crate) const STAGE_PREFIX: &str = "Stage ";

const SYSTEM_PREAMBLE: &str = "You are a wireless network planning assistant for an intent-driven UAV network. \
You turn operator intents into concrete UAV positions and transmit powers.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_preamble: String,
    pub exemplar_block: String,
    pub scenario_summary: String,
    pub task_instruction: String,
    pub output_schema_instruction: String,
    /// Sampling seed forwarded to the backend, when the caller fixes one.
    pub seed: Option<u64>,
}

impl PromptBundle {
    pub fn render(&self) -> String {
        [
            self.system_preamble.as_str(),
            self.exemplar_block.as_str(),
            self.scenario_summary.as_str(),
            self.task_instruction.as_str(),
            self.output_schema_instruction.as_str(),
        ]
        .iter()
        .filter(|s| !s.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join("\n\n")
    }

    /// The prompt without the system preamble, sent as the user message.
    pub fn user_message(&self) -> String {
        PromptBundle { system_preamble: String::new(), ..self.clone() }.render()
    }
}

fn exemplar_block(exemplars: &[ExemplarRecord]) -> String {
    let mut out = String::new();
    for (i, e) in exemplars.iter().enumerate() {
        out.push_str(&format!("Example {}:\n{QUESTION_PREFIX}{}\n{ZERO_SHOT_TRIGGER}\n", i + 1, e.question));
        for step in &e.reasoning_chain {
            out.push_str(step);
            out.push('\n');
        }
        out.push_str(&format!("Answer: {}\n", e.answer));
        if i + 1 < exemplars.len() {
            out.push('\n');
        }
    }
    out.trim_end().to_string()
}

fn hz_label(hz: f64) -> String {
    if hz >= 1e9 {
        format!("{} GHz", hz / 1e9)
    } else if hz >= 1e6 {
        format!("{} MHz", hz / 1e6)
    } else {
        format!("{hz} Hz")
    }
}

fn scenario_summary(scenario: &NetworkScenario) -> String {
    let ch = &scenario.channel;
    let ranges: Vec<String> = scenario.uavs.iter().map(|u| format!("{} m", u.comm_range_m)).collect();
    let data = serde_json::to_string(scenario).expect("scenario serializes");
    format!(
        "Scenario:\n\
         - users: {} in a {} x {} m area\n\
         - carrier frequency: {}\n\
         - bandwidth: {}\n\
         - noise temperature: {} K\n\
         - UAV slots: {} at altitude {} m\n\
         - communication range: {}\n\
         - maximum transmit power: {} dBm\n\
         Full user and UAV data:\n{SCENARIO_FENCE}\n{data}\n```",
        scenario.users.len(),
        scenario.area_m.width,
        scenario.area_m.height,
        hz_label(ch.carrier_freq_hz),
        hz_label(ch.bandwidth_hz),
        ch.temperature_k,
        scenario.uavs.len(),
        scenario.altitude_m(),
        ranges.join(", "),
        scenario.max_tx_power_dbm,
    )
}

fn schema_instruction() -> String {
    format!(
        "End your answer with a fenced block that opens with {STRATEGY_FENCE} and closes with ``` containing \
         one JSON object that satisfies this schema:\n{}",
        serde_json::to_string(&strategy_schema()).expect("schema serializes")
    )
}

fn intent_lines(intent: &ParsedIntent) -> String {
    let goals: Vec<&str> = intent.objectives.iter().map(|o| o.as_str()).collect();
    let mut s = format!("{INTENT_PREFIX}{}\nParsed objectives: {}", intent.raw.text, goals.join(", "));
    if !intent.constraints.is_empty() {
        let c: Vec<String> = intent.constraints.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        s.push_str(&format!("\nConstraints: {}", c.join(", ")));
    }
    s
}

fn stage_lines(stages: &[ReasoningStage]) -> String {
    stages
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{STAGE_PREFIX}{}: {}: {}", i + 1, s.label(), s.instruction()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Few-shot CoT prompt for a module.
pub fn compose_prompt(module: &CotModuleSpec, intent: &ParsedIntent, scenario: &NetworkScenario) -> PromptBundle {
    let task_instruction = format!(
        "{}\n{MODULE_PREFIX}{} (id {})\nReason through the following stages in order, one numbered step per stage:\n{}\n{ZERO_SHOT_TRIGGER}",
        intent_lines(intent),
        module.task_tag.as_str(),
        module.id,
        stage_lines(&module.step_template),
    );
    PromptBundle {
        system_preamble: SYSTEM_PREAMBLE.to_string(),
        exemplar_block: exemplar_block(&module.exemplars),
        scenario_summary: scenario_summary(scenario),
        task_instruction,
        output_schema_instruction: schema_instruction(),
        seed: None,
    }
}

/// Direct-answer prompt without exemplars or reasoning stages.
pub fn compose_direct_prompt(intent: &ParsedIntent, scenario: &NetworkScenario) -> PromptBundle {
    PromptBundle {
        system_preamble: SYSTEM_PREAMBLE.to_string(),
        exemplar_block: String::new(),
        scenario_summary: scenario_summary(scenario),
        task_instruction: format!("{}\nAnswer directly with the deployment, without explanation.", intent_lines(intent)),
        output_schema_instruction: schema_instruction(),
        seed: None,
    }
}

/// Zero-shot CoT prompt for a bare question, used to generate Auto-CoT chains.
pub fn compose_zero_shot_prompt(question: &str, scenario: &NetworkScenario) -> PromptBundle {
    PromptBundle {
        system_preamble: SYSTEM_PREAMBLE.to_string(),
        exemplar_block: String::new(),
        scenario_summary: scenario_summary(scenario),
        task_instruction: format!("{QUESTION_PREFIX}{question}\n{ZERO_SHOT_TRIGGER}"),
        output_schema_instruction: schema_instruction(),
        seed: None,
    }
}
