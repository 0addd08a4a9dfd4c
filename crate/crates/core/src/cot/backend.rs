//! LLM backends: an OpenAI-compatible chat adapter and two offline mocks.
//!
//! The mock CoT backend reads the scenario and stage list back out of the
//! prompt, actually runs each stage against the simulator and optimizer, and
//! writes the reply as numbered steps followed by a ```strategy block. The
//! reply then goes through [`parse_reply`] exactly like a live reply would.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::prompt::{INTENT_PREFIX, MODULE_PREFIX, QUESTION_PREFIX, SCENARIO_FENCE, STAGE_PREFIX};
use super::{
    ControlCommand, CotError, PromptBundle, ReasoningStage, ReasoningTrace, Result, TaskTag, TokenUsage,
    CASE_STUDY_STAGES,
};
use crate::evaluation;
use crate::http::{join_url, JsonClient};
use crate::intent::{parse_intent, IntentText, Objective};
use crate::optimizer::{self, DeploymentDecision, OptimizerConfig, ParetoFloor};
use crate::physics::{self, NetworkMetrics, NetworkScenario, Position3D};

/// Opening delimiter of the structured answer block.
pub const STRATEGY_FENCE: &str = "```strategy";

pub trait LlmBackend: Send + Sync {
    fn id(&self) -> &str;
    fn invoke(&self, prompt: &PromptBundle) -> Result<ReasoningTrace>;
}

pub fn render_strategy_block(command: &ControlCommand) -> String {
    format!("{STRATEGY_FENCE}\n{}\n```", command.to_json())
}

fn numbered(line: &str) -> bool {
    let t = line.trim_start();
    let digits = t.chars().take_while(|c| c.is_ascii_digit()).count();
    digits > 0 && matches!(t[digits..].chars().next(), Some('.') | Some(')'))
}

/// Splits a reply into reasoning steps and the final ```strategy block.
///
/// Steps start at numbered lines (`1.` or `1)`), with following unnumbered
/// lines folded in. Without numbering, blank-line paragraphs are steps, and
/// text with neither becomes one step.
pub fn parse_reply(text: &str) -> Result<(Vec<String>, String)> {
    let start = text.find(STRATEGY_FENCE).ok_or(CotError::MalformedReply)?;
    let after = &text[start + STRATEGY_FENCE.len()..];
    let end = after.find("```").map_or(text.len(), |i| start + STRATEGY_FENCE.len() + i + 3);
    let final_block = text[start..end].trim().to_string();
    let reasoning = &text[..start];

    let mut steps: Vec<String> = Vec::new();
    if reasoning.lines().any(numbered) {
        for line in reasoning.lines().map(str::trim).filter(|l| !l.is_empty()) {
            match steps.last_mut() {
                Some(last) if !numbered(line) => {
                    last.push(' ');
                    last.push_str(line);
                }
                _ => steps.push(line.to_string()),
            }
        }
    } else {
        let mut para = String::new();
        for line in reasoning.lines().map(str::trim) {
            if line.is_empty() {
                if !para.is_empty() {
                    steps.push(std::mem::take(&mut para));
                }
            } else {
                if !para.is_empty() {
                    para.push(' ');
                }
                para.push_str(line);
            }
        }
        if !para.is_empty() {
            steps.push(para);
        }
    }
    Ok((steps, final_block))
}

/// What the mock backends can recover from a prompt bundle.
struct PromptView {
    scenario: NetworkScenario,
    objectives: BTreeSet<Objective>,
    tag: TaskTag,
    stages: Vec<ReasoningStage>,
    seed: Option<u64>,
}

fn read_prompt(prompt: &PromptBundle) -> Result<PromptView> {
    let summary = &prompt.scenario_summary;
    let start = summary.find(SCENARIO_FENCE).ok_or(CotError::MalformedPrompt("the scenario block"))?;
    let body = &summary[start + SCENARIO_FENCE.len()..];
    let body = &body[..body.find("```").ok_or(CotError::MalformedPrompt("the end of the scenario block"))?];
    let scenario: NetworkScenario =
        serde_json::from_str(body.trim()).map_err(|_| CotError::MalformedPrompt("a readable scenario"))?;
    scenario.validate()?;

    let task = &prompt.task_instruction;
    let request = task
        .lines()
        .find_map(|l| l.strip_prefix(INTENT_PREFIX).or_else(|| l.strip_prefix(QUESTION_PREFIX)))
        .unwrap_or_default()
        .trim()
        .to_string();
    let tag = task
        .lines()
        .find_map(|l| l.strip_prefix(MODULE_PREFIX))
        .and_then(|rest| TaskTag::parse(rest.split_whitespace().next().unwrap_or_default()))
        .unwrap_or(TaskTag::Joint);
    let stages: Vec<ReasoningStage> = task
        .lines()
        .filter_map(|l| l.strip_prefix(STAGE_PREFIX))
        .filter_map(|rest| rest.split(':').nth(1))
        .filter_map(ReasoningStage::from_label)
        .collect();
    let stages = if stages.is_empty() { CASE_STUDY_STAGES.to_vec() } else { stages };
    let objectives = IntentText::new(0, request)
        .ok()
        .and_then(|t| parse_intent(&t, 0).ok())
        .map(|p| p.objectives)
        .unwrap_or_default();
    Ok(PromptView { scenario, objectives, tag, stages, seed: prompt.seed })
}

/// Deterministic backend that performs the reasoning stages itself.
#[derive(Debug, Clone, Default)]
pub struct MockCotBackend {
    pub optimizer: OptimizerConfig,
}

impl MockCotBackend {
    pub fn new(optimizer: OptimizerConfig) -> Self {
        Self { optimizer }
    }

    /// The current UAV configuration, when it is itself a valid decision.
    fn current_deployment(s: &NetworkScenario) -> Option<DeploymentDecision> {
        let d = DeploymentDecision {
            uav_positions: s.uavs.iter().map(|u| u.position).collect(),
            tx_powers_dbm: s.uavs.iter().map(|u| u.tx_power_dbm).collect(),
        };
        d.validate(s).is_ok().then_some(d)
    }

    /// Runs the solving stage. When the intent names several objectives, only
    /// decisions that keep every one of them at least at the current
    /// configuration's level are accepted.
    fn solve(&self, view: &PromptView) -> Result<(DeploymentDecision, &'static str)> {
        let s = &view.scenario;
        let max = s.max_tx_power_dbm;
        let cfg = OptimizerConfig { seed: view.seed.unwrap_or(self.optimizer.seed), ..self.optimizer };
        let guard = if view.objectives.len() > 1 { Self::current_deployment(s) } else { None };
        let search = |cfg: &OptimizerConfig| -> Result<DeploymentDecision> {
            Ok(match &guard {
                Some(current) => optimizer::optimize_deployment_guarded(s, cfg, current)?.decision,
                None => optimizer::optimize_deployment(s, cfg)?,
            })
        };
        let (decision, method) = match view.tag {
            TaskTag::Joint => (search(&cfg)?, "grid and pattern search over positions and powers"),
            TaskTag::Deployment => {
                let mut d = search(&cfg)?;
                d.tx_powers_dbm = vec![max; s.uavs.len()];
                (d, "grid and pattern search over positions at full power")
            }
            TaskTag::PowerControl => {
                let (cx, cy) = s.area_m.center();
                let positions: Vec<Position3D> = s.uavs.iter().map(|u| Position3D::new(cx, cy, u.position.z)).collect();
                let mut best: Option<(DeploymentDecision, f64)> = None;
                let mut level = 0.0;
                while level <= max + 1e-9 {
                    let p = level.min(max);
                    let d = DeploymentDecision { uav_positions: positions.clone(), tx_powers_dbm: vec![p; s.uavs.len()] };
                    let obj = optimizer::wireless_objective(s, &d)?;
                    if best.as_ref().is_none_or(|(_, b)| obj > *b) {
                        best = Some((d, obj));
                    }
                    level += self.optimizer.power_step_db;
                }
                (best.expect("at least one power level").0, "power sweep with the UAV held at the area center")
            }
            TaskTag::Generic => (optimizer::centroid_baseline(s), "placement at the user centroid at full power"),
        };
        if let Some(current) = guard {
            let floor = ParetoFloor::of(&physics::evaluate_scenario(&current.apply(s)?)?);
            if !floor.admits(&physics::evaluate_scenario(&decision.apply(s)?)?) {
                return Ok((current, "keeping the current configuration, since the candidate lowers a named objective"));
            }
        }
        Ok((decision, method))
    }

    fn stage_text(
        &self,
        stage: ReasoningStage,
        view: &PromptView,
        decision: &DeploymentDecision,
        method: &str,
        metrics: &NetworkMetrics,
    ) -> Result<String> {
        let s = &view.scenario;
        let ch = &s.channel;
        Ok(match stage {
            ReasoningStage::IntentTranslation => {
                if view.objectives.is_empty() {
                    "Intent translation: no specific objective is recognized, so coverage and rate are balanced as the goal.".into()
                } else {
                    let goals: Vec<&str> = view.objectives.iter().map(Objective::goal_phrase).collect();
                    let mut t = format!("Intent translation: the intent asks for {}; these are the quantifiable goals", goals.join(" and "));
                    if view.objectives.len() > 1 {
                        t.push_str(", and no goal may fall below its current level");
                    }
                    t.push('.');
                    t
                }
            }
            ReasoningStage::ParameterExtraction => format!(
                "Parameter extraction: {} user coordinates in a {} x {} m area, carrier {} GHz, bandwidth {} MHz, \
                 altitude {} m, power cap {} dBm, communication range {} m; noise power = {:.2} dBm.",
                s.users.len(),
                s.area_m.width,
                s.area_m.height,
                ch.carrier_freq_hz / 1e9,
                ch.bandwidth_hz / 1e6,
                s.altitude_m(),
                s.max_tx_power_dbm,
                s.uavs[0].comm_range_m,
                ch.noise_power_dbm()?,
            ),
            ReasoningStage::ProblemFormulation => {
                let alt = s.altitude_m();
                format!(
                    "Problem formulation: maximize Q_c + Q_R where the SINR follows FSPL (path loss = {:.2} dB at {alt:.1} m \
                     at nadir) and each covered user gets the Shannon rate B log2(1 + SINR) over an equal bandwidth share; \
                     the normalizing nadir rate is {:.2} Mbps.",
                    physics::fspl_db(alt, ch.carrier_freq_hz)?,
                    evaluation::reference_rate_bps(s)? / 1e6,
                )
            }
            ReasoningStage::Solving => {
                let mut text = format!("Solving: {method}");
                for (i, (p, w)) in decision.uav_positions.iter().zip(&decision.tx_powers_dbm).enumerate() {
                    text.push_str(&format!(
                        "; place UAV {i} at position ({:.2}, {:.2}) with transmit power = {:.2} dBm",
                        p.x, p.y, w
                    ));
                }
                let nearest = (0..s.users.len())
                    .filter(|&i| metrics.covered_flags[i])
                    .min_by(|&a, &b| {
                        let da = decision.uav_positions[metrics.serving_uav[a]].distance(&s.users[a].position);
                        let db = decision.uav_positions[metrics.serving_uav[b]].distance(&s.users[b].position);
                        da.total_cmp(&db)
                    });
                if let Some(i) = nearest {
                    let d = decision.uav_positions[metrics.serving_uav[i]].distance(&s.users[i].position);
                    text.push_str(&format!("; distance to user {} = {d:.2} m", s.users[i].id));
                }
                text.push('.');
                text
            }
            ReasoningStage::UtilityComputation => {
                let (q_c, q_r) = evaluation::q_wireless(metrics, s)?;
                format!(
                    "Utility computation: coverage = {:.4}, sum rate = {:.4} Mbps, Q_R = {q_r:.4}; the wireless part of the \
                     composite utility is Q_c + Q_R = {:.4}.",
                    metrics.coverage_ratio,
                    metrics.sum_rate_bps / 1e6,
                    q_c + q_r,
                )
            }
        })
    }

    /// The full reply text the mock produces for a prompt.
    pub fn reply_text(&self, prompt: &PromptBundle) -> Result<String> {
        let view = read_prompt(prompt)?;
        let (decision, method) = self.solve(&view)?;
        let metrics = physics::evaluate_scenario(&decision.apply(&view.scenario)?)?;
        let mut text = String::new();
        for (i, stage) in view.stages.iter().enumerate() {
            text.push_str(&format!("{}. {}\n", i + 1, self.stage_text(*stage, &view, &decision, method, &metrics)?));
        }
        text.push('\n');
        text.push_str(&render_strategy_block(&ControlCommand::from_decision(&decision)));
        Ok(text)
    }
}

impl LlmBackend for MockCotBackend {
    fn id(&self) -> &str {
        "mock-cot"
    }

    fn invoke(&self, prompt: &PromptBundle) -> Result<ReasoningTrace> {
        let (steps, final_block) = parse_reply(&self.reply_text(prompt)?)?;
        Ok(ReasoningTrace { steps, final_block, backend_id: self.id().into(), token_usage: None, latency_ms: 0 })
    }
}

/// Deterministic non-reasoning backend: area center, full power, no steps.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockDirectBackend;

impl LlmBackend for MockDirectBackend {
    fn id(&self) -> &str {
        "mock-non-cot"
    }

    fn invoke(&self, prompt: &PromptBundle) -> Result<ReasoningTrace> {
        let view = read_prompt(prompt)?;
        let s = &view.scenario;
        let (cx, cy) = s.area_m.center();
        let command = ControlCommand {
            uav_positions: vec![(cx, cy); s.uavs.len()],
            tx_powers_dbm: vec![s.max_tx_power_dbm; s.uavs.len()],
            assignments: None,
        };
        Ok(ReasoningTrace {
            steps: vec![],
            final_block: render_strategy_block(&command),
            backend_id: self.id().into(),
            token_usage: None,
            latency_ms: 0,
        })
    }
}

/// OpenAI-compatible chat-completions adapter.
#[derive(Debug, Clone)]
pub struct HttpChatBackend {
    base_url: String,
    model: String,
    temperature: f64,
    client: JsonClient,
    id: String,
}

impl HttpChatBackend {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

    pub fn new(
        base_url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
        retries: u32,
    ) -> Result<Self> {
        let model = model.into();
        Ok(Self {
            base_url: base_url.into(),
            id: format!("http:{model}"),
            model,
            temperature: 0.0,
            client: JsonClient::new(api_key, timeout, retries)?,
        })
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn request_body(&self, prompt: &PromptBundle) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt.system_preamble},
                {"role": "user", "content": prompt.user_message()},
            ],
            "temperature": self.temperature,
        });
        if let Some(seed) = prompt.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

impl LlmBackend for HttpChatBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn invoke(&self, prompt: &PromptBundle) -> Result<ReasoningTrace> {
        let started = Instant::now();
        let reply = self.client.post(&join_url(&self.base_url, "v1/chat/completions"), &self.request_body(prompt))?;
        let content = reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or(CotError::MalformedReply)?;
        let token_usage = reply.get("usage").and_then(|u| {
            Some(TokenUsage {
                prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
                completion_tokens: u.get("completion_tokens")?.as_u64()?,
            })
        });
        let (steps, final_block) = parse_reply(content)?;
        Ok(ReasoningTrace {
            steps,
            final_block,
            backend_id: self.id.clone(),
            token_usage,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cot::{compose_direct_prompt, compose_prompt, default_modules, extract_strategy};
    use crate::intent::CASE_STUDY_INTENT;
    use crate::physics::{generate_users, Area, UserTerminal};

    fn intent() -> crate::intent::ParsedIntent {
        parse_intent(&IntentText::new(0, CASE_STUDY_INTENT).unwrap(), 0).unwrap()
    }

    #[test]
    fn numbered_steps_with_continuations() {
        let (steps, block) = parse_reply("Intro\n1. first\n  more\n2) second\n\n```strategy\n{}\n```\ntrailing").unwrap();
        assert_eq!(steps, vec!["Intro", "1. first more", "2) second"]);
        assert_eq!(block, "```strategy\n{}\n```");
    }

    #[test]
    fn paragraph_and_single_step_fallbacks() {
        let (steps, _) = parse_reply("alpha\nbeta\n\ngamma\n```strategy {} ```").unwrap();
        assert_eq!(steps, vec!["alpha beta", "gamma"]);
        let (steps, _) = parse_reply("just one thought ```strategy {}```").unwrap();
        assert_eq!(steps, vec!["just one thought"]);
        let (steps, _) = parse_reply("```strategy {}```").unwrap();
        assert!(steps.is_empty());
    }

    #[test]
    fn missing_block_is_malformed() {
        assert!(matches!(parse_reply("1. think\n2. answer 42"), Err(CotError::MalformedReply)));
    }

    #[test]
    fn mock_cot_places_uav_above_single_user() {
        let s = NetworkScenario::single_uav(vec![UserTerminal { id: 0, position: Position3D::new(320.0, 710.0, 0.0) }], 300.0);
        let joint = default_modules().remove(2);
        let trace = MockCotBackend::default().invoke(&compose_prompt(&joint, &intent(), &s)).unwrap();
        assert_eq!(trace.steps.len(), 5);
        let cmd = extract_strategy(&trace, &s).unwrap();
        let (x, y) = cmd.uav_positions[0];
        assert!((x - 320.0).abs() <= 1.0 && (y - 710.0).abs() <= 1.0, "({x}, {y})");
        assert_eq!(cmd.tx_powers_dbm, vec![20.0]);
    }

    #[test]
    fn mock_cot_is_deterministic_and_round_trips() {
        let s = NetworkScenario::single_uav(generate_users(42, 10, Area::default()).unwrap(), 400.0);
        let b = MockCotBackend::default();
        for m in default_modules() {
            let p = compose_prompt(&m, &intent(), &s);
            let t1 = b.invoke(&p).unwrap();
            assert_eq!(t1, b.invoke(&p).unwrap());
            assert_eq!(t1.steps.len(), m.step_template.len());
            for (step, stage) in t1.steps.iter().zip(&m.step_template) {
                assert!(stage.matches(step), "{stage:?}: {step}");
            }
            extract_strategy(&t1, &s).unwrap();
        }
    }

    #[test]
    fn mock_direct_uses_area_center() {
        let s = NetworkScenario::single_uav(generate_users(42, 10, Area::default()).unwrap(), 400.0);
        let t = MockDirectBackend.invoke(&compose_direct_prompt(&intent(), &s)).unwrap();
        assert!(t.steps.is_empty());
        let cmd = extract_strategy(&t, &s).unwrap();
        assert_eq!(cmd.uav_positions, vec![(500.0, 500.0)]);
        assert_eq!(cmd.tx_powers_dbm, vec![20.0]);
    }

    #[test]
    fn mock_rejects_prompt_without_scenario() {
        let s = NetworkScenario::single_uav(generate_users(1, 3, Area::default()).unwrap(), 400.0);
        let mut p = compose_direct_prompt(&intent(), &s);
        p.scenario_summary = "nothing here".into();
        assert!(matches!(MockDirectBackend.invoke(&p), Err(CotError::MalformedPrompt(_))));
    }
}
