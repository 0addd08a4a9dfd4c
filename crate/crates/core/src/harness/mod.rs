//! Experiment orchestration: single runs, range sweeps, activation training
//! and the trained-vs-random activation comparison.
//!
//! A run executes the whole decision pipeline in order: draw users, place the
//! intent in a cluster and parse it, pick a reasoning module, compose the
//! prompt, invoke the backend, extract the strategy, execute it in the
//! simulator and score it.

mod config;
mod plot;

pub use config::{canonical_json, BackendKind, ExperimentConfig, Pipeline, ScenarioTemplate};
pub use plot::{render_svg, write_csv, write_plot_data, CSV_HEADER};

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{self, ActivationError, ActivationPolicy, ActivationState, EpisodeOracle};
use crate::cot::{
    compose_direct_prompt, compose_prompt, default_modules, extract_strategy, ControlCommand, CotError, CotModuleSpec,
    ExemplarStore, HttpChatBackend, LlmBackend, MockCotBackend, MockDirectBackend, PromptBundle, ReasoningTrace, TaskTag,
    CASE_STUDY_STAGES,
};
use crate::evaluation::{self, FitnessBreakdown, UtilityReport};
use crate::http::TransportError;
use crate::intent::{self, builtin_corpus, Embedder, HashedBagOfWords, HttpEmbedder, IntentError, IntentText, ParsedIntent};
use crate::optimizer::{self, OptimizerError};
use crate::physics::{self, NetworkScenario, PhysicsError};
use crate::rng::{self, SplitMix64};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Transport(TransportError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Cot(CotError),
    #[error(transparent)]
    Intent(IntentError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 configuration, 3 transport, 4 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Transport(_) => 3,
            _ => 4,
        }
    }
}

impl From<CotError> for HarnessError {
    fn from(e: CotError) -> Self {
        match e {
            CotError::Transport(t) | CotError::Intent(IntentError::Transport(t)) => HarnessError::Transport(t),
            CotError::Intent(i) => HarnessError::Intent(i),
            CotError::Physics(p) => HarnessError::Physics(p),
            other => HarnessError::Cot(other),
        }
    }
}

impl From<IntentError> for HarnessError {
    fn from(e: IntentError) -> Self {
        match e {
            IntentError::Transport(t) => HarnessError::Transport(t),
            other => HarnessError::Intent(other),
        }
    }
}

/// Endpoint settings read from the environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvSettings {
    pub llm_api_base: Option<String>,
    pub llm_api_key: Option<String>,
    pub embed_api_base: Option<String>,
    pub embed_api_key: Option<String>,
}

impl EnvSettings {
    /// Reads `LLM_API_BASE`, `LLM_API_KEY`, `EMBED_API_BASE`, `EMBED_API_KEY`.
    pub fn from_env() -> Self {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        Self {
            llm_api_base: get("LLM_API_BASE"),
            llm_api_key: get("LLM_API_KEY"),
            embed_api_base: get("EMBED_API_BASE"),
            embed_api_key: get("EMBED_API_KEY"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub coverage_ratio: f64,
    pub sum_rate_bps: f64,
    pub covered_users: usize,
    pub user_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub range_m: f64,
    pub pipeline: Pipeline,
    pub backend_id: String,
    /// Reasoning module used by the CoT pipeline.
    pub module: Option<usize>,
    pub utility: UtilityReport,
    pub fitness: FitnessBreakdown,
    pub metrics: MetricsSummary,
    pub command: ControlCommand,
    pub trace_steps: usize,
    /// Set when strategy extraction failed and the centroid baseline was executed.
    pub extraction_error: Option<String>,
    pub wall_clock_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub range_m: f64,
    pub pipeline: Pipeline,
    pub mean_coverage: f64,
    pub mean_sum_rate_bps: f64,
    pub mean_q_total: f64,
    pub std_coverage: f64,
    pub std_sum_rate_bps: f64,
    pub std_q_total: f64,
    /// Runs aggregated into this row.
    pub n: usize,
    /// Runs of this row that failed outright.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub records: Vec<RunRecord>,
    pub errors: Vec<String>,
}

impl SweepResult {
    pub fn row(&self, range_m: f64, pipeline: Pipeline) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.range_m == range_m && r.pipeline == pipeline)
    }

    /// Relative gain of the CoT pipeline's mean sum rate over the non-CoT one.
    pub fn sum_rate_gain(&self, range_m: f64) -> Option<f64> {
        let cot = self.row(range_m, Pipeline::Cot)?;
        let base = self.row(range_m, Pipeline::NonCot)?;
        Some(cot.mean_sum_rate_bps / base.mean_sum_rate_bps - 1.0)
    }

    /// Share of runs that fell back to the baseline after an extraction error.
    pub fn fallback_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.extraction_error.is_some()).count() as f64 / self.records.len() as f64
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Reward of every module on every (range, seed) cell of a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    pub states: Vec<ActivationState>,
    pub cells: Vec<(f64, u64)>,
    /// `rewards[cell][module]` is the run's `q_total`.
    pub rewards: Vec<Vec<f64>>,
}

impl RewardTable {
    pub fn n_actions(&self) -> usize {
        self.rewards.first().map_or(0, Vec::len)
    }

    pub fn module_means(&self) -> Vec<f64> {
        (0..self.n_actions())
            .map(|a| self.rewards.iter().map(|r| r[a]).sum::<f64>() / self.rewards.len() as f64)
            .collect()
    }
}

/// Episode source for activation training: each episode draws a cell
/// uniformly and pays that cell's precomputed reward.
pub struct TableOracle<'a> {
    table: &'a RewardTable,
    rng: SplitMix64,
    current: usize,
}

impl<'a> TableOracle<'a> {
    pub fn new(table: &'a RewardTable, seed: u64) -> Self {
        Self { table, rng: SplitMix64::new(seed), current: 0 }
    }
}

impl EpisodeOracle for TableOracle<'_> {
    fn n_actions(&self) -> usize {
        self.table.n_actions()
    }

    fn observe(&mut self) -> ActivationState {
        self.current = self.rng.next_index(self.table.cells.len());
        self.table.states[self.current]
    }

    fn reward(&mut self, state: &ActivationState, action: usize) -> activation::Result<f64> {
        if *state != self.table.states[self.current] {
            return Err(ActivationError::Environment("reward asked for a state that was not observed".into()));
        }
        self.table
            .rewards[self.current]
            .get(action)
            .copied()
            .ok_or_else(|| ActivationError::Environment(format!("unknown action {action}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyChoice {
    pub cluster: usize,
    pub state_id: u32,
    pub module: usize,
    pub task_tag: TaskTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub policy: ActivationPolicy,
    pub greedy: Vec<GreedyChoice>,
    pub module_means: Vec<f64>,
}

/// Mean `q_total` of trained vs. uniformly random module choice on the same cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationComparison {
    pub episodes: usize,
    pub trained_mean_q_total: f64,
    pub random_mean_q_total: f64,
    /// Expected random-choice mean (average over modules).
    pub random_expected_q_total: f64,
    pub module_means: Vec<f64>,
}

pub struct Harness {
    pub config: ExperimentConfig,
    config_hash: String,
    cot_backend: Box<dyn LlmBackend>,
    direct_backend: Box<dyn LlmBackend>,
    modules: Vec<CotModuleSpec>,
    intent: ParsedIntent,
    policy: Option<ActivationPolicy>,
}

impl Harness {
    /// Builds backends and embedder from the config and the environment.
    pub fn from_config(config: ExperimentConfig, env: &EnvSettings) -> Result<Self, HarnessError> {
        config.validate()?;
        let cot = cot_backend_for(&config, env)?;
        let direct = direct_backend_for(&config, env)?;
        let embedder = embedder_for(&config, env)?;
        Self::with_backends(config, cot, direct, embedder.as_ref())
    }

    /// Mock backends and the offline embedder.
    pub fn mock(config: ExperimentConfig) -> Result<Self, HarnessError> {
        let config = ExperimentConfig { backend: BackendKind::Mock, ..config };
        Self::from_config(config, &EnvSettings::default())
    }

    pub fn with_backends(
        config: ExperimentConfig,
        cot_backend: Box<dyn LlmBackend>,
        direct_backend: Box<dyn LlmBackend>,
        embedder: &dyn Embedder,
    ) -> Result<Self, HarnessError> {
        config.validate()?;
        let text = IntentText::new(0, config.intent.clone())?;
        let cluster = intent::categorize(&text, &builtin_corpus(), embedder, config.clusters, config.config_seed)?;
        let parsed = intent::parse_intent(&text, cluster)?;

        let mut modules = default_modules();
        if let Some(path) = &config.exemplar_store {
            let store = ExemplarStore::new(path);
            for m in &mut modules {
                m.exemplars.extend(store.for_tag(m.task_tag)?);
            }
        }
        let policy = match &config.policy_path {
            Some(path) if path.exists() => Some(load_policy(path, modules.len())?),
            _ => None,
        };
        Ok(Self {
            config_hash: config.hash(),
            config,
            cot_backend,
            direct_backend,
            modules,
            intent: parsed,
            policy,
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn intent(&self) -> &ParsedIntent {
        &self.intent
    }

    pub fn modules(&self) -> &[CotModuleSpec] {
        &self.modules
    }

    pub fn policy(&self) -> Option<&ActivationPolicy> {
        self.policy.as_ref()
    }

    pub fn set_policy(&mut self, policy: ActivationPolicy) {
        self.policy = Some(policy);
    }

    pub fn scenario(&self, seed: u64, range_m: f64) -> Result<NetworkScenario, HarnessError> {
        Ok(self.config.scenario.instantiate(seed, range_m)?)
    }

    pub fn state_for(&self, scenario: &NetworkScenario) -> ActivationState {
        ActivationState::from_scenario(self.intent.category, scenario)
    }

    /// Module the CoT pipeline uses: the policy's greedy choice, or without
    /// a policy the module whose tag matches the parsed objectives.
    pub fn choose_module(&self, scenario: &NetworkScenario) -> usize {
        match &self.policy {
            Some(p) => p.greedy_action(&self.state_for(scenario)),
            None => {
                let tag = TaskTag::for_objectives(&self.intent.objectives);
                self.modules.iter().position(|m| m.task_tag == tag).unwrap_or(0)
            }
        }
    }

    /// Per-cell random stream seed: splitmix64 of `config_seed ⊕ cell index`,
    /// where the cell index is `seed ⊕ bits(range_m)`. Passed to the backend
    /// as the prompt's sampling seed.
    pub fn cell_seed(&self, seed: u64, range_m: f64) -> u64 {
        rng::derive_seed(self.config.config_seed, seed ^ range_m.to_bits())
    }

    pub fn run_single(&self, seed: u64, range_m: f64, pipeline: Pipeline) -> Result<RunRecord, HarnessError> {
        let scenario = self.scenario(seed, range_m)?;
        let module = match pipeline {
            Pipeline::Cot => Some(self.choose_module(&scenario)),
            Pipeline::NonCot => None,
        };
        self.run_with_module(seed, range_m, pipeline, module)
    }

    /// One pipeline run with an explicit module choice (ignored for non-CoT).
    pub fn run_with_module(
        &self,
        seed: u64,
        range_m: f64,
        pipeline: Pipeline,
        module: Option<usize>,
    ) -> Result<RunRecord, HarnessError> {
        self.run_traced(seed, range_m, pipeline, module).map(|(record, _)| record)
    }

    /// Like [`Harness::run_with_module`], also returning the reasoning trace.
    pub fn run_traced(
        &self,
        seed: u64,
        range_m: f64,
        pipeline: Pipeline,
        module: Option<usize>,
    ) -> Result<(RunRecord, ReasoningTrace), HarnessError> {
        let started = Instant::now();
        let scenario = self.scenario(seed, range_m)?;
        let (prompt, backend, module) = match pipeline {
            Pipeline::Cot => {
                let m = module.unwrap_or_else(|| self.choose_module(&scenario));
                let spec = self
                    .modules
                    .get(m)
                    .ok_or_else(|| HarnessError::Invariant(format!("module {m} is not registered")))?;
                (compose_prompt(spec, &self.intent, &scenario), &self.cot_backend, Some(m))
            }
            Pipeline::NonCot => (compose_direct_prompt(&self.intent, &scenario), &self.direct_backend, None),
        };
        let prompt = PromptBundle { seed: Some(self.cell_seed(seed, range_m)), ..prompt };
        let trace = backend.invoke(&prompt)?;

        let (command, extraction_error) = match extract_strategy(&trace, &scenario) {
            Ok(c) => (c, None),
            Err(e) if e.is_extraction_failure() => {
                log::warn!("seed {seed}, range {range_m} m, {}: {e}; executing the centroid baseline", pipeline.as_str());
                (ControlCommand::from_decision(&optimizer::centroid_baseline(&scenario)), Some(e.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let executed = command.to_decision(&scenario).apply(&scenario)?;
        let metrics = physics::evaluate_scenario(&executed)?;
        let fitness = evaluation::score_fitness(&trace, &scenario, &command, &metrics, &CASE_STUDY_STAGES);
        let (q_c, q_r) = evaluation::q_wireless(&metrics, &scenario)?;
        let utility = evaluation::composite_utility(self.config.weights, evaluation::q_llm(&fitness), q_c, q_r);
        if !utility.q_total.is_finite() {
            return Err(HarnessError::Invariant(format!("non-finite q_total for seed {seed}, range {range_m}")));
        }
        let record = RunRecord {
            config_hash: self.config_hash.clone(),
            seed,
            range_m,
            pipeline,
            backend_id: trace.backend_id.clone(),
            module,
            utility,
            fitness,
            metrics: MetricsSummary {
                coverage_ratio: metrics.coverage_ratio,
                sum_rate_bps: metrics.sum_rate_bps,
                covered_users: metrics.covered_flags.iter().filter(|&&c| c).count(),
                user_count: scenario.users.len(),
            },
            command,
            trace_steps: trace.steps.len(),
            extraction_error,
            wall_clock_ms: started.elapsed().as_millis() as u64,
        };
        Ok((record, trace))
    }

    /// Reward of every module on every configured (range, seed) cell.
    pub fn reward_table(&self) -> Result<RewardTable, HarnessError> {
        let cells: Vec<(f64, u64)> =
            self.config.range_sweep.iter().flat_map(|&r| self.config.seeds.iter().map(move |&s| (r, s))).collect();
        let n = self.modules.len();
        let rewards: Vec<Vec<f64>> = cells
            .par_iter()
            .map(|&(range, seed)| {
                (0..n)
                    .map(|a| self.run_with_module(seed, range, Pipeline::Cot, Some(a)).map(|r| r.utility.q_total))
                    .collect::<Result<Vec<f64>, HarnessError>>()
            })
            .collect::<Result<_, _>>()?;
        let states = cells
            .iter()
            .map(|&(range, seed)| Ok(self.state_for(&self.scenario(seed, range)?)))
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Ok(RewardTable { states, cells, rewards })
    }

    /// Trains the activation policy on the reward table, installs it, and
    /// reports the greedy module for every observed state.
    pub fn train_activation(&mut self) -> Result<TrainingOutcome, HarnessError> {
        let table = self.reward_table()?;
        self.train_on(&table)
    }

    pub fn train_on(&mut self, table: &RewardTable) -> Result<TrainingOutcome, HarnessError> {
        let mut env = TableOracle::new(table, rng::derive_seed(self.config.activation.seed, 1));
        let policy = activation::train_activation(&mut env, &self.config.activation)?;
        let mut greedy: Vec<GreedyChoice> = Vec::new();
        for s in &table.states {
            let id = s.state_id();
            if greedy.iter().any(|g| g.state_id == id) {
                continue;
            }
            let module = policy.greedy_action(s);
            greedy.push(GreedyChoice { cluster: s.cluster, state_id: id, module, task_tag: self.modules[module].task_tag });
        }
        greedy.sort_by_key(|g| g.state_id);
        self.policy = Some(policy.clone());
        Ok(TrainingOutcome { policy, greedy, module_means: table.module_means() })
    }

    /// Trained greedy choice vs. one uniformly random module per cell, on
    /// the same cells. Trains a policy first when none is installed.
    pub fn compare_activation(&mut self) -> Result<ActivationComparison, HarnessError> {
        let table = self.reward_table()?;
        if self.policy.is_none() {
            self.train_on(&table)?;
        }
        let policy = self.policy.as_ref().expect("policy installed above");
        let mut rng = SplitMix64::new(rng::derive_seed(self.config.activation.seed, 2));
        let n = table.cells.len() as f64;
        let mut trained = 0.0;
        let mut random = 0.0;
        for (state, row) in table.states.iter().zip(&table.rewards) {
            trained += row[policy.greedy_action(state)];
            random += row[rng.next_index(row.len())];
        }
        let module_means = table.module_means();
        Ok(ActivationComparison {
            episodes: table.cells.len(),
            trained_mean_q_total: trained / n,
            random_mean_q_total: random / n,
            random_expected_q_total: module_means.iter().sum::<f64>() / module_means.len() as f64,
            module_means,
        })
    }

    /// Every (range, seed, pipeline) cell, run in parallel and aggregated in
    /// a fixed order. Trains the activation policy first if none is loaded.
    pub fn run_sweep(&mut self) -> Result<SweepResult, HarnessError> {
        if self.policy.is_none() && self.config.pipelines.contains(&Pipeline::Cot) {
            self.train_activation()?;
        }
        let mut pipelines = self.config.pipelines.clone();
        pipelines.sort();
        pipelines.dedup();
        let mut ranges = self.config.range_sweep.clone();
        ranges.sort_by(f64::total_cmp);
        ranges.dedup();
        let seeds = &self.config.seeds;
        let cells: Vec<(f64, Pipeline, u64)> = ranges
            .iter()
            .flat_map(|&r| pipelines.iter().flat_map(move |&p| seeds.iter().map(move |&s| (r, p, s))))
            .collect();
        let this = &*self;
        let outcomes: Vec<Result<RunRecord, HarnessError>> =
            cells.par_iter().map(|&(r, p, s)| this.run_single(s, r, p)).collect();

        let mut rows = Vec::new();
        let mut records = Vec::new();
        let mut errors = Vec::new();
        let per_row = self.config.seeds.len();
        for (chunk_cells, chunk) in cells.chunks(per_row).zip(outcomes.chunks(per_row)) {
            let (range_m, pipeline, _) = chunk_cells[0];
            let mut ok = Vec::new();
            for (cell, outcome) in chunk_cells.iter().zip(chunk) {
                match outcome {
                    Ok(rec) => ok.push(rec.clone()),
                    Err(e) => errors.push(format!("range {} m, {}, seed {}: {e}", cell.0, cell.1.as_str(), cell.2)),
                }
            }
            let col = |f: fn(&RunRecord) -> f64| mean_std(&ok.iter().map(f).collect::<Vec<_>>());
            let (mean_coverage, std_coverage) = col(|r| r.metrics.coverage_ratio);
            let (mean_sum_rate_bps, std_sum_rate_bps) = col(|r| r.metrics.sum_rate_bps);
            let (mean_q_total, std_q_total) = col(|r| r.utility.q_total);
            rows.push(SweepRow {
                range_m,
                pipeline,
                mean_coverage,
                mean_sum_rate_bps,
                mean_q_total,
                std_coverage,
                std_sum_rate_bps,
                std_q_total,
                n: ok.len(),
                failures: per_row - ok.len(),
            });
            records.extend(ok);
        }
        Ok(SweepResult { rows, records, errors })
    }
}

fn http_backend(config: &ExperimentConfig, env: &EnvSettings) -> Result<HttpChatBackend, HarnessError> {
    let base = env
        .llm_api_base
        .clone()
        .ok_or_else(|| HarnessError::Config("backend http needs LLM_API_BASE".into()))?;
    Ok(HttpChatBackend::new(
        base,
        config.llm_model.clone(),
        env.llm_api_key.clone(),
        Duration::from_secs(config.timeout_s),
        config.retries,
    )?)
}

/// Backend answering CoT prompts.
pub fn cot_backend_for(config: &ExperimentConfig, env: &EnvSettings) -> Result<Box<dyn LlmBackend>, HarnessError> {
    Ok(match config.backend {
        BackendKind::Mock => Box::new(MockCotBackend::new(config.optimizer)),
        BackendKind::Http => Box::new(http_backend(config, env)?),
    })
}

/// Backend answering direct (non-CoT) prompts.
pub fn direct_backend_for(config: &ExperimentConfig, env: &EnvSettings) -> Result<Box<dyn LlmBackend>, HarnessError> {
    Ok(match config.backend {
        BackendKind::Mock => Box::new(MockDirectBackend),
        BackendKind::Http => Box::new(http_backend(config, env)?),
    })
}

/// HTTP embedder when `EMBED_API_BASE` is set, otherwise the offline one.
pub fn embedder_for(config: &ExperimentConfig, env: &EnvSettings) -> Result<Box<dyn Embedder>, HarnessError> {
    Ok(match &env.embed_api_base {
        Some(base) => Box::new(HttpEmbedder::new(
            base.clone(),
            env.embed_api_key.clone(),
            config.embed_model.clone(),
            Duration::from_secs(config.timeout_s),
            config.retries,
        )?),
        None => Box::new(HashedBagOfWords::default()),
    })
}

pub fn load_policy(path: &Path, n_modules: usize) -> Result<ActivationPolicy, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let policy = ActivationPolicy::from_json(&value).map_err(|e| HarnessError::Config(e.to_string()))?;
    if policy.q.n_actions != n_modules {
        return Err(HarnessError::Config(format!(
            "policy has {} actions but {n_modules} modules are registered",
            policy.q.n_actions
        )));
    }
    Ok(policy)
}

pub fn write_policy(path: &Path, policy: &ActivationPolicy) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(&policy.to_json()).expect("policy serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Writes records as JSON lines.
pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}
