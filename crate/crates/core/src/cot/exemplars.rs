//! Auto-CoT exemplar construction and the JSONL exemplar store.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{compose_zero_shot_prompt, CotError, ExemplarRecord, LlmBackend, ReasoningTrace, Result, TaskTag};
use crate::evaluation::UtilityReport;
use crate::intent::{cluster_intents, parse_intent, Embedder, IntentText};
use crate::physics::NetworkScenario;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn tag_for(question: &IntentText) -> TaskTag {
    parse_intent(question, 0).map_or(TaskTag::Generic, |p| TaskTag::for_objectives(&p.objectives))
}

/// Builds one exemplar per cluster of `questions`.
///
/// Questions are embedded and clustered into `k` groups; the member nearest
/// each centroid (lowest id on ties) is answered by `backend` under a
/// zero-shot trigger prompt. Clusters left empty are skipped with a warning,
/// as are replies with no reasoning steps.
pub fn build_auto_cot_exemplars(
    questions: &[IntentText],
    k: usize,
    backend: &dyn LlmBackend,
    embedder: &dyn Embedder,
    scenario: &NetworkScenario,
    seed: u64,
) -> Result<Vec<ExemplarRecord>> {
    if k == 0 || questions.len() < k {
        return Err(CotError::Degenerate(format!("need at least k = {k} > 0 questions, got {}", questions.len())));
    }
    let embeddings = embedder.embed_batch(questions)?;
    let clusters = cluster_intents(&embeddings, k, seed, 100)?;

    let mut out = Vec::with_capacity(k);
    for (j, centroid) in clusters.centroids.iter().enumerate() {
        let representative = (0..questions.len())
            .filter(|&i| clusters.assignments[i] == j)
            .min_by(|&a, &b| {
                sq_dist(&embeddings[a].vector, centroid)
                    .total_cmp(&sq_dist(&embeddings[b].vector, centroid))
                    .then(questions[a].id.cmp(&questions[b].id))
            });
        let Some(i) = representative else {
            log::warn!("cluster {j} is empty; no exemplar generated for it");
            continue;
        };
        let question = &questions[i];
        let trace = backend.invoke(&compose_zero_shot_prompt(&question.text, scenario))?;
        let record = ExemplarRecord {
            question: question.text.clone(),
            reasoning_chain: trace.steps,
            answer: trace.final_block,
            tag: tag_for(question),
        };
        if let Err(e) = record.validate() {
            log::warn!("skipping exemplar for cluster {j}: {e}");
            continue;
        }
        out.push(record);
    }
    Ok(out)
}

/// Append-only JSONL file of exemplars, one record per line.
#[derive(Debug, Clone)]
pub struct ExemplarStore {
    path: PathBuf,
}

impl ExemplarStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// All stored records; a missing file reads as empty.
    pub fn load(&self) -> Result<Vec<ExemplarRecord>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ExemplarRecord = serde_json::from_str(&line)
                .map_err(|e| CotError::Parse(format!("{}:{}: {e}", self.path.display(), n + 1)))?;
            out.push(rec);
        }
        Ok(out)
    }

    pub fn append(&self, record: &ExemplarRecord) -> Result<()> {
        record.validate()?;
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let line = serde_json::to_string(record).map_err(|e| CotError::Parse(e.to_string()))?;
        writeln!(f, "{line}")?;
        Ok(())
    }

    /// Closed-loop feedback: stores the episode as a new exemplar when its
    /// utility reaches `threshold`. Returns whether it was stored.
    pub fn record_feedback(
        &self,
        question: &str,
        trace: &ReasoningTrace,
        tag: TaskTag,
        report: &UtilityReport,
        threshold: f64,
    ) -> Result<bool> {
        if report.q_total < threshold || trace.steps.is_empty() {
            return Ok(false);
        }
        self.append(&ExemplarRecord {
            question: question.to_string(),
            reasoning_chain: trace.steps.clone(),
            answer: trace.final_block.clone(),
            tag,
        })?;
        Ok(true)
    }

    /// Stored records carrying `tag`.
    pub fn for_tag(&self, tag: TaskTag) -> Result<Vec<ExemplarRecord>> {
        Ok(self.load()?.into_iter().filter(|r| r.tag == tag).collect())
    }
}
