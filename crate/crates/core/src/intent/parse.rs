//! Keyword grammar from free-text intent to objectives and numeric bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{IntentError, IntentText, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Coverage,
    SumRate,
    Energy,
    Latency,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::Coverage => "coverage",
            Objective::SumRate => "sum_rate",
            Objective::Energy => "energy",
            Objective::Latency => "latency",
        }
    }

    pub fn goal_phrase(&self) -> &'static str {
        match self {
            Objective::Coverage => "coverage maximization",
            Objective::SumRate => "sum-rate improvement",
            Objective::Energy => "energy reduction",
            Objective::Latency => "latency reduction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedIntent {
    pub objectives: BTreeSet<Objective>,
    /// Named bounds: `min_coverage` (ratio), `max_power_dbm`, `min_sum_rate_bps`, `max_latency_ms`.
    pub constraints: BTreeMap<String, f64>,
    pub category: usize,
    pub raw: IntentText,
}

static OBJECTIVE_RULES: LazyLock<Vec<(Objective, Regex)>> = LazyLock::new(|| {
    [
        (Objective::Coverage, r"\bcoverage\b|\bcover(?:s|ed|ing)?\b"),
        (Objective::SumRate, r"\bdata rates?\b|\brates?\b|\bthroughput\b|\bsum[- ]rates?\b"),
        (Objective::Energy, r"\benergy\b|\bpower consumption\b"),
        (Objective::Latency, r"\blatency\b|\bdelays?\b"),
    ]
    .into_iter()
    .map(|(o, p)| (o, Regex::new(p).unwrap()))
    .collect()
});

const NUM: &str = r"(\d+(?:\.\d+)?)";

static MIN_COVERAGE: LazyLock<[Regex; 2]> = LazyLock::new(|| {
    [
        Regex::new(&format!(r"(?:at least|above|over|>=?)\s*{NUM}\s*%\s*(?:of\s+)?(?:users?\s+)?coverage")).unwrap(),
        Regex::new(&format!(r"coverage\s*(?:of|above|over|>=?)?\s*(?:at least\s*)?{NUM}\s*%")).unwrap(),
    ]
});
static MAX_POWER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?:at most|below|under|no more than|maximum of|max(?:imum)?|<=?)\s*{NUM}\s*dbm")).unwrap()
});
static MIN_RATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?:at least|above|over|>=?)\s*{NUM}\s*(kbps|mbps|gbps|bps)\b")).unwrap());
static MAX_LATENCY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?:under|below|at most|within|less than|<=?)\s*{NUM}\s*ms\b")).unwrap()
});

fn capture_num(re: &Regex, text: &str) -> Option<(f64, Option<String>)> {
    re.captures(text).and_then(|c| {
        let v: f64 = c[1].parse().ok()?;
        v.is_finite().then(|| (v, c.get(2).map(|m| m.as_str().to_string())))
    })
}

pub fn parse_intent(text: &IntentText, cluster: usize) -> Result<ParsedIntent> {
    if text.text.trim().is_empty() {
        return Err(IntentError::Domain("intent text is empty".into()));
    }
    let lower = text.text.to_lowercase();
    let objectives: BTreeSet<Objective> =
        OBJECTIVE_RULES.iter().filter(|(_, re)| re.is_match(&lower)).map(|(o, _)| *o).collect();
    if objectives.is_empty() {
        return Err(IntentError::UnrecognizedIntent(text.text.clone()));
    }

    let mut constraints = BTreeMap::new();
    if let Some((v, _)) = MIN_COVERAGE.iter().find_map(|re| capture_num(re, &lower)) {
        constraints.insert("min_coverage".to_string(), v / 100.0);
    }
    if let Some((v, _)) = capture_num(&MAX_POWER, &lower) {
        constraints.insert("max_power_dbm".to_string(), v);
    }
    if let Some((v, unit)) = capture_num(&MIN_RATE, &lower) {
        let scale = match unit.as_deref() {
            Some("kbps") => 1e3,
            Some("mbps") => 1e6,
            Some("gbps") => 1e9,
            _ => 1.0,
        };
        constraints.insert("min_sum_rate_bps".to_string(), v * scale);
    }
    if let Some((v, _)) = capture_num(&MAX_LATENCY, &lower) {
        constraints.insert("max_latency_ms".to_string(), v);
    }
    Ok(ParsedIntent { objectives, constraints, category: cluster, raw: text.clone() })
}
