//! Joint scoring of an executed episode: reasoning fitness, wireless quality
//! and the weighted composite utility that also serves as the RL reward.

use std::sync::LazyLock;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::cot::{ControlCommand, ReasoningStage, ReasoningTrace};
use crate::physics::{self, NetworkMetrics, NetworkScenario, Position3D, PhysicsError};

/// Relative tolerance used when checking a numeric claim against the simulator.
pub const CLAIM_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub consistency: f64,
    pub informativeness: f64,
    pub misleadingness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self { alpha: 0.1, beta: 0.45 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub q_llm: f64,
    pub q_c: f64,
    pub q_r: f64,
    pub q_wireless: f64,
    pub q_total: f64,
    pub weights: UtilityWeights,
}

/// A numeric statement found in a reasoning step.
#[derive(Debug, Clone, PartialEq)]
pub enum Claim {
    NoisePowerDbm(f64),
    PathLossDb { loss_db: f64, distance_m: f64 },
    Coverage(f64),
    SumRateBps(f64),
    TxPowerDbm(f64),
    Position { x: f64, y: f64 },
    UserDistance { user: u32, distance_m: f64 },
}

const NUM: &str = r"(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)";
const SEP: &str = r"\s*(?:=|:|is|of|at)?\s*";

static NOISE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)noise (?:power|floor){SEP}{NUM}\s*dBm")).unwrap());
static PATH_LOSS_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)path loss{SEP}{NUM}\s*dB\s+at\s+{NUM}\s*m\b")).unwrap());
static COVERAGE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)coverage(?: ratio)?\s*(?:=|:|is)\s*{NUM}\s*(%)?")).unwrap());
static SUM_RATE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)sum rate{SEP}{NUM}\s*(bps|kbps|mbps|gbps)\b")).unwrap());
static TX_POWER_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)transmit power{SEP}{NUM}\s*dBm")).unwrap());
static POSITION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)position{SEP}\(\s*{NUM}\s*,\s*{NUM}\s*\)")).unwrap());
static DISTANCE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)distance to user (\d+){SEP}{NUM}\s*m\b")).unwrap());

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

/// Extracts every recognized numeric claim from the text of one step.
pub fn extract_claims(text: &str) -> Vec<Claim> {
    let mut out = Vec::new();
    for c in NOISE_RE.captures_iter(text) {
        out.push(Claim::NoisePowerDbm(num(&c[1])));
    }
    for c in PATH_LOSS_RE.captures_iter(text) {
        out.push(Claim::PathLossDb { loss_db: num(&c[1]), distance_m: num(&c[2]) });
    }
    for c in COVERAGE_RE.captures_iter(text) {
        let v = num(&c[1]);
        out.push(Claim::Coverage(if c.get(2).is_some() { v / 100.0 } else { v }));
    }
    for c in SUM_RATE_RE.captures_iter(text) {
        let scale = match c[2].to_ascii_lowercase().as_str() {
            "kbps" => 1e3,
            "mbps" => 1e6,
            "gbps" => 1e9,
            _ => 1.0,
        };
        out.push(Claim::SumRateBps(num(&c[1]) * scale));
    }
    for c in TX_POWER_RE.captures_iter(text) {
        out.push(Claim::TxPowerDbm(num(&c[1])));
    }
    for c in POSITION_RE.captures_iter(text) {
        out.push(Claim::Position { x: num(&c[1]), y: num(&c[2]) });
    }
    for c in DISTANCE_RE.captures_iter(text) {
        if let Ok(user) = c[1].parse() {
            out.push(Claim::UserDistance { user, distance_m: num(&c[2]) });
        }
    }
    out
}

fn close(claimed: f64, truth: f64, floor: f64) -> bool {
    claimed.is_finite() && (claimed - truth).abs() <= (CLAIM_TOLERANCE * truth.abs()).max(floor)
}

fn claim_consistent(
    claim: &Claim,
    scenario: &NetworkScenario,
    command: &ControlCommand,
    metrics: &NetworkMetrics,
) -> bool {
    let ch = &scenario.channel;
    match *claim {
        Claim::NoisePowerDbm(v) => ch.noise_power_dbm().is_ok_and(|t| close(v, t, 1e-9)),
        Claim::PathLossDb { loss_db, distance_m } => {
            physics::fspl_db(distance_m, ch.carrier_freq_hz).is_ok_and(|t| close(loss_db, t, 1e-9))
        }
        Claim::Coverage(v) => close(v, metrics.coverage_ratio, 1e-9),
        Claim::SumRateBps(v) => close(v, metrics.sum_rate_bps, 1e-9),
        Claim::TxPowerDbm(v) => command.tx_powers_dbm.iter().any(|&p| close(v, p, 1e-9)),
        Claim::Position { x, y } => command
            .uav_positions
            .iter()
            .any(|&(px, py)| close(x, px, 1.0) && close(y, py, 1.0)),
        Claim::UserDistance { user, distance_m } => {
            let Some(idx) = scenario.users.iter().position(|u| u.id == user) else {
                return false;
            };
            let Some(&serving) = metrics.serving_uav.get(idx) else {
                return false;
            };
            let Some(&(x, y)) = command.uav_positions.get(serving) else {
                return false;
            };
            let uav = Position3D::new(x, y, scenario.altitude_m());
            close(distance_m, uav.distance(&scenario.users[idx].position), 1e-9)
        }
    }
}

fn claim_violates_constraints(claim: &Claim, scenario: &NetworkScenario) -> bool {
    match *claim {
        Claim::TxPowerDbm(v) => !(0.0..=scenario.max_tx_power_dbm).contains(&v),
        Claim::Position { x, y } => !scenario.area_m.contains(x, y),
        Claim::Coverage(v) => !(0.0..=1.0).contains(&v),
        _ => false,
    }
}

/// Scores a reasoning trace against the simulator.
///
/// * consistency: share of numeric claims reproduced by the simulator within
///   5 % (1.0 when the trace makes no claims);
/// * informativeness: share of `required_stages` covered by at least one step;
/// * misleadingness: share of claims that break a hard constraint (power cap,
///   area bounds, a coverage ratio outside `[0, 1]`).
///
/// `scenario` is the scenario the command was executed in.
pub fn score_fitness(
    trace: &ReasoningTrace,
    scenario: &NetworkScenario,
    command: &ControlCommand,
    metrics: &NetworkMetrics,
    required_stages: &[ReasoningStage],
) -> FitnessBreakdown {
    let claims: Vec<Claim> = trace.steps.iter().flat_map(|s| extract_claims(s)).collect();
    let (consistency, misleadingness) = if claims.is_empty() {
        (1.0, 0.0)
    } else {
        let n = claims.len() as f64;
        let ok = claims.iter().filter(|c| claim_consistent(c, scenario, command, metrics)).count();
        let bad = claims.iter().filter(|c| claim_violates_constraints(c, scenario)).count();
        (ok as f64 / n, bad as f64 / n)
    };
    let informativeness = if required_stages.is_empty() {
        1.0
    } else {
        let hit = required_stages
            .iter()
            .filter(|stage| trace.steps.iter().any(|s| stage.matches(s)))
            .count();
        hit as f64 / required_stages.len() as f64
    };
    FitnessBreakdown { consistency, informativeness, misleadingness }
}

pub fn q_llm(b: &FitnessBreakdown) -> f64 {
    (b.consistency + b.informativeness + (1.0 - b.misleadingness)) / 3.0
}

/// Nadir, max-power, interference-free Shannon rate over the full band.
pub fn reference_rate_bps(scenario: &NetworkScenario) -> Result<f64, PhysicsError> {
    let ch = &scenario.channel;
    let snr = scenario.max_tx_power_dbm - physics::fspl_db(scenario.altitude_m(), ch.carrier_freq_hz)?
        - ch.noise_power_dbm()?;
    physics::link_rate_bps(snr, ch.bandwidth_hz)
}

/// Coverage ratio and normalized sum rate `(q_c, q_r)`, `q_r` clamped to `[0, 1]`.
pub fn q_wireless(metrics: &NetworkMetrics, scenario: &NetworkScenario) -> Result<(f64, f64), PhysicsError> {
    let r_ref = reference_rate_bps(scenario)?;
    let q_r = (metrics.sum_rate_bps / r_ref).clamp(0.0, 1.0);
    Ok((metrics.coverage_ratio, q_r))
}

pub fn composite_utility(weights: UtilityWeights, q_llm: f64, q_c: f64, q_r: f64) -> UtilityReport {
    let q_wireless = q_c + q_r;
    UtilityReport {
        q_llm,
        q_c,
        q_r,
        q_wireless,
        q_total: weights.alpha * q_llm + weights.beta * q_wireless,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cot::CASE_STUDY_STAGES;
    use crate::physics::{evaluate_scenario, Position3D, UserTerminal};
    use proptest::prelude::*;

    fn nadir_scenario() -> NetworkScenario {
        NetworkScenario::single_uav(
            vec![UserTerminal { id: 0, position: Position3D::new(500.0, 500.0, 0.0) }],
            200.0,
        )
    }

    fn trace(steps: &[&str]) -> ReasoningTrace {
        ReasoningTrace {
            steps: steps.iter().map(|s| s.to_string()).collect(),
            final_block: "{}".into(),
            backend_id: "test".into(),
            token_usage: None,
            latency_ms: 0,
        }
    }

    fn center_command() -> ControlCommand {
        ControlCommand { uav_positions: vec![(500.0, 500.0)], tx_powers_dbm: vec![20.0], assignments: None }
    }

    #[test]
    fn q_llm_examples() {
        let q = |c, i, m| q_llm(&FitnessBreakdown { consistency: c, informativeness: i, misleadingness: m });
        assert_eq!(q(1.0, 1.0, 0.0), 1.0);
        assert_eq!(q(0.0, 0.0, 1.0), 0.0);
        assert!((q(1.0, 0.6, 0.2) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn composite_examples() {
        let w = UtilityWeights::default();
        assert_eq!(composite_utility(w, 1.0, 1.0, 1.0).q_total, 1.0);
        assert!((composite_utility(w, 1.0, 0.5, 0.5).q_total - 0.55).abs() < 1e-12);
        assert_eq!(composite_utility(w, 0.0, 0.0, 0.0).q_total, 0.0);
        let r = composite_utility(w, 0.3, 0.4, 0.2);
        assert_eq!(r.q_wireless, 0.4 + 0.2);
    }

    #[test]
    fn nadir_user_saturates_normalized_rate() {
        let s = nadir_scenario();
        let m = evaluate_scenario(&s).unwrap();
        let (q_c, q_r) = q_wireless(&m, &s).unwrap();
        assert_eq!(q_c, 1.0);
        assert!((q_r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uncovered_scenario_scores_zero() {
        let mut s = nadir_scenario();
        s.users[0].position = Position3D::new(0.0, 0.0, 0.0);
        let m = evaluate_scenario(&s).unwrap();
        assert_eq!(q_wireless(&m, &s).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn two_user_example_has_half_coverage() {
        let mut s = nadir_scenario();
        s.uavs[0].comm_range_m = 300.0;
        s.users = vec![
            UserTerminal { id: 0, position: Position3D::new(700.0, 500.0, 0.0) },
            UserTerminal { id: 1, position: Position3D::new(900.0, 500.0, 0.0) },
        ];
        let m = evaluate_scenario(&s).unwrap();
        assert_eq!(q_wireless(&m, &s).unwrap().0, 0.5);
    }

    #[test]
    fn claims_are_recognized() {
        let claims = extract_claims(
            "noise power = -100.97 dBm; path loss = 80.05 dB at 100.0 m; coverage = 80%; \
             sum rate = 271.8 Mbps; transmit power = 20.00 dBm; position (500.0, 500.0); \
             distance to user 3 = 120.5 m",
        );
        assert_eq!(claims.len(), 7);
        assert!(claims.contains(&Claim::Coverage(0.8)));
        assert!(claims.contains(&Claim::SumRateBps(271.8e6)));
        assert!(claims.contains(&Claim::UserDistance { user: 3, distance_m: 120.5 }));
    }

    #[test]
    fn accurate_claims_are_consistent() {
        let s = nadir_scenario();
        let m = evaluate_scenario(&s).unwrap();
        let t = trace(&[
            "noise power = -100.96 dBm",
            &format!("sum rate = {:.2} Mbps and coverage = 1.00", m.sum_rate_bps / 1e6),
            "transmit power = 20 dBm at position (500, 500); distance to user 0 = 100.0 m",
        ]);
        let f = score_fitness(&t, &s, &center_command(), &m, &CASE_STUDY_STAGES);
        assert_eq!(f.consistency, 1.0);
        assert_eq!(f.misleadingness, 0.0);
    }

    #[test]
    fn empty_trace_is_uninformative() {
        let s = nadir_scenario();
        let m = evaluate_scenario(&s).unwrap();
        let f = score_fitness(&trace(&[]), &s, &center_command(), &m, &CASE_STUDY_STAGES);
        assert_eq!(f.informativeness, 0.0);
        assert_eq!(f.consistency, 1.0);
        assert_eq!(f.misleadingness, 0.0);
    }

    #[test]
    fn over_cap_power_claim_is_misleading() {
        let s = nadir_scenario();
        let m = evaluate_scenario(&s).unwrap();
        let t = trace(&["Set transmit power = 25 dBm for maximum reach."]);
        let f = score_fitness(&t, &s, &center_command(), &m, &CASE_STUDY_STAGES);
        assert!(f.misleadingness > 0.0);
        assert!(f.consistency < 1.0);
    }

    #[test]
    fn wrong_numbers_reduce_consistency() {
        let s = nadir_scenario();
        let m = evaluate_scenario(&s).unwrap();
        let t = trace(&["noise power = -90 dBm", "coverage = 1.0"]);
        let f = score_fitness(&t, &s, &center_command(), &m, &CASE_STUDY_STAGES);
        assert_eq!(f.consistency, 0.5);
    }

    proptest! {
        #[test]
        fn fitness_components_bounded(
            vals in proptest::collection::vec((0usize..7, -1e4f64..1e4, 0.0f64..2e3), 0..12),
            filler in "[a-z ]{0,20}",
        ) {
            let steps: Vec<String> = vals
                .iter()
                .map(|&(kind, a, b)| match kind {
                    0 => format!("noise power = {a:.2} dBm"),
                    1 => format!("path loss = {a:.1} dB at {b:.1} m"),
                    2 => format!("coverage = {a:.3}"),
                    3 => format!("sum rate = {a:.1} Mbps"),
                    4 => format!("transmit power = {a:.1} dBm"),
                    5 => format!("position ({a:.1}, {b:.1})"),
                    _ => format!("distance to user 0 = {b:.1} m {filler}"),
                })
                .collect();
            let refs: Vec<&str> = steps.iter().map(String::as_str).collect();
            let s = nadir_scenario();
            let m = evaluate_scenario(&s).unwrap();
            let f = score_fitness(&trace(&refs), &s, &center_command(), &m, &CASE_STUDY_STAGES);
            for v in [f.consistency, f.informativeness, f.misleadingness] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((0.0..=1.0).contains(&q_llm(&f)));
        }

        #[test]
        fn total_monotone_and_bounded(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, d in 0.0f64..0.5) {
            let w = UtilityWeights::default();
            let base = composite_utility(w, a, b, c).q_total;
            prop_assert!((0.0..=1.0 + 1e-12).contains(&base));
            prop_assert!(composite_utility(w, (a + d).min(1.0), b, c).q_total >= base);
            prop_assert!(composite_utility(w, a, (b + d).min(1.0), c).q_total >= base);
            prop_assert!(composite_utility(w, a, b, (c + d).min(1.0)).q_total >= base);
        }

        #[test]
        fn common_weight_scaling_preserves_argmax(
            cands in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), 1..8),
            k in 0.01f64..100.0,
        ) {
            let argmax = |w: UtilityWeights| {
                let mut best = 0;
                for (i, &(l, c, r)) in cands.iter().enumerate() {
                    let (bl, bc, br) = cands[best];
                    if composite_utility(w, l, c, r).q_total > composite_utility(w, bl, bc, br).q_total {
                        best = i;
                    }
                }
                cands[best]
            };
            let w = UtilityWeights::default();
            let scaled = UtilityWeights { alpha: w.alpha * k, beta: w.beta * k };
            let (l1, c1, r1) = argmax(w);
            let (l2, c2, r2) = argmax(scaled);
            // the two winners may differ only on exact ties
            let t1 = composite_utility(w, l1, c1, r1).q_total;
            let t2 = composite_utility(w, l2, c2, r2).q_total;
            prop_assert!((t1 - t2).abs() < 1e-12);
        }
    }
}
