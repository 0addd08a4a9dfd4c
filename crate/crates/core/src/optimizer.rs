//! UAV placement and transmit-power search.
//!
//! [`optimize_deployment`] is a two-phase heuristic. Phase one scores a
//! coarse grid of positions, plus the points where the covered-user set can
//! change, at every power level. Phase two runs a compass (pattern) search
//! from the best few of those, probing each coordinate by `±step` and
//! halving the steps when no probe improves.
//! [`brute_force_oracle`] enumerates a fine grid exhaustively and is what the
//! heuristic is checked against. [`centroid_baseline`] is the naive reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation;
use crate::physics::{self, NetworkScenario, PhysicsError, Position3D};
use crate::rng::{self, SplitMix64};

/// Upper bound on oracle evaluations.
pub const ORACLE_MAX_EVALUATIONS: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("decision has {positions} positions and {powers} powers for {slots} UAV slots")]
    DimensionMismatch { positions: usize, powers: usize, slots: usize },
    #[error("infeasible decision: {0}")]
    Infeasible(String),
    #[error("oracle grid needs {evaluations} evaluations, limit is {limit}")]
    GridTooLarge { evaluations: u128, limit: u128 },
    #[error("invalid search parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, OptimizerError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentDecision {
    pub uav_positions: Vec<Position3D>,
    pub tx_powers_dbm: Vec<f64>,
}

impl DeploymentDecision {
    pub fn validate(&self, scenario: &NetworkScenario) -> Result<()> {
        let slots = scenario.uavs.len();
        if self.uav_positions.len() != slots || self.tx_powers_dbm.len() != slots {
            return Err(OptimizerError::DimensionMismatch {
                positions: self.uav_positions.len(),
                powers: self.tx_powers_dbm.len(),
                slots,
            });
        }
        for (i, (pos, &p)) in self.uav_positions.iter().zip(&self.tx_powers_dbm).enumerate() {
            if !(0.0..=scenario.max_tx_power_dbm).contains(&p) {
                return Err(OptimizerError::Infeasible(format!("UAV {i} power {p} dBm out of range")));
            }
            if !scenario.area_m.contains(pos.x, pos.y) {
                return Err(OptimizerError::Infeasible(format!("UAV {i} outside the area")));
            }
            if pos.z != scenario.uavs[i].position.z {
                return Err(OptimizerError::Infeasible(format!("UAV {i} altitude differs from its slot")));
            }
        }
        Ok(())
    }

    /// The scenario with UAV slots moved and re-powered per this decision.
    pub fn apply(&self, scenario: &NetworkScenario) -> Result<NetworkScenario> {
        self.validate(scenario)?;
        let mut out = scenario.clone();
        for (uav, (pos, &p)) in out.uavs.iter_mut().zip(self.uav_positions.iter().zip(&self.tx_powers_dbm)) {
            uav.position = *pos;
            uav.tx_power_dbm = p;
        }
        Ok(out)
    }

    fn from_vars(vars: &[f64], scenario: &NetworkScenario) -> Self {
        let mut uav_positions = Vec::with_capacity(vars.len() / 3);
        let mut tx_powers_dbm = Vec::with_capacity(vars.len() / 3);
        for (i, c) in vars.chunks_exact(3).enumerate() {
            uav_positions.push(Position3D::new(c[0], c[1], scenario.uavs[i].position.z));
            tx_powers_dbm.push(c[2]);
        }
        Self { uav_positions, tx_powers_dbm }
    }

    fn to_vars(&self) -> Vec<f64> {
        self.uav_positions
            .iter()
            .zip(&self.tx_powers_dbm)
            .flat_map(|(p, &w)| [p.x, p.y, w])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub coarse_grid_step_m: f64,
    pub power_step_db: f64,
    pub local_search_iters: usize,
    pub local_step_init_m: f64,
    pub seed: u64,
    /// Extra pattern-search starts taken from the best phase-one candidates.
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { coarse_grid_step_m: 100.0, power_step_db: 2.0, local_search_iters: 200, local_step_init_m: 50.0, seed: 0, restarts: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_decision: DeploymentDecision,
    pub best_objective: f64,
    pub evaluations: u64,
}

/// Result of a full heuristic run, including the grid-phase incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub decision: DeploymentDecision,
    pub objective: f64,
    pub grid_decision: DeploymentDecision,
    pub grid_objective: f64,
    pub evaluations: u64,
}

/// `Q_c + Q_R` of the scenario as it stands.
pub fn scenario_objective(scenario: &NetworkScenario) -> Result<f64> {
    let metrics = physics::evaluate_scenario(scenario)?;
    let (q_c, q_r) = evaluation::q_wireless(&metrics, scenario)?;
    Ok(q_c + q_r)
}

pub fn wireless_objective(scenario: &NetworkScenario, decision: &DeploymentDecision) -> Result<f64> {
    scenario_objective(&decision.apply(scenario)?)
}

pub fn centroid_baseline(scenario: &NetworkScenario) -> DeploymentDecision {
    let n = scenario.users.len().max(1) as f64;
    let cx = scenario.users.iter().map(|u| u.position.x).sum::<f64>() / n;
    let cy = scenario.users.iter().map(|u| u.position.y).sum::<f64>() / n;
    DeploymentDecision {
        uav_positions: scenario.uavs.iter().map(|u| Position3D::new(cx, cy, u.position.z)).collect(),
        tx_powers_dbm: vec![scenario.max_tx_power_dbm; scenario.uavs.len()],
    }
}

fn axis(extent: f64, step: f64) -> Vec<f64> {
    let n = (extent / step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

fn power_levels(max_dbm: f64, step: f64) -> Vec<f64> {
    let mut levels = axis(max_dbm, step);
    if levels.last().is_some_and(|&l| max_dbm - l > 1e-9) {
        levels.push(max_dbm);
    }
    levels
}

/// Reusable scratch scenario whose UAVs are rewritten per evaluation.
struct Evaluator {
    scratch: NetworkScenario,
    evaluations: u64,
    floor: Option<ParetoFloor>,
}

/// Penalty that puts every floor-violating candidate below every compliant one.
const FLOOR_PENALTY: f64 = 4.0;

impl Evaluator {
    fn new(scenario: &NetworkScenario) -> Self {
        Self { scratch: scenario.clone(), evaluations: 0, floor: None }
    }

    fn eval(&mut self, vars: &[f64]) -> Result<f64> {
        for (uav, c) in self.scratch.uavs.iter_mut().zip(vars.chunks_exact(3)) {
            uav.position.x = c[0];
            uav.position.y = c[1];
            uav.tx_power_dbm = c[2];
        }
        self.evaluations += 1;
        let metrics = physics::evaluate_scenario(&self.scratch)?;
        let (q_c, q_r) = evaluation::q_wireless(&metrics, &self.scratch)?;
        let penalty = match self.floor {
            Some(f) if !f.admits(&metrics) => FLOOR_PENALTY,
            _ => 0.0,
        };
        Ok(q_c + q_r - penalty)
    }
}

/// Lower bounds on coverage and sum rate that a guarded search must keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoFloor {
    pub coverage_ratio: f64,
    pub sum_rate_bps: f64,
}

impl ParetoFloor {
    pub fn of(metrics: &physics::NetworkMetrics) -> Self {
        Self { coverage_ratio: metrics.coverage_ratio, sum_rate_bps: metrics.sum_rate_bps }
    }

    pub fn admits(&self, metrics: &physics::NetworkMetrics) -> bool {
        metrics.coverage_ratio >= self.coverage_ratio - 1e-12
            && metrics.sum_rate_bps >= self.sum_rate_bps * (1.0 - 1e-12)
    }
}

/// Exhaustive grid enumeration. Candidates are visited row-major (y outer,
/// x inner) with power ascending innermost; with several UAV slots the first
/// slot is the most significant digit. The first strict maximum wins.
pub fn brute_force_oracle(scenario: &NetworkScenario, grid_step_m: f64, power_step_db: f64) -> Result<OracleResult> {
    if !(grid_step_m > 0.0 && power_step_db > 0.0) {
        return Err(OptimizerError::InvalidParameter("grid and power steps must be positive".into()));
    }
    scenario.validate()?;
    let xs = axis(scenario.area_m.width, grid_step_m);
    let ys = axis(scenario.area_m.height, grid_step_m);
    let powers = power_levels(scenario.max_tx_power_dbm, power_step_db);
    let per_uav = (xs.len() * ys.len() * powers.len()) as u128;
    let n_uavs = scenario.uavs.len() as u32;
    let total = per_uav.checked_pow(n_uavs).unwrap_or(u128::MAX);
    if total > ORACLE_MAX_EVALUATIONS {
        return Err(OptimizerError::GridTooLarge { evaluations: total, limit: ORACLE_MAX_EVALUATIONS });
    }

    let per_uav = per_uav as usize;
    let candidate = |code: usize| -> [f64; 3] {
        let p = code % powers.len();
        let rest = code / powers.len();
        [xs[rest % xs.len()], ys[rest / xs.len()], powers[p]]
    };
    let mut eval = Evaluator::new(scenario);
    let mut digits = vec![0usize; n_uavs as usize];
    let mut vars = vec![0.0; 3 * n_uavs as usize];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..total {
        for (i, &d) in digits.iter().enumerate() {
            vars[3 * i..3 * i + 3].copy_from_slice(&candidate(d));
        }
        let obj = eval.eval(&vars)?;
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, vars.clone()));
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < per_uav {
                break;
            }
            *d = 0;
        }
    }
    let (best_objective, vars) = best.expect("grid has at least one cell");
    Ok(OracleResult {
        best_decision: DeploymentDecision::from_vars(&vars, scenario),
        best_objective,
        evaluations: eval.evaluations,
    })
}

/// Points where the set of covered users can change: every user's nadir and
/// each pairwise intersection of the users' horizontal coverage circles,
/// nudged 1 cm towards the lens between the two circles. Any region of
/// constant coverage either contains one of these or is a whole disk.
fn coverage_candidates(scenario: &NetworkScenario, slot: usize) -> Vec<(f64, f64)> {
    let uav = &scenario.uavs[slot];
    let area = scenario.area_m;
    let z = uav.position.z;
    let mut out: Vec<(f64, f64)> = scenario.users.iter().map(|u| (u.position.x, u.position.y)).collect();
    let horizontal = |uz: f64| {
        let dz = z - uz;
        let r2 = uav.comm_range_m * uav.comm_range_m - dz * dz;
        (r2 > 0.0).then(|| r2.sqrt())
    };
    for (i, a) in scenario.users.iter().enumerate() {
        let Some(ra) = horizontal(a.position.z) else { continue };
        for b in &scenario.users[i + 1..] {
            let Some(rb) = horizontal(b.position.z) else { continue };
            let (dx, dy) = (b.position.x - a.position.x, b.position.y - a.position.y);
            let d = dx.hypot(dy);
            if d == 0.0 || d > ra + rb || d < (ra - rb).abs() {
                continue;
            }
            let along = (d * d + ra * ra - rb * rb) / (2.0 * d);
            let half = (ra * ra - along * along).max(0.0).sqrt();
            let (ux, uy) = (dx / d, dy / d);
            let (bx, by) = (a.position.x + along * ux, a.position.y + along * uy);
            for sign in [1.0, -1.0] {
                let (px, py) = (bx - sign * half * uy, by + sign * half * ux);
                let (mx, my) = (bx - px, by - py);
                let m = mx.hypot(my);
                let (px, py) = if m > 0.0 { (px + 0.01 * mx / m, py + 0.01 * my / m) } else { (px, py) };
                out.push((px.clamp(0.0, area.width), py.clamp(0.0, area.height)));
            }
        }
    }
    out
}

/// Phase one. UAV slots are placed one at a time (earlier slots fixed, later
/// slots absent) so the cost is linear in the number of UAVs. Each slot scans
/// the coarse grid plus [`coverage_candidates`] at every power level and
/// keeps its best candidate. Returns that placement and, for the last slot,
/// up to `config.restarts` runner-up starts at distinct positions, best first.
fn grid_phase(
    scenario: &NetworkScenario,
    config: &OptimizerConfig,
    eval_count: &mut u64,
) -> Result<(Vec<f64>, Vec<(Vec<f64>, f64)>)> {
    let xs = axis(scenario.area_m.width, config.coarse_grid_step_m);
    let ys = axis(scenario.area_m.height, config.coarse_grid_step_m);
    let powers = power_levels(scenario.max_tx_power_dbm, config.power_step_db);
    let mut placed: Vec<f64> = Vec::with_capacity(3 * scenario.uavs.len());
    let mut starts = Vec::new();
    for slot in 0..scenario.uavs.len() {
        let mut partial = scenario.clone();
        partial.uavs.truncate(slot + 1);
        let mut eval = Evaluator::new(&partial);
        let mut vars = placed.clone();
        vars.extend([0.0; 3]);
        let cells = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y)));
        let mut scored: Vec<(f64, [f64; 3])> = Vec::new();
        for (x, y) in cells.chain(coverage_candidates(scenario, slot)) {
            let mut cell_best: Option<(f64, [f64; 3])> = None;
            for &p in &powers {
                vars[3 * slot..].copy_from_slice(&[x, y, p]);
                let obj = eval.eval(&vars)?;
                if cell_best.is_none_or(|(b, _)| obj > b) {
                    cell_best = Some((obj, [x, y, p]));
                }
            }
            scored.extend(cell_best);
        }
        *eval_count += eval.evaluations;
        // stable sort keeps generation order among equal objectives
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let best = scored[0].1;
        if slot + 1 == scenario.uavs.len() {
            let mut chosen: Vec<[f64; 3]> = Vec::new();
            for &(obj, c) in &scored {
                if chosen.len() > config.restarts {
                    break;
                }
                if chosen.iter().all(|o| (o[0] - c[0]).hypot(o[1] - c[1]) >= 1.0) {
                    chosen.push(c);
                    let mut v = placed.clone();
                    v.extend(c);
                    starts.push((v, obj));
                }
            }
        }
        placed.extend(best);
    }
    Ok((placed, starts))
}

fn pattern_search(
    scenario: &NetworkScenario,
    config: &OptimizerConfig,
    start: Vec<f64>,
    start_obj: f64,
    eval: &mut Evaluator,
) -> Result<(Vec<f64>, f64)> {
    let (w, h, pmax) = (scenario.area_m.width, scenario.area_m.height, scenario.max_tx_power_dbm);
    let mut vars = start;
    let mut best = start_obj;
    let mut pos_step = config.local_step_init_m;
    let mut pow_step = config.power_step_db;
    let mut order: Vec<usize> = (0..vars.len()).collect();
    let mut rng = SplitMix64::new(rng::derive_seed(config.seed, 0x5eed));
    for _ in 0..config.local_search_iters {
        if pos_step < 1.0 {
            break;
        }
        // Fisher-Yates with the config stream; only the probe order depends on the seed
        for i in (1..order.len()).rev() {
            order.swap(i, rng.next_index(i + 1));
        }
        let mut improved = false;
        'probe: for &k in &order {
            let (step, hi) = match k % 3 {
                0 => (pos_step, w),
                1 => (pos_step, h),
                _ => (pow_step, pmax),
            };
            for dir in [1.0, -1.0] {
                let v = (vars[k] + dir * step).clamp(0.0, hi);
                if v == vars[k] {
                    continue;
                }
                let mut cand = vars.clone();
                cand[k] = v;
                let obj = eval.eval(&cand)?;
                if obj > best + 1e-12 {
                    vars = cand;
                    best = obj;
                    improved = true;
                    break 'probe;
                }
            }
        }
        if !improved {
            pos_step /= 2.0;
            pow_step /= 2.0;
        }
    }
    Ok((vars, best))
}

pub fn optimize_deployment_report(scenario: &NetworkScenario, config: &OptimizerConfig) -> Result<SearchReport> {
    search(scenario, config, None)
}

/// Like [`optimize_deployment_report`], but only accepts decisions whose
/// coverage and sum rate are both at least those of `current`, which is
/// itself always a candidate. The result therefore never regresses either
/// metric relative to `current`.
pub fn optimize_deployment_guarded(
    scenario: &NetworkScenario,
    config: &OptimizerConfig,
    current: &DeploymentDecision,
) -> Result<SearchReport> {
    let floor = ParetoFloor::of(&physics::evaluate_scenario(&current.apply(scenario)?)?);
    search(scenario, config, Some((floor, current.to_vars())))
}

fn search(
    scenario: &NetworkScenario,
    config: &OptimizerConfig,
    guard: Option<(ParetoFloor, Vec<f64>)>,
) -> Result<SearchReport> {
    if !(config.coarse_grid_step_m > 0.0 && config.power_step_db > 0.0 && config.local_step_init_m > 0.0) {
        return Err(OptimizerError::InvalidParameter("optimizer steps must be positive".into()));
    }
    scenario.validate()?;
    let mut evaluations = 0;
    let (grid_vars, grid_starts) = grid_phase(scenario, config, &mut evaluations)?;
    let mut eval = Evaluator::new(scenario);
    let grid_objective = eval.eval(&grid_vars)?;

    // the centroid (and the current deployment, when guarded) are free extra starts
    let mut start_vars: Vec<Vec<f64>> = vec![grid_vars.clone()];
    start_vars.extend(grid_starts.into_iter().map(|(v, _)| v).filter(|v| *v != grid_vars));
    start_vars.push(centroid_baseline(scenario).to_vars());
    if let Some((floor, current)) = guard {
        eval.floor = Some(floor);
        start_vars.push(current);
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in start_vars {
        let start_obj = eval.eval(&start)?;
        let (vars, obj) = pattern_search(scenario, config, start, start_obj, &mut eval)?;
        if best.as_ref().is_none_or(|(_, b)| obj > *b) {
            best = Some((vars, obj));
        }
    }
    let (vars, objective) = best.expect("at least the grid start");
    evaluations += eval.evaluations;
    Ok(SearchReport {
        decision: DeploymentDecision::from_vars(&vars, scenario),
        objective,
        grid_decision: DeploymentDecision::from_vars(&grid_vars, scenario),
        grid_objective,
        evaluations,
    })
}

pub fn optimize_deployment(scenario: &NetworkScenario, config: &OptimizerConfig) -> Result<DeploymentDecision> {
    optimize_deployment_report(scenario, config).map(|r| r.decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{generate_users, Area, UavNode, UserTerminal};

    fn one_user(x: f64, y: f64, range: f64) -> NetworkScenario {
        NetworkScenario::single_uav(vec![UserTerminal { id: 0, position: Position3D::new(x, y, 0.0) }], range)
    }

    #[test]
    fn oracle_finds_single_user_nadir() {
        let s = one_user(500.0, 500.0, 300.0);
        let r = brute_force_oracle(&s, 100.0, 2.0).unwrap();
        assert_eq!(r.best_decision.uav_positions[0], Position3D::new(500.0, 500.0, 100.0));
        assert_eq!(r.best_decision.tx_powers_dbm[0], 20.0);
        assert_eq!(r.evaluations, 11 * 11 * 11);
        let recomputed = wireless_objective(&s, &r.best_decision).unwrap();
        assert_eq!(recomputed, r.best_objective);
    }

    #[test]
    fn oracle_counts_cells_times_power_levels() {
        let s = one_user(10.0, 10.0, 300.0);
        // 3 dB steps over 20 dBm: 0,3,...,18 plus the cap
        let r = brute_force_oracle(&s, 250.0, 3.0).unwrap();
        assert_eq!(r.evaluations, 5 * 5 * 8);
    }

    #[test]
    fn oracle_beats_hand_picked_grid_points() {
        let users = generate_users(3, 8, Area::default()).unwrap();
        let s = NetworkScenario::single_uav(users, 350.0);
        let r = brute_force_oracle(&s, 100.0, 5.0).unwrap();
        for (x, y, p) in [(0.0, 0.0, 20.0), (300.0, 700.0, 15.0), (500.0, 500.0, 20.0), (1000.0, 400.0, 5.0)] {
            let d = DeploymentDecision { uav_positions: vec![Position3D::new(x, y, 100.0)], tx_powers_dbm: vec![p] };
            assert!(r.best_objective >= wireless_objective(&s, &d).unwrap());
        }
    }

    #[test]
    fn oracle_refuses_huge_grids() {
        let mut s = one_user(10.0, 10.0, 300.0);
        s.uavs.push(UavNode { id: 1, ..s.uavs[0].clone() });
        let err = brute_force_oracle(&s, 25.0, 1.0).unwrap_err();
        assert!(matches!(err, OptimizerError::GridTooLarge { .. }));
    }

    #[test]
    fn centroid_examples() {
        let mut s = one_user(0.0, 0.0, 300.0);
        s.users.push(UserTerminal { id: 1, position: Position3D::new(1000.0, 1000.0, 0.0) });
        let d = centroid_baseline(&s);
        assert_eq!(d.uav_positions[0], Position3D::new(500.0, 500.0, 100.0));
        assert_eq!(d.tx_powers_dbm[0], s.max_tx_power_dbm);
        let single = centroid_baseline(&one_user(123.0, 456.0, 300.0));
        assert_eq!(single.uav_positions[0], Position3D::new(123.0, 456.0, 100.0));
    }

    #[test]
    fn heuristic_moves_above_single_user() {
        let s = one_user(237.0, 811.0, 300.0);
        let d = optimize_deployment(&s, &OptimizerConfig::default()).unwrap();
        let p = d.uav_positions[0];
        assert!((p.x - 237.0).abs() <= 1.0 && (p.y - 811.0).abs() <= 1.0, "{p:?}");
        assert_eq!(d.tx_powers_dbm[0], 20.0);
    }

    #[test]
    fn heuristic_is_deterministic_and_feasible() {
        let users = generate_users(42, 10, Area::default()).unwrap();
        let s = NetworkScenario::single_uav(users, 400.0);
        let cfg = OptimizerConfig { seed: 42, ..Default::default() };
        let a = optimize_deployment_report(&s, &cfg).unwrap();
        let b = optimize_deployment_report(&s, &cfg).unwrap();
        assert_eq!(a, b);
        a.decision.validate(&s).unwrap();
        assert!(a.objective >= a.grid_objective);
        let base = wireless_objective(&s, &centroid_baseline(&s)).unwrap();
        assert!(a.objective >= base);
    }

    #[test]
    fn zero_power_drops_rate_term_only() {
        // rate vanishes as received power goes to -inf dBm; coverage is geometric
        let users = generate_users(7, 10, Area::default()).unwrap();
        let mut s = NetworkScenario::single_uav(users, 450.0);
        let on = physics::evaluate_scenario(&s).unwrap();
        s.uavs[0].tx_power_dbm = f64::NEG_INFINITY;
        let off = physics::evaluate_scenario(&s).unwrap();
        let (qc_on, _) = evaluation::q_wireless(&on, &s).unwrap();
        let (qc_off, qr_off) = evaluation::q_wireless(&off, &s).unwrap();
        assert_eq!(qc_on, qc_off);
        assert_eq!(qr_off, 0.0);
        s.uavs[0].tx_power_dbm = -250.0;
        let faint = physics::evaluate_scenario(&s).unwrap();
        assert!(evaluation::q_wireless(&faint, &s).unwrap().1 < 1e-12);
    }

    #[test]
    fn high_sinr_full_coverage_bounded_by_two() {
        let users: Vec<UserTerminal> = (0..4)
            .map(|i| UserTerminal { id: i, position: Position3D::new(500.0 + i as f64, 500.0, 0.0) })
            .collect();
        let s = NetworkScenario::single_uav(users, 600.0);
        let obj = wireless_objective(&s, &centroid_baseline(&s)).unwrap();
        assert!(obj <= 2.0 && obj > 1.99);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = one_user(1.0, 1.0, 300.0);
        let d = DeploymentDecision { uav_positions: vec![], tx_powers_dbm: vec![20.0] };
        assert!(matches!(wireless_objective(&s, &d), Err(OptimizerError::DimensionMismatch { .. })));
    }

    #[test]
    fn two_uav_search_stays_feasible() {
        let users = generate_users(11, 12, Area::default()).unwrap();
        let mut s = NetworkScenario::single_uav(users, 300.0);
        s.uavs.push(UavNode { id: 1, ..s.uavs[0].clone() });
        let r = optimize_deployment_report(&s, &OptimizerConfig::default()).unwrap();
        r.decision.validate(&s).unwrap();
        assert!(r.objective >= r.grid_objective);
    }

    #[test]
    fn guarded_search_never_regresses_either_metric() {
        for seed in 0..6u64 {
            for range in [350.0, 450.0] {
                let s = NetworkScenario::single_uav(generate_users(seed, 10, Area::default()).unwrap(), range);
                let current = DeploymentDecision {
                    uav_positions: vec![s.uavs[0].position],
                    tx_powers_dbm: vec![s.uavs[0].tx_power_dbm],
                };
                let before = physics::evaluate_scenario(&s).unwrap();
                let r = optimize_deployment_guarded(&s, &OptimizerConfig::default(), &current).unwrap();
                let after = physics::evaluate_scenario(&r.decision.apply(&s).unwrap()).unwrap();
                assert!(after.coverage_ratio >= before.coverage_ratio - 1e-12, "seed {seed} range {range}");
                assert!(after.sum_rate_bps >= before.sum_rate_bps * (1.0 - 1e-12), "seed {seed} range {range}");
                assert!(ParetoFloor::of(&before).admits(&after));
            }
        }
    }
}
