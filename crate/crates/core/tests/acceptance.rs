//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use idn_cot::activation::{train_activation, SyntheticBandit, TrainConfig};
use idn_cot::cot::{extract_strategy, ReasoningTrace};
use idn_cot::evaluation::{composite_utility, UtilityWeights};
use idn_cot::harness::{write_csv, ExperimentConfig, Harness, Pipeline};
use idn_cot::optimizer::{brute_force_oracle, optimize_deployment_report, DeploymentDecision, OptimizerConfig};
use idn_cot::physics::{
    evaluate_scenario, fspl_db, generate_users, link_rate_bps, noise_power_dbm, sinr_db, Area, NetworkScenario,
    Position3D, UserTerminal, BOLTZMANN,
};
use idn_cot::rng::SplitMix64;
use proptest::test_runner::{Config as PropConfig, TestRunner};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(started: Instant, budget: Duration, what: &str) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < budget, || format!("{what} took {took:?}, budget {budget:?}"))
}

fn noise_floor() -> Outcome {
    let n = noise_power_dbm(20e6, 290.0, BOLTZMANN).map_err(|e| e.to_string())?;
    ensure((n - (-100.97)).abs() <= 0.01, || format!("noise {n} dBm"))?;
    Ok(format!("noise = {n:.4} dBm"))
}

fn link_budget() -> Outcome {
    let l = fspl_db(100.0, 2.4e9).map_err(|e| e.to_string())?;
    ensure((l - 80.05).abs() <= 0.01, || format!("fspl {l} dB"))?;
    let user = UserTerminal { id: 0, position: Position3D::new(500.0, 500.0, 0.0) };
    let s = NetworkScenario::single_uav(vec![user.clone()], 400.0);
    let snr = sinr_db(&user, &s.uavs[0], &[], &s.channel).map_err(|e| e.to_string())?;
    let rate = link_rate_bps(snr, 20e6).map_err(|e| e.to_string())? / 1e6;
    ensure((rate / 271.8 - 1.0).abs() <= 0.01, || format!("nadir rate {rate} Mbps"))?;
    Ok(format!("fspl = {l:.4} dB, nadir rate = {rate:.3} Mbps"))
}

fn coverage_monotonicity() -> Outcome {
    let started = Instant::now();
    let ranges: Vec<f64> = (0..=8).map(|i| 200.0 + 50.0 * i as f64).collect();
    let users: Vec<_> = (0..10u64).map(|s| generate_users(s, 10, Area::default()).unwrap()).collect();
    let mut runner = TestRunner::new(PropConfig { cases: 64, failure_persistence: None, ..PropConfig::default() });
    let strategy = (0.0..=1000.0f64, 0.0..=1000.0f64, 0.0..=20.0f64);
    runner
        .run(&strategy, |(x, y, p)| {
            for u in &users {
                let mut prev = -1.0;
                for &r in &ranges {
                    let mut s = NetworkScenario::single_uav(u.clone(), r);
                    s.uavs[0].position = Position3D::new(x, y, 100.0);
                    s.uavs[0].tx_power_dbm = p;
                    let q_c = evaluate_scenario(&s).unwrap().coverage_ratio;
                    proptest::prop_assert!(q_c >= prev, "q_c fell from {} to {} at {} m", prev, q_c, r);
                    prev = q_c;
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    within_budget(started, Duration::from_secs(5), "monotonicity check")?;
    Ok(format!("64 deployments x 10 seeds x {} ranges, non-decreasing", ranges.len()))
}

/// Twenty instances: seed `s`, `1 + s % 10` users, range cycling 200..550 m.
fn optimizer_instances() -> Vec<NetworkScenario> {
    (0..20u64)
        .map(|s| {
            let users = generate_users(s, 1 + (s % 10) as usize, Area::default()).unwrap();
            NetworkScenario::single_uav(users, 200.0 + 50.0 * (s % 8) as f64)
        })
        .collect()
}

fn optimizer_quality() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut slowest = Duration::ZERO;
    for (i, s) in optimizer_instances().iter().enumerate() {
        let started = Instant::now();
        let heuristic = optimize_deployment_report(s, &OptimizerConfig::default()).map_err(|e| e.to_string())?;
        let heuristic_time = started.elapsed();
        let oracle = brute_force_oracle(s, 25.0, 1.0).map_err(|e| e.to_string())?;
        let ratio = heuristic.objective / oracle.best_objective;
        ensure(ratio >= 0.98, || {
            format!("instance {i}: heuristic {} vs oracle {} (ratio {ratio:.4})", heuristic.objective, oracle.best_objective)
        })?;
        ensure(heuristic_time < Duration::from_secs(10), || format!("instance {i} took {heuristic_time:?}"))?;
        worst = worst.min(ratio);
        slowest = slowest.max(heuristic_time);
    }
    Ok(format!("worst ratio to oracle {worst:.4}, slowest instance {slowest:?}"))
}

fn activation_learning() -> Outcome {
    let started = Instant::now();
    let base = [0.3, 0.4, 0.5, 0.6];
    let mut hits = 0;
    for seed in 0..20u64 {
        // Rotate which arm is best so the learner cannot rely on arm order.
        let means: Vec<f64> = (0..4).map(|a| base[(a + seed as usize) % 4]).collect();
        let best = (0..4).max_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
        let mut env = SyntheticBandit::new(means, 0.2, seed.wrapping_mul(31) + 1);
        let cfg = TrainConfig { episodes: 5000, seed, ..TrainConfig::default() };
        let policy = train_activation(&mut env, &cfg).map_err(|e| e.to_string())?;
        if policy.greedy_action(&env.state) == best {
            hits += 1;
        }
    }
    ensure(hits >= 19, || format!("argmax chosen for {hits}/20 seeds"))?;
    within_budget(started, Duration::from_secs(30), "activation training")?;
    Ok(format!("argmax chosen for {hits}/20 agent seeds"))
}

fn sweep_direction() -> Result<(String, Vec<u8>), String> {
    let started = Instant::now();
    let mut h = Harness::mock(ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let sweep = h.run_sweep().map_err(|e| e.to_string())?;
    ensure(sweep.rows.len() == 16 && sweep.rows.iter().all(|r| r.n == 10), || "unexpected sweep shape".into())?;
    for &range in &h.config.range_sweep {
        let cot = sweep.row(range, Pipeline::Cot).ok_or("missing cot row")?;
        let base = sweep.row(range, Pipeline::NonCot).ok_or("missing non_cot row")?;
        ensure(cot.mean_coverage >= base.mean_coverage, || {
            format!("{range} m: coverage {} < {}", cot.mean_coverage, base.mean_coverage)
        })?;
        ensure(cot.mean_sum_rate_bps >= base.mean_sum_rate_bps, || {
            format!("{range} m: sum rate {} < {}", cot.mean_sum_rate_bps, base.mean_sum_rate_bps)
        })?;
    }
    let gain = sweep.sum_rate_gain(400.0).ok_or("no 400 m rows")?;
    ensure(gain > 0.0, || format!("sum-rate gain at 400 m is {gain}"))?;
    within_budget(started, Duration::from_secs(60), "default sweep")?;
    let csv = write_csv(&sweep).map_err(|e| e.to_string())?;
    Ok((format!("cot >= non_cot at all 8 ranges; measured sum-rate gain at 400 m = {:+.2}%", 100.0 * gain), csv))
}

fn activation_direction() -> Outcome {
    let started = Instant::now();
    let mut h = Harness::mock(ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let c = h.compare_activation().map_err(|e| e.to_string())?;
    ensure(c.trained_mean_q_total > c.random_mean_q_total, || {
        format!("trained {} <= random {}", c.trained_mean_q_total, c.random_mean_q_total)
    })?;
    ensure(c.trained_mean_q_total > c.random_expected_q_total, || {
        format!("trained {} <= expected random {}", c.trained_mean_q_total, c.random_expected_q_total)
    })?;
    within_budget(started, Duration::from_secs(60), "activation comparison")?;
    Ok(format!(
        "trained {:.4} > random {:.4} over {} episodes",
        c.trained_mean_q_total, c.random_mean_q_total, c.episodes
    ))
}

fn utility_formula() -> Outcome {
    let w = UtilityWeights { alpha: 0.1, beta: 0.45 };
    let full = composite_utility(w, 1.0, 1.0, 1.0).q_total;
    ensure(full == 1.0, || format!("q_total(1,1,1) = {full:e}"))?;
    let half = composite_utility(w, 1.0, 0.5, 0.5).q_total;
    ensure((half - 0.55).abs() <= 1e-12, || format!("q_total(1,0.5,0.5) = {half}"))?;
    Ok(format!("q_total(1,1,1) = {full}, q_total(1,0.5,0.5) = {half}"))
}

fn determinism(first_csv: &[u8]) -> Outcome {
    let mut h = Harness::mock(ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let second = write_csv(&h.run_sweep().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(first_csv == second.as_slice(), || "sweep CSV bytes differ between invocations".into())?;
    Ok(format!("two default sweeps produced identical {}-byte CSVs", second.len()))
}

/// One fuzz case: a strategy block that may be well formed, malformed, or
/// carry out-of-bounds values.
fn fuzz_block(rng: &mut SplitMix64) -> String {
    let coord = |rng: &mut SplitMix64| match rng.next_index(6) {
        0 => -rng.next_f64() * 500.0,
        1 => 1000.0 + rng.next_f64() * 500.0,
        2 => [0.0, 1000.0, -1e-9, 1000.0 + 1e-9][rng.next_index(4)],
        _ => rng.next_f64() * 1000.0,
    };
    let power = |rng: &mut SplitMix64| match rng.next_index(5) {
        0 => 20.0 + rng.next_f64() * 30.0,
        1 => -rng.next_f64() * 30.0,
        2 => [20.0, 20.000001, 0.0, -0.0][rng.next_index(4)],
        _ => rng.next_f64() * 20.0,
    };
    let (x, y, p) = (coord(rng), coord(rng), power(rng));
    let body = match rng.next_index(10) {
        0 => format!(r#"{{"uav_positions": [[{x}, {y}]], "tx_powers_dbm": ["{p}"]}}"#),
        1 => format!(r#"{{"uav_positions": [[{x}, {y}, 5]], "tx_powers_dbm": [{p}]}}"#),
        2 => format!(r#"{{"uav_positions": [[{x}, {y}], [1, 1]], "tx_powers_dbm": [{p}, 1]}}"#),
        3 => format!(r#"{{"uav_positions": [[{x}, {y}]], "tx_powers_dbm": [{p}], "note": 1}}"#),
        4 => format!(r#"{{"uav_positions": [[{x}, {y}]], "tx_powers_dbm": [{p}e400]}}"#),
        5 => format!(r#"{{"uav_positions": [[{x}, {y}]], "tx_powers_dbm": [{p}"#),
        _ => format!(r#"{{"uav_positions": [[{x}, {y}]], "tx_powers_dbm": [{p}]}}"#),
    };
    match rng.next_index(3) {
        0 => body,
        _ => format!("```strategy\n{body}\n```"),
    }
}

fn extraction_safety() -> Outcome {
    let started = Instant::now();
    let scenario = NetworkScenario::single_uav(generate_users(42, 10, Area::default()).unwrap(), 400.0);
    let mut rng = SplitMix64::new(0x5AFE);
    let (mut accepted, mut rejected, mut violations) = (0, 0, 0);
    for _ in 0..10_000 {
        let trace = ReasoningTrace {
            steps: vec![],
            final_block: fuzz_block(&mut rng),
            backend_id: "fuzz".into(),
            token_usage: None,
            latency_ms: 0,
        };
        match extract_strategy(&trace, &scenario) {
            Ok(cmd) => {
                accepted += 1;
                let d: DeploymentDecision = cmd.to_decision(&scenario);
                let bad_power = cmd.tx_powers_dbm.iter().any(|&p| !(0.0..=20.0).contains(&p));
                let bad_pos = cmd.uav_positions.iter().any(|&(x, y)| !scenario.area_m.contains(x, y));
                if bad_power || bad_pos || d.validate(&scenario).is_err() {
                    violations += 1;
                }
            }
            Err(e) if e.is_extraction_failure() => rejected += 1,
            Err(e) => return Err(format!("untyped extraction error: {e}")),
        }
    }
    ensure(violations == 0, || format!("{violations} silently accepted violations"))?;
    ensure(accepted > 0 && rejected > 0, || format!("degenerate corpus: {accepted} accepted, {rejected} rejected"))?;
    within_budget(started, Duration::from_secs(10), "fuzz corpus")?;
    Ok(format!("10000 cases: {accepted} valid accepted, {rejected} rejected, 0 violations accepted"))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "noise floor", noise_floor()),
        (2, "link budget", link_budget()),
        (3, "coverage monotonicity", coverage_monotonicity()),
        (4, "optimizer quality", optimizer_quality()),
        (5, "activation learning", activation_learning()),
    ];
    let sweep = sweep_direction();
    let first_csv = sweep.as_ref().map(|(_, csv)| csv.clone()).unwrap_or_default();
    results.push((6, "coverage and sum-rate direction", sweep.map(|(msg, _)| msg)));
    results.push((7, "trained vs random activation", activation_direction()));
    results.push((8, "utility formula", utility_formula()));
    results.push((9, "sweep determinism", determinism(&first_csv)));
    results.push((10, "extraction safety", extraction_safety()));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {n:>2} ({name}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n:>2} ({name}): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
