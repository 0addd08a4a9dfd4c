//! `idn-cot` command-line harness.
//!
//! Exit codes: 0 success, 2 configuration error, 3 transport error,
//! 4 internal invariant violation or any other failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use idn_cot::cot::{build_auto_cot_exemplars, ExemplarStore};
use idn_cot::harness::{
    cot_backend_for, embedder_for, write_plot_data, write_policy, write_records, BackendKind, EnvSettings,
    ExperimentConfig, Harness, HarnessError, Pipeline, SweepResult,
};
use idn_cot::intent::builtin_corpus;

/// `println!` that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Intent-driven chain-of-thought experiments for UAV network deployment
#[derive(Parser, Debug)]
#[command(name = "idn-cot", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the decision pipeline once and print the run record as JSON
    Simulate(Common),
    /// Run every (range, seed, pipeline) cell and write aggregated plot data
    Sweep(Common),
    /// Train the reasoning-module activation policy and write it as JSON
    TrainActivation(Common),
    /// Build Auto-CoT exemplars from the built-in intent corpus
    BuildExemplars {
        #[command(flatten)]
        common: Common,
        /// Number of clusters, one exemplar each
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Re-emit CSV and SVG from a `sweep.json` written by `sweep`
    Plot {
        /// Sweep result JSON
        #[arg(long)]
        input: PathBuf,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Skip the SVG chart
        #[arg(long)]
        no_svg: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config JSON; defaults apply to missing fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// User-draw seed for `simulate`; base random seed (`config_seed`) otherwise
    #[arg(long)]
    seed: Option<u64>,
    /// Communication range in meters
    #[arg(long)]
    range: Option<f64>,
    /// cot or non-cot
    #[arg(long, value_parser = parse_pipeline)]
    pipeline: Option<Pipeline>,
    /// mock or http
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendKind>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pipeline(s: &str) -> Result<Pipeline, String> {
    Pipeline::parse(s).ok_or_else(|| format!("unknown pipeline `{s}` (expected cot or non-cot)"))
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    BackendKind::parse(s).ok_or_else(|| format!("unknown backend `{s}` (expected mock or http)"))
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn simulate(c: &Common) -> Result<(), HarnessError> {
    let cfg = c.load()?;
    let env = EnvSettings::from_env();
    let h = Harness::from_config(cfg, &env)?;
    let seed = c.seed.unwrap_or(42);
    let range = c.range.unwrap_or(400.0);
    let pipeline = c.pipeline.unwrap_or(Pipeline::Cot);
    if !(200.0..=600.0).contains(&range) {
        return Err(HarnessError::Config(format!("range {range} m outside [200, 600] m")));
    }
    let (record, trace) = h.run_traced(seed, range, pipeline, None)?;
    if let (Some(m), Some(path), Some(threshold)) =
        (record.module, &h.config.exemplar_store, h.config.feedback_threshold)
    {
        let tag = h.modules()[m].task_tag;
        let stored = ExemplarStore::new(path).record_feedback(&h.config.intent, &trace, tag, &record.utility, threshold)?;
        if stored {
            eprintln!("stored run as a {} exemplar in {}", tag.as_str(), path.display());
        }
    }
    if let Some(out) = &c.out {
        write_records(&out.join("run.jsonl"), std::slice::from_ref(&record))?;
    }
    say!("{}", serde_json::to_string_pretty(&record).expect("serializable"));
    Ok(())
}

fn sweep_config(c: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = c.load()?;
    if let Some(s) = c.seed {
        cfg.config_seed = s;
    }
    if let Some(r) = c.range {
        cfg.range_sweep = vec![r];
    }
    if let Some(p) = c.pipeline {
        cfg.pipelines = vec![p];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_sweep(out: &Path, sweep: &SweepResult) -> Result<(), HarnessError> {
    write_plot_data(sweep, out, true)?;
    let rows = SweepResult { rows: sweep.rows.clone(), records: Vec::new(), errors: sweep.errors.clone() };
    std::fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&rows).expect("serializable") + "\n")?;
    write_records(&out.join("records.jsonl"), &sweep.records)?;
    Ok(())
}

fn sweep(c: &Common) -> Result<(), HarnessError> {
    let cfg = sweep_config(c)?;
    let mut h = Harness::from_config(cfg, &EnvSettings::from_env())?;
    let result = h.run_sweep()?;
    let out = c.out_dir();
    write_sweep(&out, &result)?;
    if let Some(p) = h.policy() {
        write_policy(&out.join("policy.json"), p)?;
    }
    for row in &result.rows {
        say!(
            "{:>6.1} m  {:<8} coverage {:.3}  sum rate {:>8.2} Mbps  q_total {:.4}  n {}{}",
            row.range_m,
            row.pipeline.as_str(),
            row.mean_coverage,
            row.mean_sum_rate_bps / 1e6,
            row.mean_q_total,
            row.n,
            if row.failures > 0 { format!("  ({} failed)", row.failures) } else { String::new() }
        );
    }
    if let Some(gain) = result.sum_rate_gain(400.0) {
        say!("measured sum-rate gain of cot over non_cot at 400 m: {:+.2}%", 100.0 * gain);
    }
    for e in &result.errors {
        eprintln!("run failed: {e}");
    }
    say!("wrote {}", out.display());
    Ok(())
}

fn train_activation(c: &Common) -> Result<(), HarnessError> {
    let cfg = sweep_config(c)?;
    let mut h = Harness::from_config(cfg, &EnvSettings::from_env())?;
    let out = h.train_activation()?;
    let path = c.out_dir().join("policy.json");
    write_policy(&path, &out.policy)?;
    for (i, (m, mean)) in h.modules().iter().zip(&out.module_means).enumerate() {
        say!("module {i} ({}): mean q_total {mean:.4}", m.task_tag.as_str());
    }
    for g in &out.greedy {
        say!("cluster {} state {}: greedy module {} ({})", g.cluster, g.state_id, g.module, g.task_tag.as_str());
    }
    let cmp = h.compare_activation()?;
    say!(
        "trained mean q_total {:.4} vs random {:.4} over {} episodes",
        cmp.trained_mean_q_total, cmp.random_mean_q_total, cmp.episodes
    );
    say!("wrote {}", path.display());
    Ok(())
}

fn build_exemplars(c: &Common, k: usize) -> Result<(), HarnessError> {
    let cfg = c.load()?;
    let env = EnvSettings::from_env();
    let backend = cot_backend_for(&cfg, &env)?;
    let embedder = embedder_for(&cfg, &env)?;
    let scenario = cfg.scenario.instantiate(c.seed.unwrap_or(42), c.range.unwrap_or(400.0))?;
    let records =
        build_auto_cot_exemplars(&builtin_corpus(), k, backend.as_ref(), embedder.as_ref(), &scenario, cfg.config_seed)?;
    let path = cfg.exemplar_store.clone().unwrap_or_else(|| c.out_dir().join("exemplars.jsonl"));
    let store = ExemplarStore::new(&path);
    for r in &records {
        store.append(r)?;
        say!("[{}] {}", r.tag.as_str(), r.question);
    }
    say!("appended {} exemplars to {}", records.len(), path.display());
    Ok(())
}

fn plot(input: &Path, out: &Path, svg: bool) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", input.display())))?;
    let sweep: SweepResult =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", input.display())))?;
    for p in write_plot_data(&sweep, out, svg)? {
        say!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Sweep(c) => sweep(c),
        Command::TrainActivation(c) => train_activation(c),
        Command::BuildExemplars { common, k } => build_exemplars(common, *k),
        Command::Plot { input, out, no_svg } => plot(input, out, !no_svg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
