//! Experiment harness: bundled scenarios, result writing, single-path
//! baselines, and the delay-imbalance sweep.

pub mod sweep;

use crate::error::{Error, Result};
use crate::metrics;
use crate::scenario::ScenarioConfig;
use crate::simcore::{run_scenario, RunOptions, RunResult};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Scenario files compiled into the library so the CLI works from any
/// directory; the same files live under `scenarios/` in the repository.
pub const BUNDLED_SCENARIOS: &[(&str, &str, &str)] = &[
    (
        "minimal",
        include_str!("../../../../scenarios/minimal.toml"),
        "Two nodes, one 10 Mbit/s / 25 ms link, one 30 s TCP flow",
    ),
    (
        "table2-bej-haw",
        include_str!("../../../../scenarios/table2-bej-haw.toml"),
        "East Asia backbone, BEJ->HAW over two 10 Mbit/s 95 ms paths",
    ),
    (
        "table2-tok-syd",
        include_str!("../../../../scenarios/table2-tok-syd.toml"),
        "East Asia backbone, TOK->SYD over 10 + 20 Mbit/s 60 ms paths",
    ),
    (
        "fairness",
        include_str!("../../../../scenarios/fairness.toml"),
        "Ten concurrent 30 s TCP flows sharing two 10 Mbit/s paths",
    ),
    (
        "congestion",
        include_str!("../../../../scenarios/congestion.toml"),
        "TOK->SYD flow with UDP cross traffic saturating SIN->SYD at t=10 s",
    ),
];

/// Resolves a scenario by bundled name or filesystem path.
pub fn load_scenario(name_or_path: &str) -> Result<ScenarioConfig> {
    if let Some((name, text, _)) = BUNDLED_SCENARIOS
        .iter()
        .find(|(name, _, _)| *name == name_or_path)
    {
        let mut cfg = ScenarioConfig::parse(text)?;
        if cfg.name.is_empty() {
            cfg.name = name.to_string();
        }
        return Ok(cfg);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return ScenarioConfig::load(path);
    }
    Err(Error::UnknownScenario(name_or_path.to_string()))
}

/// Scenario-level overrides applied after loading (CLI flags).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub duration_s: Option<f64>,
    pub reorder_threshold: Option<f64>,
    pub aggregation_cutoff: Option<f64>,
    pub poll_interval_ms: Option<f64>,
    pub max_paths: Option<usize>,
    pub wrr_round_size: Option<u32>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if let Some(d) = self.duration_s {
            if d <= 0.0 {
                return Err(Error::InvalidArgument("duration must be positive".into()));
            }
            cfg.sim.duration = crate::time::SimTime::from_secs(d);
            // keep flow stop times inside the new horizon
            for f in &mut cfg.flows {
                f.stop = f.stop.min(cfg.sim.duration);
            }
        }
        if let Some(v) = self.reorder_threshold {
            cfg.controller.reorder_threshold = v;
        }
        if let Some(v) = self.aggregation_cutoff {
            cfg.controller.aggregation_cutoff = v;
        }
        if let Some(v) = self.poll_interval_ms {
            cfg.controller.poll_interval_ms = v;
        }
        if let Some(v) = self.max_paths {
            cfg.controller.max_paths = v;
        }
        if let Some(v) = self.wrr_round_size {
            cfg.sim.wrr_round_size = v;
        }
        cfg.controller.validate()
    }
}

/// A single-path baseline: the same scenario pinned to one plan path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Baseline {
    pub path_index: usize,
    pub hops: Vec<crate::netmodel::NodeId>,
    pub goodput_bps: f64,
}

/// Run summary written to `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub duration_s: f64,
    pub metrics_schema: String,
    /// Aggregate TCP goodput over the multipath run.
    pub aggregate_goodput_bps: f64,
    pub flows: Vec<crate::simcore::FlowSummary>,
    /// Initial plan's delay imbalance per demand.
    pub plan_mdi: Vec<f64>,
    pub plan_decisions: Vec<crate::controller::PlanDecision>,
    /// Goodput of the same flow pinned to each plan path alone.
    pub baselines: Vec<Baseline>,
    /// Multipath aggregate over the best single-path baseline.
    pub ratio_over_best_single: Option<f64>,
    /// Multipath aggregate over the sum of single-path baselines.
    pub ratio_over_sum_singles: Option<f64>,
}

/// A finished experiment: the multipath run, per-path baselines, and the
/// directory the artifacts were written to (when requested).
#[derive(Debug)]
pub struct Experiment {
    pub result: RunResult,
    pub baselines: Vec<(RunResult, Baseline)>,
    pub summary: Summary,
    pub out_dir: Option<PathBuf>,
}

/// Runs a scenario plus its single-path baselines and assembles the
/// summary. `out_dir`, when given, receives
/// `<out_dir>/<scenario>/<run-id>/{metrics.csv, summary.json, trace.log}`.
pub fn run_experiment(
    name_or_path: &str,
    overrides: &Overrides,
    opts: &RunOptions,
    out_dir: Option<&Path>,
) -> Result<Experiment> {
    let mut cfg = load_scenario(name_or_path)?;
    overrides.apply(&mut cfg)?;
    run_experiment_config(&cfg, opts, out_dir)
}

/// Same as [`run_experiment`] for an already-built configuration.
pub fn run_experiment_config(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
    out_dir: Option<&Path>,
) -> Result<Experiment> {
    let result = run_scenario(cfg, opts)?;

    // single-path baselines from the initial plan (skip for pinned runs)
    let mut baselines = Vec::new();
    if opts.pin_path.is_none() {
        let initial_paths = result
            .decisions
            .first()
            .map(|d| d.plan.paths.clone())
            .unwrap_or_default();
        if initial_paths.len() > 1 {
            for (i, path) in initial_paths.iter().enumerate() {
                let pinned = RunOptions {
                    pin_path: Some(i),
                    trace: false,
                    trace_reseq: false,
                };
                let run = run_scenario(cfg, &pinned)?;
                let baseline = Baseline {
                    path_index: i,
                    hops: path.hops.clone(),
                    goodput_bps: run.aggregate_tcp_goodput(),
                };
                baselines.push((run, baseline));
            }
        }
    }

    let summary = summarize(cfg, &result, &baselines);
    let out_dir = match out_dir {
        Some(base) => Some(write_results(base, cfg, &result, &summary)?),
        None => None,
    };
    Ok(Experiment {
        result,
        baselines,
        summary,
        out_dir,
    })
}

fn summarize(
    cfg: &ScenarioConfig,
    result: &RunResult,
    baselines: &[(RunResult, Baseline)],
) -> Summary {
    let aggregate = result.aggregate_tcp_goodput();
    let best_single = baselines
        .iter()
        .map(|(_, b)| b.goodput_bps)
        .fold(f64::NAN, f64::max);
    let sum_singles: f64 = baselines.iter().map(|(_, b)| b.goodput_bps).sum();
    let plan_mdi = result
        .decisions
        .iter()
        .filter(|d| matches!(d.reason, crate::controller::PlanReason::Initial))
        .map(|d| d.plan.mdi)
        .collect();
    Summary {
        scenario: result.scenario.clone(),
        seed: result.seed,
        duration_s: cfg.sim.duration.as_secs(),
        metrics_schema: metrics::METRICS_SCHEMA_VERSION.to_string(),
        aggregate_goodput_bps: aggregate,
        flows: result.flows.clone(),
        plan_mdi,
        plan_decisions: result.decisions.clone(),
        baselines: baselines.iter().map(|(_, b)| b.clone()).collect(),
        ratio_over_best_single: (!baselines.is_empty() && best_single > 0.0)
            .then(|| aggregate / best_single),
        ratio_over_sum_singles: (!baselines.is_empty() && sum_singles > 0.0)
            .then(|| aggregate / sum_singles),
    }
}

/// Writes `metrics.csv`, `summary.json` and (when tracing) `trace.log`
/// under `<base>/<scenario>/<run-id>/`, returning the run directory.
fn write_results(
    base: &Path,
    cfg: &ScenarioConfig,
    result: &RunResult,
    summary: &Summary,
) -> Result<PathBuf> {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let scenario_dir = base.join(&cfg.name);
    std::fs::create_dir_all(&scenario_dir)?;
    let mut run_dir = scenario_dir.join(stamp.to_string());
    let mut suffix = 0u32;
    while run_dir.exists() {
        suffix += 1;
        run_dir = scenario_dir.join(format!("{stamp}-{suffix}"));
    }
    std::fs::create_dir_all(&run_dir)?;

    std::fs::write(run_dir.join("metrics.csv"), metrics::to_csv(&result.metrics))?;
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Validation(format!("summary serialization failed: {e}")))?;
    std::fs::write(run_dir.join("summary.json"), json)?;
    if !result.trace.is_empty() {
        let mut lines = String::from("time_ms,event,flow,seq,path,detail\n");
        for t in &result.trace {
            lines.push_str(&t.to_line());
            lines.push('\n');
        }
        std::fs::write(run_dir.join("trace.log"), lines)?;
    }
    Ok(run_dir)
}

/// Runs the scenario multipath and pinned to each path, reporting the
/// aggregation ratio against the best single path.
pub fn compare_singlepath(cfg: &ScenarioConfig) -> Result<ComparisonReport> {
    let experiment = run_experiment_config(cfg, &RunOptions::default(), None)?;
    let multipath = experiment.result.aggregate_tcp_goodput();
    let best = experiment
        .baselines
        .iter()
        .map(|(_, b)| b.goodput_bps)
        .fold(0.0f64, f64::max);
    let ratio = if experiment.baselines.is_empty() {
        1.0 // single-path plan: multipath run is the baseline
    } else {
        multipath / best
    };
    Ok(ComparisonReport {
        multipath_goodput_bps: multipath,
        baselines: experiment
            .baselines
            .iter()
            .map(|(_, b)| b.clone())
            .collect(),
        ratio_over_best_single: ratio,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub multipath_goodput_bps: f64,
    pub baselines: Vec<Baseline>,
    pub ratio_over_best_single: f64,
}
