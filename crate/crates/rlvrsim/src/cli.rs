//! Scenario runner: resolves a scenario (file path or bundled name), applies
//! overrides and sweeps, runs simulations, and writes traces, reports, and
//! timelines to an output directory. The `rlvrsim` binary is a thin wrapper
//! over [`run_scenario`] and [`compare_schedulers`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::{run_simulation, RunUntil, SimError, SimOutcome};
use crate::metrics::{
    build_timeline, compute_metrics, pools_csv, report_json, summary_table, tasks_csv,
    timeline_ascii, timeline_svg, MetricsError, MetricsReport,
};
use crate::scenario::{bundled_text, load_scenario, Scenario, ScenarioError};
use crate::sched::{SchedulerChoice, SchedulerKind};

pub const OUT_DIR_ENV: &str = "RLVRSIM_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("invalid request: {0}")]
    Request(String),
}

impl CliError {
    /// Process exit code: parse 2, validation 3, deadlock 4, i/o 5,
    /// anything else 6.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(ScenarioError::Parse(_)) => 2,
            CliError::Scenario(ScenarioError::Validation(_)) | CliError::Request(_) => 3,
            CliError::Sim(SimError::Deadlock { .. }) => 4,
            CliError::Sim(_) | CliError::Metrics(_) => 3,
            CliError::Io(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimelineFormat {
    Ascii,
    Svg,
}

impl std::str::FromStr for TimelineFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ascii" => Ok(TimelineFormat::Ascii),
            "svg" => Ok(TimelineFormat::Svg),
            other => Err(format!("unknown timeline format '{other}'")),
        }
    }
}

/// Sweep over one scenario parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    TaskCount,
    KvBudgetBytes,
}

impl SweepSpec {
    /// Parse `"task_count=1,2,4"` style flags.
    pub fn parse(s: &str) -> Result<SweepSpec, CliError> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| CliError::Request(format!("sweep '{s}' is not name=v1,v2,...")))?;
        let param = match name {
            "task_count" => SweepParam::TaskCount,
            "kv_budget_bytes" => SweepParam::KvBudgetBytes,
            other => {
                return Err(CliError::Request(format!(
                    "unknown sweep parameter '{other}' (task_count, kv_budget_bytes)"
                )))
            }
        };
        let values: Vec<u64> = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|e| CliError::Request(format!("sweep value '{v}': {e}")))
            })
            .collect::<Result<_, _>>()?;
        if values.is_empty() {
            return Err(CliError::Request("sweep values must be non-empty".into()));
        }
        Ok(SweepSpec { param, values })
    }

    pub fn param_name(&self) -> &'static str {
        match self.param {
            SweepParam::TaskCount => "task_count",
            SweepParam::KvBudgetBytes => "kv_budget_bytes",
        }
    }

    fn apply(&self, base: &Scenario, value: u64) -> Result<Scenario, ScenarioError> {
        match self.param {
            SweepParam::TaskCount => base.with_task_count(value as usize),
            SweepParam::KvBudgetBytes => base.with_kv_budget(value),
        }
    }
}

/// A runnable request: scenario source plus overrides.
#[derive(Debug, Clone)]
pub struct RunRequest {
    /// Path to a scenario file, or the name of a bundled scenario.
    pub scenario: String,
    pub scheduler: Option<SchedulerChoice>,
    pub seed: Option<u64>,
    pub sweep: Option<SweepSpec>,
    pub out_dir: PathBuf,
    pub timeline: TimelineFormat,
    /// ASCII timeline column width in seconds (auto when absent).
    pub quantum: Option<f64>,
    /// Stop at this simulated time instead of running to completion.
    pub until_seconds: Option<f64>,
}

impl RunRequest {
    pub fn new(scenario: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario: scenario.into(),
            scheduler: None,
            seed: None,
            sweep: None,
            out_dir: out_dir.into(),
            timeline: TimelineFormat::Ascii,
            quantum: None,
            until_seconds: None,
        }
    }

    /// Default output directory: `$RLVRSIM_OUT_DIR` or `./rlvrsim-out`.
    pub fn default_out_dir() -> PathBuf {
        std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("rlvrsim-out"))
    }
}

/// Resolve a scenario argument: an existing file wins, otherwise a bundled
/// scenario name.
pub fn resolve_scenario(arg: &str) -> Result<Scenario, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        let mut s = load_scenario(&text)?;
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            s.name = stem.to_string();
        }
        Ok(s)
    } else if let Some(text) = bundled_text(arg) {
        let mut s = load_scenario(text)?;
        s.name = arg.to_string();
        Ok(s)
    } else {
        Err(CliError::Io(format!(
            "scenario '{arg}' is neither a readable file nor a bundled scenario"
        )))
    }
}

fn effective_scenario(req: &RunRequest, base: &Scenario) -> Result<Scenario, CliError> {
    let mut s = base.clone();
    if let Some(choice) = &req.scheduler {
        s = s.with_scheduler(choice.clone())?;
    }
    if let Some(seed) = req.seed {
        s = s.with_seed(seed);
    }
    Ok(s)
}

fn run_hash(scenario: &Scenario, sweep_value: Option<u64>) -> u64 {
    // FNV-1a over the identifying run inputs.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    };
    eat(scenario.name.as_bytes());
    eat(scenario.scheduler.label().as_bytes());
    eat(&scenario.seed.to_le_bytes());
    eat(&sweep_value.unwrap_or(0).to_le_bytes());
    eat(&(scenario.tasks.len() as u64).to_le_bytes());
    h
}

/// Artifacts produced by one simulation.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub report: MetricsReport,
    pub sweep_value: Option<u64>,
}

fn until_of(req: &RunRequest, scenario: &Scenario) -> RunUntil {
    req.until_seconds
        .or(scenario.horizon)
        .map(RunUntil::Horizon)
        .unwrap_or(RunUntil::AllTasksComplete)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn run_one(
    req: &RunRequest,
    scenario: &Scenario,
    sweep_value: Option<u64>,
) -> Result<(SimOutcome, MetricsReport), CliError> {
    let outcome = run_simulation(scenario, until_of(req, scenario))?;
    let report = compute_metrics(&outcome.trace, scenario)?;
    let _ = sweep_value;
    Ok((outcome, report))
}

fn write_artifacts(
    req: &RunRequest,
    scenario: &Scenario,
    outcome: &SimOutcome,
    report: &MetricsReport,
    sweep_value: Option<u64>,
) -> Result<PathBuf, CliError> {
    let hash = run_hash(scenario, sweep_value);
    let dir = req.out_dir.join(format!(
        "{}_{}_{}_{:08x}",
        scenario.name,
        scenario.scheduler.label(),
        scenario.seed,
        hash & 0xffff_ffff
    ));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;

    write_file(
        &dir.join("trace.ndjson"),
        &outcome.trace.to_ndjson(scenario),
    )?;
    write_file(&dir.join("report.json"), &report_json(report))?;
    write_file(&dir.join("tasks.csv"), &tasks_csv(report))?;
    write_file(&dir.join("pools.csv"), &pools_csv(report))?;
    let model = build_timeline(&outcome.trace, scenario);
    match req.timeline {
        TimelineFormat::Ascii => write_file(
            &dir.join("timeline.txt"),
            &timeline_ascii(&model, req.quantum),
        )?,
        TimelineFormat::Svg => write_file(&dir.join("timeline.svg"), &timeline_svg(&model))?,
    }
    Ok(dir)
}

/// Run a scenario (optionally swept), writing artifacts per run and printing
/// the headline metrics. Returns one entry per sweep point.
pub fn run_scenario(req: &RunRequest) -> Result<Vec<RunArtifacts>, CliError> {
    let base = resolve_scenario(&req.scenario)?;
    let effective = effective_scenario(req, &base)?;

    let points: Vec<Option<u64>> = match &req.sweep {
        Some(sweep) => sweep.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };

    let mut artifacts = Vec::new();
    for point in points {
        let scenario = match (point, &req.sweep) {
            (Some(v), Some(sweep)) => sweep.apply(&effective, v)?,
            _ => effective.clone(),
        };
        let (outcome, report) = run_one(req, &scenario, point)?;
        let dir = write_artifacts(req, &scenario, &outcome, &report, point)?;
        print!("{}", summary_table(&report));
        artifacts.push(RunArtifacts {
            dir,
            report,
            sweep_value: point,
        });
    }
    if req.sweep.is_some() {
        let combined = combined_csv(req, &artifacts, None);
        let path = req.out_dir.join("sweep.csv");
        write_file(&path, &combined)?;
    }
    Ok(artifacts)
}

/// One row per (scheduler, sweep point), identical seeds across schedulers,
/// with speedup and utilization ratios against the baseline scheduler
/// (`single_disaggregated` when present, otherwise the first listed).
pub fn compare_schedulers(
    req: &RunRequest,
    schedulers: &[SchedulerChoice],
) -> Result<Vec<RunArtifacts>, CliError> {
    if schedulers.is_empty() {
        return Err(CliError::Request("scheduler list must be non-empty".into()));
    }
    let base = resolve_scenario(&req.scenario)?;
    let points: Vec<Option<u64>> = match &req.sweep {
        Some(sweep) => sweep.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };

    let mut artifacts = Vec::new();
    for choice in schedulers {
        let mut per_sched_req = req.clone();
        per_sched_req.scheduler = Some(choice.clone());
        let effective = effective_scenario(&per_sched_req, &base)?;
        for &point in &points {
            let scenario = match (point, &req.sweep) {
                (Some(v), Some(sweep)) => sweep.apply(&effective, v)?,
                _ => effective.clone(),
            };
            let (outcome, report) = run_one(req, &scenario, point)?;
            let dir = write_artifacts(req, &scenario, &outcome, &report, point)?;
            artifacts.push(RunArtifacts {
                dir,
                report,
                sweep_value: point,
            });
        }
    }

    let baseline = schedulers
        .iter()
        .find(|c| c.kind == SchedulerKind::SingleDisaggregated)
        .unwrap_or(&schedulers[0])
        .label();
    let combined = combined_csv(req, &artifacts, Some(&baseline));
    let path = req.out_dir.join("compare.csv");
    write_file(&path, &combined)?;
    print!("{combined}");
    Ok(artifacts)
}

/// Combined table over runs; ratio columns appear when a baseline scheduler
/// is given.
pub fn combined_csv(
    req: &RunRequest,
    artifacts: &[RunArtifacts],
    baseline: Option<&str>,
) -> String {
    let sweep_name = req.sweep.as_ref().map(|s| s.param_name()).unwrap_or("none");
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario,scheduler,sweep_param,sweep_value,seed,horizon_seconds,total_steps,\
         steps_per_hour,rollout_util_pct,train_util_pct{}",
        if baseline.is_some() {
            ",speedup_vs_baseline,rollout_util_ratio_vs_baseline"
        } else {
            ""
        }
    );
    let util_pct = |r: &MetricsReport, pool: crate::cluster::PoolId| -> f64 {
        r.pool(pool)
            .map(|p| (p.utilization * 10000.0).round() / 100.0)
            .unwrap_or(0.0)
    };
    for a in artifacts {
        let r = &a.report;
        let rollout_util = util_pct(r, crate::cluster::PoolId::Rollout)
            .max(util_pct(r, crate::cluster::PoolId::Shared));
        let train_util = util_pct(r, crate::cluster::PoolId::Train);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.scheduler,
            sweep_name,
            a.sweep_value.map(|v| v.to_string()).unwrap_or_default(),
            r.seed,
            r.horizon_seconds,
            r.total_steps,
            r.steps_per_hour,
            rollout_util,
            train_util,
        );
        if let Some(base_label) = baseline {
            let base = artifacts
                .iter()
                .find(|b| b.report.scheduler == base_label && b.sweep_value == a.sweep_value)
                .map(|b| &b.report);
            let (speedup, util_ratio) = match base {
                Some(b) if b.steps_per_hour > 0.0 => {
                    let bu = util_pct(b, crate::cluster::PoolId::Rollout)
                        .max(util_pct(b, crate::cluster::PoolId::Shared));
                    (
                        r.steps_per_hour / b.steps_per_hour,
                        if bu > 0.0 { rollout_util / bu } else { 0.0 },
                    )
                }
                _ => (0.0, 0.0),
            };
            let _ = write!(out, ",{speedup},{util_ratio}");
        }
        let _ = writeln!(out);
    }
    out
}
