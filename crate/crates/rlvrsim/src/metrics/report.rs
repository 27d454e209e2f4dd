//! Report serialization: JSON and CSV with a stable column order. Durations
//! are seconds, rates steps/hr, fractions percentages with two decimals.

use serde::Serialize;

use super::MetricsReport;

const TOOL_VERSION: &str = concat!("rlvrsim ", env!("CARGO_PKG_VERSION"));

fn pct2(fraction: f64) -> f64 {
    (fraction * 100.0 * 100.0).round() / 100.0
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    scenario: &'a str,
    scheduler: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct JsonPool<'a> {
    pool: &'a str,
    device_count: u64,
    busy_device_seconds: f64,
    util_pct: f64,
    idle_pct: f64,
}

#[derive(Serialize)]
struct JsonTask<'a> {
    task_id: &'a str,
    submit_time: f64,
    steps: u64,
    ttfs_seconds: Option<f64>,
    first_rollout_seconds: Option<f64>,
    tpts_mean_seconds: Option<f64>,
    barrier_wait_total_seconds: f64,
    barrier_rounds: u64,
    barrier_wait_mean_per_round_seconds: f64,
    completion_seconds: Option<f64>,
}

#[derive(Serialize)]
struct JsonGlobal {
    horizon_seconds: f64,
    total_steps: u64,
    steps_per_hour: f64,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    meta: Meta<'a>,
    global: JsonGlobal,
    pools: Vec<JsonPool<'a>>,
    tasks: Vec<JsonTask<'a>>,
}

pub fn report_json(report: &MetricsReport) -> String {
    let doc = JsonReport {
        meta: Meta {
            tool: TOOL_VERSION,
            scenario: &report.scenario,
            scheduler: &report.scheduler,
            seed: report.seed,
        },
        global: JsonGlobal {
            horizon_seconds: report.horizon_seconds,
            total_steps: report.total_steps,
            steps_per_hour: report.steps_per_hour,
        },
        pools: report
            .per_pool
            .iter()
            .map(|p| JsonPool {
                pool: p.pool.as_str(),
                device_count: p.device_count,
                busy_device_seconds: p.busy_device_seconds,
                util_pct: pct2(p.utilization),
                idle_pct: pct2(p.idle_fraction),
            })
            .collect(),
        tasks: report
            .per_task
            .iter()
            .map(|t| JsonTask {
                task_id: &t.task_id,
                submit_time: t.submit_time,
                steps: t.steps,
                ttfs_seconds: t.ttfs_seconds,
                first_rollout_seconds: t.first_rollout_seconds,
                tpts_mean_seconds: t.tpts_mean_seconds,
                barrier_wait_total_seconds: t.barrier_wait_total_seconds,
                barrier_rounds: t.barrier_rounds,
                barrier_wait_mean_per_round_seconds: t.barrier_wait_mean_per_round_seconds,
                completion_seconds: t.completion_seconds,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub const TASKS_CSV_HEADER: &str = "task_id,submit_time,steps,ttfs_seconds,first_rollout_seconds,\
tpts_mean_seconds,barrier_wait_total_seconds,barrier_rounds,\
barrier_wait_mean_per_round_seconds,completion_seconds";

pub fn tasks_csv(report: &MetricsReport) -> String {
    let mut out = format!("# {TOOL_VERSION}\n");
    out.push_str(&format!(
        "# scenario={} scheduler={} seed={}\n",
        report.scenario, report.scheduler, report.seed
    ));
    out.push_str(TASKS_CSV_HEADER);
    out.push('\n');
    for t in &report.per_task {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            t.task_id,
            t.submit_time,
            t.steps,
            opt(t.ttfs_seconds),
            opt(t.first_rollout_seconds),
            opt(t.tpts_mean_seconds),
            t.barrier_wait_total_seconds,
            t.barrier_rounds,
            t.barrier_wait_mean_per_round_seconds,
            opt(t.completion_seconds),
        ));
    }
    out
}

pub fn pools_csv(report: &MetricsReport) -> String {
    let mut out = format!("# {TOOL_VERSION}\n");
    out.push_str(&format!(
        "# scenario={} scheduler={} seed={}\n",
        report.scenario, report.scheduler, report.seed
    ));
    out.push_str("pool,device_count,busy_device_seconds,util_pct,idle_pct\n");
    for p in &report.per_pool {
        out.push_str(&format!(
            "{},{},{},{:.2},{:.2}\n",
            p.pool.as_str(),
            p.device_count,
            p.busy_device_seconds,
            pct2(p.utilization),
            pct2(p.idle_fraction),
        ));
    }
    out
}

/// Headline table printed to stdout after a run.
pub fn summary_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "scenario {}  scheduler {}  seed {}\n",
        report.scenario, report.scheduler, report.seed
    ));
    out.push_str(&format!(
        "horizon {:.3} s ({:.4} h)  steps {}  steps/hr {:.2}\n",
        report.horizon_seconds,
        report.horizon_seconds / 3600.0,
        report.total_steps,
        report.steps_per_hour
    ));
    for p in &report.per_pool {
        out.push_str(&format!(
            "pool {:<8} devices {:>3}  util {:>6.2}%  idle {:>6.2}%\n",
            p.pool.as_str(),
            p.device_count,
            pct2(p.utilization),
            pct2(p.idle_fraction)
        ));
    }
    out
}
