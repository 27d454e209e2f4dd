//! Post-hoc analysis of a completed trace: pool utilization, throughput,
//! per-task latency metrics, and barrier-wait decomposition.
//!
//! Busy time is recomputed here from the event stream alone (membership
//! reconstruction plus the scenario's rate constants), independently of the
//! engine's interval accounting; the two routes are compared in tests.

mod report;
mod timeline;

pub use report::{pools_csv, report_json, summary_table, tasks_csv};
pub use timeline::{build_timeline, timeline_ascii, timeline_svg, Lane, Phase, TimelineModel};

use serde::Serialize;
use thiserror::Error;

use crate::cluster::PoolId;
use crate::engine::{EventKind, TraceLog};
use crate::scenario::Scenario;
use crate::sched::SchedulerKind;
use crate::workload::RolloutCost;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("incomplete trace: no termination marker (run did not finish)")]
    IncompleteTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolMetrics {
    pub pool: PoolId,
    pub device_count: u64,
    pub busy_device_seconds: f64,
    /// Busy fraction of device-seconds over the horizon.
    pub utilization: f64,
    pub idle_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskMetrics {
    pub task_id: String,
    pub submit_time: f64,
    /// Committed training steps.
    pub steps: u64,
    /// Submission to first policy commit.
    pub ttfs_seconds: Option<f64>,
    /// Submission to first rollout start (secondary latency view).
    pub first_rollout_seconds: Option<f64>,
    /// Mean gap between consecutive commits.
    pub tpts_mean_seconds: Option<f64>,
    pub barrier_wait_total_seconds: f64,
    pub barrier_rounds: u64,
    pub barrier_wait_mean_per_round_seconds: f64,
    /// Submission to task completion.
    pub completion_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub scheduler: String,
    pub seed: u64,
    pub horizon_seconds: f64,
    pub total_steps: u64,
    pub steps_per_hour: f64,
    pub per_pool: Vec<PoolMetrics>,
    pub per_task: Vec<TaskMetrics>,
}

impl MetricsReport {
    pub fn pool(&self, id: PoolId) -> Option<&PoolMetrics> {
        self.per_pool.iter().find(|p| p.pool == id)
    }
}

/// Compute every report metric from the trace and the scenario constants.
pub fn compute_metrics(
    trace: &TraceLog,
    scenario: &Scenario,
) -> Result<MetricsReport, MetricsError> {
    if trace.termination.is_none() {
        return Err(MetricsError::IncompleteTrace);
    }
    let horizon = trace.horizon;
    let n = scenario.tasks.len();
    let collocated = scenario.collocated();

    // --- pool busy reconstruction -----------------------------------------
    let tokens_mode: Vec<bool> = scenario
        .tasks
        .iter()
        .map(|t| matches!(t.rollout_cost, RolloutCost::Tokens(_)) && !collocated)
        .collect();
    let caps: Vec<f64> = (0..n)
        .map(|i| scenario.profile_of(i).per_batch_peak_decode_rate)
        .collect();
    let pool_rate = scenario.cluster.rollout_pool_token_rate;

    // Join-ordered membership mirrors the engine's pool vector.
    let mut ps_members: Vec<usize> = Vec::new();
    let mut seconds_active: u32 = 0;
    let share = |members: &[usize], seconds_active: u32| -> f64 {
        if seconds_active > 0 {
            return 1.0;
        }
        let m = members.len();
        if m == 0 {
            return 0.0;
        }
        let fair = pool_rate / m as f64;
        let delivered: f64 = members.iter().map(|&t| caps[t].min(fair)).sum();
        (delivered / pool_rate).min(1.0)
    };

    let mut rollout_busy = 0.0f64;
    let mut train_busy = 0.0f64;
    let mut shared_busy = 0.0f64;
    let rollout_devices = scenario.cluster.rollout_devices as f64;
    let train_devices = scenario.cluster.train_devices as f64;
    let total_devices = scenario.cluster.total_devices() as f64;

    let mut cur_share = 0.0f64;
    let mut last_t = 0.0f64;
    // Open collocated phase intervals: (start, is_train) per task; train
    // start for the disaggregated pool.
    let mut seg_open: Vec<Option<f64>> = vec![None; n];
    let mut train_open: Option<(usize, f64)> = None;

    // --- per-task latency state --------------------------------------------
    let mut first_rollout: Vec<Option<f64>> = vec![None; n];
    let mut commits: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut completion: Vec<Option<f64>> = vec![None; n];

    // --- barrier-wait state -------------------------------------------------
    let barrier_scheduler = matches!(scenario.scheduler.kind, SchedulerKind::MultiLoraSync)
        || (scenario.scheduler.kind == SchedulerKind::Marlaas && scenario.scheduler.disable_async);
    let mut ready_group: Vec<(usize, f64)> = Vec::new();
    let mut barrier_wait: Vec<f64> = vec![0.0; n];
    let mut barrier_rounds: Vec<u64> = vec![0; n];

    for r in &trace.records {
        let t = r.time.min(horizon);
        // Integrate the rollout-pool share up to this event.
        if !collocated && t > last_t {
            rollout_busy += (t - last_t) * cur_share * rollout_devices;
            last_t = t;
        }
        let task = r.task;
        match r.kind {
            EventKind::RolloutStarted | EventKind::ToolCallDone => {
                let task = task.expect("rollout events carry a task");
                if collocated {
                    seg_open[task] = Some(t);
                } else if tokens_mode[task] {
                    ps_members.push(task);
                    cur_share = share(&ps_members, seconds_active);
                } else {
                    seconds_active += 1;
                    cur_share = share(&ps_members, seconds_active);
                }
                if r.kind == EventKind::RolloutStarted && first_rollout[task].is_none() {
                    first_rollout[task] = Some(t);
                }
            }
            EventKind::RolloutSegmentDone => {
                let task = task.expect("segment events carry a task");
                if collocated {
                    if let Some(start) = seg_open[task].take() {
                        shared_busy += (t - start) * total_devices;
                    }
                } else if tokens_mode[task] {
                    if let Some(pos) = ps_members.iter().position(|&m| m == task) {
                        ps_members.remove(pos);
                    }
                    cur_share = share(&ps_members, seconds_active);
                } else {
                    seconds_active -= 1;
                    cur_share = share(&ps_members, seconds_active);
                }
            }
            EventKind::TrainStarted => {
                let task = task.expect("train events carry a task");
                train_open = Some((task, t));
            }
            EventKind::TrainDone => {
                if let Some((_, start)) = train_open.take() {
                    if collocated {
                        shared_busy += (t - start) * total_devices;
                    } else {
                        train_busy += (t - start) * train_devices;
                    }
                }
            }
            EventKind::TrajectoryReady => {
                if barrier_scheduler {
                    let task = task.expect("trajectory events carry a task");
                    ready_group.push((task, t));
                }
            }
            EventKind::PolicyCommitted => {
                let task = task.expect("commit events carry a task");
                commits[task].push(t);
            }
            EventKind::TaskCompleted => {
                let task = task.expect("completion events carry a task");
                completion[task] = Some(t);
            }
            _ => {}
        }
        // Barrier release: the first training of a wave starts once every
        // member's trajectory is in; waits are measured to the slowest one.
        if barrier_scheduler && r.kind == EventKind::TrainStarted && !ready_group.is_empty() {
            let barrier = ready_group
                .iter()
                .map(|&(_, rt)| rt)
                .fold(f64::NEG_INFINITY, f64::max);
            for (task, rt) in ready_group.drain(..) {
                barrier_wait[task] += barrier - rt;
                barrier_rounds[task] += 1;
            }
        }
    }

    // Close open intervals at the horizon.
    if !collocated && horizon > last_t {
        rollout_busy += (horizon - last_t) * cur_share * rollout_devices;
    }
    if let Some((_, start)) = train_open {
        if collocated {
            shared_busy += (horizon - start) * total_devices;
        } else {
            train_busy += (horizon - start) * train_devices;
        }
    }
    for open in seg_open.into_iter().flatten() {
        shared_busy += (horizon - open) * total_devices;
    }

    let mk_pool = |pool: PoolId, devices: u64, busy: f64| -> PoolMetrics {
        let capacity = devices as f64 * horizon;
        let utilization = if capacity > 0.0 { busy / capacity } else { 0.0 };
        PoolMetrics {
            pool,
            device_count: devices,
            busy_device_seconds: busy,
            utilization,
            idle_fraction: 1.0 - utilization,
        }
    };
    let per_pool = if collocated {
        vec![mk_pool(
            PoolId::Shared,
            scenario.cluster.total_devices(),
            shared_busy,
        )]
    } else {
        vec![
            mk_pool(
                PoolId::Rollout,
                scenario.cluster.rollout_devices,
                rollout_busy,
            ),
            mk_pool(PoolId::Train, scenario.cluster.train_devices, train_busy),
        ]
    };

    let mut per_task = Vec::with_capacity(n);
    let mut total_steps = 0u64;
    for (i, spec) in scenario.tasks.iter().enumerate() {
        let steps = commits[i].len() as u64;
        total_steps += steps;
        let ttfs = commits[i].first().map(|c| c - spec.submit_time);
        let tpts = if commits[i].len() >= 2 {
            let gaps: Vec<f64> = commits[i].windows(2).map(|w| w[1] - w[0]).collect();
            Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
        } else {
            None
        };
        let rounds = barrier_rounds[i];
        per_task.push(TaskMetrics {
            task_id: spec.task_id.clone(),
            submit_time: spec.submit_time,
            steps,
            ttfs_seconds: ttfs,
            first_rollout_seconds: first_rollout[i].map(|t| t - spec.submit_time),
            tpts_mean_seconds: tpts,
            barrier_wait_total_seconds: barrier_wait[i],
            barrier_rounds: rounds,
            barrier_wait_mean_per_round_seconds: if rounds > 0 {
                barrier_wait[i] / rounds as f64
            } else {
                0.0
            },
            completion_seconds: completion[i].map(|t| t - spec.submit_time),
        });
    }

    let steps_per_hour = if horizon > 0.0 {
        total_steps as f64 / (horizon / 3600.0)
    } else {
        0.0
    };

    Ok(MetricsReport {
        scenario: scenario.name.clone(),
        scheduler: scenario.scheduler.label(),
        seed: scenario.seed,
        horizon_seconds: horizon,
        total_steps,
        steps_per_hour,
        per_pool,
        per_task,
    })
}
