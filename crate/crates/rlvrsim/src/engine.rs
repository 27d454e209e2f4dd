//! Deterministic discrete-event engine.
//!
//! A virtual clock, a priority queue keyed by `(time, schedule-seq)`, and a
//! dispatch loop that applies protocol mechanics (rollout segments, tool
//! calls, trajectory hand-off, training, commits) and forwards decision
//! points to the bound scheduling policy. Every run with equal inputs yields
//! a byte-identical trace.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::cluster::{kv_footprint, ClusterError, PoolId, ResourcePool, SharedPool};
use crate::manager::{EpisodeMarker, ManagerError, ManagerState, TrajectoryBatch};
use crate::rng::StreamRng;
use crate::scenario::Scenario;
use crate::sched::{AdmissionError, AdmissionState, AdmitOutcome, SchedulerState};
use crate::workload::{sample_latency, RolloutCost, WorkloadError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled in the past: {event_time} < clock {clock}")]
    TimeTravel { event_time: f64, clock: f64 },
    #[error("deadlock: event queue empty with incomplete tasks\n{diagnosis}")]
    Deadlock { diagnosis: String },
    #[error(transparent)]
    Manager(#[from] ManagerError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Admission(#[from] AdmissionError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("scheduler protocol violation: {0}")]
    Protocol(String),
}

/// Event kinds, in the order they appear in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TaskSubmitted,
    RolloutStarted,
    RolloutSegmentDone,
    ToolCallDone,
    TrajectoryReady,
    TrainStarted,
    TrainDone,
    PolicyCommitted,
    TaskCompleted,
    AdmissionRetry,
    RateRecompute,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::TaskSubmitted => "task_submitted",
            EventKind::RolloutStarted => "rollout_started",
            EventKind::RolloutSegmentDone => "rollout_segment_done",
            EventKind::ToolCallDone => "tool_call_done",
            EventKind::TrajectoryReady => "trajectory_ready",
            EventKind::TrainStarted => "train_started",
            EventKind::TrainDone => "train_done",
            EventKind::PolicyCommitted => "policy_committed",
            EventKind::TaskCompleted => "task_completed",
            EventKind::AdmissionRetry => "admission_retry",
            EventKind::RateRecompute => "rate_recompute",
        }
    }
}

/// One dispatched event. `seq` is globally monotone in trace order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
    pub task: Option<usize>,
    pub version: Option<u64>,
    pub pool: Option<PoolId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    AllComplete,
    HorizonReached,
}

/// Complete ordered record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    pub records: Vec<TraceRecord>,
    pub horizon: f64,
    pub termination: Option<Termination>,
}

impl TraceLog {
    /// Newline-delimited records with a stable field order, suitable for
    /// diffing runs.
    pub fn to_ndjson(&self, scenario: &Scenario) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!(
                "{{\"time\":{},\"seq\":{},\"kind\":\"{}\",\"task\":{},\"version\":{},\"pool\":{}}}\n",
                r.time,
                r.seq,
                r.kind.as_str(),
                match r.task {
                    Some(t) => format!("\"{}\"", scenario.tasks[t].task_id),
                    None => "null".into(),
                },
                match r.version {
                    Some(v) => v.to_string(),
                    None => "null".into(),
                },
                match r.pool {
                    Some(p) => format!("\"{}\"", p.as_str()),
                    None => "null".into(),
                },
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunUntil {
    AllTasksComplete,
    Horizon(f64),
}

/// Heap payload for a future happening.
#[derive(Debug, Clone, PartialEq)]
enum Pending {
    Submit {
        task: usize,
    },
    SegmentDone {
        task: usize,
        epoch: Option<u64>,
    },
    ToolDone {
        task: usize,
    },
    TrainDone {
        task: usize,
        version: u64,
    },
    Commit {
        task: usize,
        version: u64,
    },
    /// Internal scheduler wake-up; never traced.
    Wake,
}

#[derive(Debug, Clone)]
struct HeapEntry {
    time: f64,
    seq: u64,
    pending: Pending,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want earliest (time, seq).
        other
            .time
            .partial_cmp(&self.time)
            .expect("event times are never NaN")
            .then(other.seq.cmp(&self.seq))
    }
}

/// An in-flight rollout for one task.
#[derive(Debug, Clone)]
struct Inflight {
    version: u64,
    seg_total: u32,
    seg_done: u32,
    /// Per-segment cost: tokens in token mode, seconds otherwise.
    seg_cost: f64,
    tokens_mode: bool,
    token_count: f64,
    episode: Vec<EpisodeMarker>,
}

/// Per-pool busy totals captured at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSnapshot {
    pub pool: PoolId,
    pub device_count: u64,
    pub busy_device_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trace: TraceLog,
    pub pools: Vec<PoolSnapshot>,
    pub seed: u64,
}

/// Simulation state. Owned by the single-threaded event loop; scheduling
/// policies receive `&mut Sim` inside their hooks.
pub struct Sim<'a> {
    pub scenario: &'a Scenario,
    collocated: bool,
    clock: f64,
    sched_seq: u64,
    trace_seq: u64,
    heap: BinaryHeap<HeapEntry>,
    records: Vec<TraceRecord>,
    rng: StreamRng,
    pub manager: ManagerState,
    admission: AdmissionState,
    footprints: Vec<u64>,
    ps: SharedPool,
    seconds_active: u32,
    share_current: f64,
    share_last_t: f64,
    ps_dirty: bool,
    rollout_pool: Option<ResourcePool>,
    train_pool: Option<ResourcePool>,
    shared_pool: Option<ResourcePool>,
    train_busy: Option<(usize, u64)>,
    inflight: Vec<Option<Inflight>>,
    completed: Vec<bool>,
    completed_count: usize,
}

impl<'a> Sim<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, SimError> {
        let n = scenario.tasks.len();
        let collocated = scenario.collocated();
        let budget = scenario.kv_budget();
        let mut footprints = Vec::with_capacity(n);
        for (i, t) in scenario.tasks.iter().enumerate() {
            let fp = kv_footprint(t, scenario.profile_of(i));
            if fp > budget {
                return Err(AdmissionError::TaskTooLarge {
                    task: i,
                    footprint: fp,
                    budget,
                }
                .into());
            }
            footprints.push(fp);
        }
        let (rollout_pool, train_pool, shared_pool) = if collocated {
            (
                None,
                None,
                Some(ResourcePool::new(
                    PoolId::Shared,
                    scenario.cluster.total_devices(),
                    true,
                )),
            )
        } else {
            (
                Some(ResourcePool::new(
                    PoolId::Rollout,
                    scenario.cluster.rollout_devices,
                    false,
                )),
                Some(ResourcePool::new(
                    PoolId::Train,
                    scenario.cluster.train_devices,
                    true,
                )),
                None,
            )
        };
        Ok(Self {
            scenario,
            collocated,
            clock: 0.0,
            sched_seq: 0,
            trace_seq: 0,
            heap: BinaryHeap::new(),
            records: Vec::new(),
            rng: StreamRng::new(scenario.seed),
            manager: ManagerState::new(n),
            admission: AdmissionState::default(),
            footprints,
            ps: SharedPool::new(scenario.cluster.rollout_pool_token_rate),
            seconds_active: 0,
            share_current: 0.0,
            share_last_t: 0.0,
            ps_dirty: false,
            rollout_pool,
            train_pool,
            shared_pool,
            train_busy: None,
            inflight: vec![None; n],
            completed: vec![false; n],
            completed_count: 0,
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn completed(&self, task: usize) -> bool {
        self.completed[task]
    }

    pub fn train_idle(&self) -> bool {
        self.train_busy.is_none()
    }

    pub fn buffer_len(&self) -> usize {
        self.manager.buffer_len()
    }

    pub fn admitted_tasks(&self) -> &[usize] {
        self.admission.admitted()
    }

    fn schedule(&mut self, time: f64, pending: Pending) -> Result<(), SimError> {
        if time < self.clock {
            return Err(SimError::TimeTravel {
                event_time: time,
                clock: self.clock,
            });
        }
        assert!(time.is_finite(), "event time must be finite");
        let seq = self.sched_seq;
        self.sched_seq += 1;
        self.heap.push(HeapEntry { time, seq, pending });
        Ok(())
    }

    /// Schedule an internal scheduler wake-up at the current instant; it
    /// dispatches after every already-queued entry at this timestamp.
    pub fn schedule_wake(&mut self) -> Result<(), SimError> {
        self.schedule(self.clock, Pending::Wake)
    }

    fn trace(
        &mut self,
        kind: EventKind,
        task: Option<usize>,
        version: Option<u64>,
        pool: Option<PoolId>,
    ) {
        let seq = self.trace_seq;
        self.trace_seq += 1;
        self.records.push(TraceRecord {
            time: self.clock,
            seq,
            kind,
            task,
            version,
            pool,
        });
    }

    // -- rollout pool share accounting (disaggregated layout) ---------------

    fn current_share(&self) -> f64 {
        if self.seconds_active > 0 {
            1.0
        } else {
            self.ps.busy_share()
        }
    }

    /// Close the current constant-share interval. Called at every membership
    /// change so the interval breakpoints match the trace event instants.
    fn flush_rollout_share(&mut self) -> Result<(), SimError> {
        if let Some(pool) = &mut self.rollout_pool {
            if self.clock > self.share_last_t {
                pool.record_busy(self.share_last_t, self.clock, self.share_current)?;
            }
            self.share_last_t = self.clock;
        }
        Ok(())
    }

    fn ps_join(&mut self, task: usize, tokens: f64, cap: f64) -> Result<(), SimError> {
        self.flush_rollout_share()?;
        self.ps.join(task as u64, tokens, cap, self.clock);
        self.share_current = self.current_share();
        self.ps_dirty = true;
        Ok(())
    }

    fn ps_leave(&mut self, task: usize) -> Result<(), SimError> {
        self.flush_rollout_share()?;
        self.ps.leave(task as u64, self.clock);
        self.share_current = self.current_share();
        self.ps_dirty = true;
        Ok(())
    }

    fn seconds_toggle(&mut self, enter: bool) -> Result<(), SimError> {
        self.flush_rollout_share()?;
        if enter {
            self.seconds_active += 1;
        } else {
            self.seconds_active -= 1;
        }
        self.share_current = self.current_share();
        Ok(())
    }

    // -- admission ------------------------------------------------------------

    pub fn try_admit(&mut self, task: usize) -> Result<AdmitOutcome, SimError> {
        let budget = self.scenario.kv_budget();
        Ok(self.admission.admit(task, self.footprints[task], budget)?)
    }

    // -- rollout mechanics ----------------------------------------------------

    /// Check out the next policy version for `task` and begin a rollout.
    /// Returns false when the latest version was already consumed (the task
    /// must wait for its next commit) or the task has completed.
    pub fn start_rollout(&mut self, task: usize) -> Result<bool, SimError> {
        if self.completed[task] {
            return Ok(false);
        }
        let Some(policy) = self.manager.next_policy(task)? else {
            return Ok(false);
        };
        let version = policy.version;
        let spec = &self.scenario.tasks[task];
        let segs = spec.tool_calls_per_episode + 1;

        let rollout_pool_id = self.rollout_pool_id();
        self.trace(
            EventKind::RolloutStarted,
            Some(task),
            Some(version),
            Some(rollout_pool_id),
        );

        let (tokens_mode, total_cost, token_count) = match &spec.rollout_cost {
            RolloutCost::Tokens(model) => {
                let tokens = sample_latency(model, &mut self.rng)?;
                if self.collocated {
                    // Collocated rollouts run alone on the full pool: convert
                    // to the dedicated-pool duration, then scale by the
                    // dedicated fraction of the device count.
                    let cap = self.scenario.profile_of(task).per_batch_peak_decode_rate;
                    let alone = tokens / cap.min(self.scenario.cluster.rollout_pool_token_rate);
                    (false, alone * self.phase_scale(PhaseKind::Rollout), tokens)
                } else {
                    (true, tokens, tokens)
                }
            }
            RolloutCost::Seconds(model) => {
                let secs = sample_latency(model, &mut self.rng)?;
                (false, secs * self.phase_scale(PhaseKind::Rollout), 0.0)
            }
        };

        self.inflight[task] = Some(Inflight {
            version,
            seg_total: segs,
            seg_done: 0,
            seg_cost: total_cost / segs as f64,
            tokens_mode,
            token_count,
            episode: Vec::new(),
        });
        self.begin_segment(task)?;
        Ok(true)
    }

    fn rollout_pool_id(&self) -> PoolId {
        if self.collocated {
            PoolId::Shared
        } else {
            PoolId::Rollout
        }
    }

    fn train_pool_id(&self) -> PoolId {
        if self.collocated {
            PoolId::Shared
        } else {
            PoolId::Train
        }
    }

    /// Latency scaling for the collocated layout: the active phase uses the
    /// whole pool, so a phase measured on its dedicated slice speeds up by
    /// dedicated/total.
    fn phase_scale(&self, phase: PhaseKind) -> f64 {
        if !self.collocated {
            return 1.0;
        }
        let c = &self.scenario.cluster;
        match phase {
            PhaseKind::Rollout => c.rollout_devices as f64 / c.total_devices() as f64,
            PhaseKind::Train => c.train_devices as f64 / c.total_devices() as f64,
        }
    }

    fn begin_segment(&mut self, task: usize) -> Result<(), SimError> {
        let inflight = self.inflight[task].as_ref().expect("rollout in flight");
        let seg_cost = inflight.seg_cost;
        let tokens_mode = inflight.tokens_mode;
        self.inflight[task]
            .as_mut()
            .unwrap()
            .episode
            .push(EpisodeMarker::RolloutSegment(seg_cost));

        if tokens_mode {
            let cap = self.scenario.profile_of(task).per_batch_peak_decode_rate;
            self.ps_join(task, seg_cost, cap)?;
            // Completion is scheduled by the post-dispatch rate recompute.
        } else {
            if self.collocated {
                let dur = seg_cost;
                let end = self.clock + dur;
                self.shared_pool
                    .as_mut()
                    .expect("collocated pool")
                    .record_busy(self.clock, end, 1.0)?;
                self.schedule(end, Pending::SegmentDone { task, epoch: None })?;
            } else {
                self.seconds_toggle(true)?;
                self.schedule(
                    self.clock + seg_cost,
                    Pending::SegmentDone { task, epoch: None },
                )?;
            }
        }
        Ok(())
    }

    // -- training mechanics ---------------------------------------------------

    /// Pop the head of the trajectory buffer and start training it.
    pub fn start_training_head(&mut self) -> Result<(), SimError> {
        if self.train_busy.is_some() {
            return Err(SimError::Protocol(
                "training start requested while the train pool is busy".into(),
            ));
        }
        let Some(batch) = self.manager.pop_trajectory() else {
            return Err(SimError::Protocol(
                "training start requested with an empty trajectory buffer".into(),
            ));
        };
        let task = batch.task;
        let version = batch.version;
        let pool_id = self.train_pool_id();
        self.trace(
            EventKind::TrainStarted,
            Some(task),
            Some(version),
            Some(pool_id),
        );

        let spec = &self.scenario.tasks[task];
        let dur = sample_latency(&spec.train_latency, &mut self.rng)?
            * self.phase_scale(PhaseKind::Train);
        let end = self.clock + dur;
        match pool_id {
            PoolId::Shared => self
                .shared_pool
                .as_mut()
                .unwrap()
                .record_busy(self.clock, end, 1.0)?,
            _ => self
                .train_pool
                .as_mut()
                .unwrap()
                .record_busy(self.clock, end, 1.0)?,
        }
        self.train_busy = Some((task, version));
        self.schedule(end, Pending::TrainDone { task, version })?;
        Ok(())
    }

    // -- dispatch -------------------------------------------------------------

    /// Emit the deferred rate-recompute record and schedule the next
    /// processor-sharing completion under the new rates.
    fn rate_recompute(&mut self) -> Result<(), SimError> {
        self.ps_dirty = false;
        self.trace(EventKind::RateRecompute, None, None, Some(PoolId::Rollout));
        if let Some((t_fin, key)) = self.ps.next_completion() {
            let time = t_fin.max(self.clock);
            self.schedule(
                time,
                Pending::SegmentDone {
                    task: key as usize,
                    epoch: Some(self.ps.epoch()),
                },
            )?;
        }
        Ok(())
    }

    fn handle_segment_done(
        &mut self,
        sched: &mut SchedulerState,
        task: usize,
    ) -> Result<(), SimError> {
        let inflight = self.inflight[task].as_mut().expect("rollout in flight");
        inflight.seg_done += 1;
        let version = inflight.version;
        let finished = inflight.seg_done == inflight.seg_total;
        let tokens_mode = inflight.tokens_mode;

        let pool_id = self.rollout_pool_id();
        self.trace(
            EventKind::RolloutSegmentDone,
            Some(task),
            Some(version),
            Some(pool_id),
        );
        if tokens_mode {
            self.ps_leave(task)?;
        } else if !self.collocated {
            self.seconds_toggle(false)?;
        }

        if !finished {
            // Tool call: the batch idles the accelerators until the external
            // service responds.
            let spec = &self.scenario.tasks[task];
            let tool = spec
                .tool_latency
                .as_ref()
                .expect("tool latency present when segments remain");
            let lat = sample_latency(tool, &mut self.rng)?;
            self.inflight[task]
                .as_mut()
                .unwrap()
                .episode
                .push(EpisodeMarker::ToolCall(lat));
            self.schedule(self.clock + lat, Pending::ToolDone { task })?;
            return Ok(());
        }

        // Final segment: hand the trajectory to the manager.
        let inflight = self.inflight[task].take().unwrap();
        self.trace(EventKind::TrajectoryReady, Some(task), Some(version), None);
        self.manager.enqueue_trajectory(TrajectoryBatch {
            task,
            version,
            token_count: inflight.token_count,
            generated_at: self.clock,
            episode_structure: inflight.episode,
        })?;
        sched.on_trajectory_ready(self, task, version)
    }

    fn handle_commit(
        &mut self,
        sched: &mut SchedulerState,
        task: usize,
        trained_version: u64,
    ) -> Result<(), SimError> {
        let record = self
            .manager
            .commit_policy(task, trained_version, self.clock)?;
        self.trace(
            EventKind::PolicyCommitted,
            Some(task),
            Some(record.version),
            None,
        );
        let done = self.manager.steps_completed(task)? >= self.scenario.tasks[task].total_steps;
        if done {
            self.completed[task] = true;
            self.completed_count += 1;
            self.trace(
                EventKind::TaskCompleted,
                Some(task),
                Some(record.version),
                None,
            );
            let newly = self.admission.release_and_rescan(
                task,
                &self.footprints,
                self.scenario.kv_budget(),
            );
            for &t in &newly {
                self.trace(EventKind::AdmissionRetry, Some(t), None, None);
            }
            sched.on_task_completed(self, task, newly)
        } else {
            sched.on_policy_committed(self, task, record.version)
        }
    }

    fn diagnose_deadlock(&self) -> String {
        let mut lines = Vec::new();
        for (i, t) in self.scenario.tasks.iter().enumerate() {
            if self.completed[i] {
                continue;
            }
            let steps = self.manager.steps_completed(i).unwrap_or(0);
            let mut state = Vec::new();
            if self.admission.pending().contains(&i) {
                state.push("waiting for KV admission".to_string());
            }
            if self.inflight[i].is_some() {
                state.push("rollout in flight".to_string());
            }
            if let Ok(v) = self.manager.latest_version(i) {
                state.push(format!("latest policy v{v}"));
            }
            lines.push(format!(
                "  task '{}': {}/{} steps, {}",
                t.task_id,
                steps,
                t.total_steps,
                if state.is_empty() {
                    "idle (no pending work scheduled)".to_string()
                } else {
                    state.join(", ")
                }
            ));
        }
        lines.push(format!(
            "  trajectory buffer: {} entries; train pool {}",
            self.manager.buffer_len(),
            if self.train_busy.is_some() {
                "busy"
            } else {
                "idle"
            }
        ));
        lines.join("\n")
    }

    /// Dispatch events until the termination condition, returning the trace
    /// and final pool accounting.
    pub fn run(
        mut self,
        sched: &mut SchedulerState,
        until: RunUntil,
    ) -> Result<SimOutcome, SimError> {
        for (i, t) in self.scenario.tasks.iter().enumerate() {
            self.schedule(t.submit_time, Pending::Submit { task: i })?;
        }

        let mut termination = None;
        while let Some(entry) = self.heap.pop() {
            if let RunUntil::Horizon(h) = until {
                if entry.time > h {
                    termination = Some(Termination::HorizonReached);
                    break;
                }
            }
            // Stale processor-sharing completions are skipped silently.
            if let Pending::SegmentDone { epoch: Some(e), .. } = entry.pending {
                if e != self.ps.epoch() {
                    continue;
                }
            }
            debug_assert!(entry.time >= self.clock);
            self.clock = entry.time;

            match entry.pending {
                Pending::Submit { task } => {
                    self.trace(EventKind::TaskSubmitted, Some(task), None, None);
                    self.manager.init_task(task, self.clock)?;
                    sched.on_task_submitted(&mut self, task)?;
                }
                Pending::SegmentDone { task, .. } => {
                    self.handle_segment_done(sched, task)?;
                }
                Pending::ToolDone { task } => {
                    let version = self.inflight[task].as_ref().map(|f| f.version);
                    self.trace(
                        EventKind::ToolCallDone,
                        Some(task),
                        version,
                        Some(PoolId::Env),
                    );
                    self.begin_segment(task)?;
                }
                Pending::TrainDone { task, version } => {
                    let pool = self.train_pool_id();
                    self.trace(EventKind::TrainDone, Some(task), Some(version), Some(pool));
                    self.train_busy = None;
                    let commit_at = self.clock + self.scenario.cluster.weight_commit_latency;
                    self.schedule(commit_at, Pending::Commit { task, version })?;
                    sched.on_train_done(&mut self, task, version)?;
                }
                Pending::Commit { task, version } => {
                    self.handle_commit(sched, task, version)?;
                }
                Pending::Wake => {
                    sched.on_wake(&mut self)?;
                }
            }

            if self.ps_dirty {
                self.rate_recompute()?;
            }
            if self.completed_count == self.scenario.tasks.len() {
                termination = Some(Termination::AllComplete);
                break;
            }
        }

        if termination.is_none() {
            if self.completed_count == self.scenario.tasks.len() {
                termination = Some(Termination::AllComplete);
            } else if matches!(until, RunUntil::Horizon(_)) {
                termination = Some(Termination::HorizonReached);
            } else {
                return Err(SimError::Deadlock {
                    diagnosis: self.diagnose_deadlock(),
                });
            }
        }

        let horizon = match until {
            RunUntil::Horizon(h) => h,
            RunUntil::AllTasksComplete => self.clock,
        };
        // Close the open rollout-share interval at the horizon.
        self.clock = horizon;
        self.flush_rollout_share()?;

        let mut pools = Vec::new();
        for p in [&self.rollout_pool, &self.train_pool, &self.shared_pool]
            .into_iter()
            .flatten()
        {
            pools.push(PoolSnapshot {
                pool: p.pool_id,
                device_count: p.device_count,
                busy_device_seconds: p.busy_device_seconds(horizon),
            });
        }

        Ok(SimOutcome {
            trace: TraceLog {
                records: self.records,
                horizon,
                termination,
            },
            pools,
            seed: self.scenario.seed,
        })
    }
}

#[derive(Clone, Copy)]
enum PhaseKind {
    Rollout,
    Train,
}

/// Build the scheduler named by the scenario and run to the given condition.
pub fn run_simulation(scenario: &Scenario, until: RunUntil) -> Result<SimOutcome, SimError> {
    let mut sched = SchedulerState::new(&scenario.scheduler);
    Sim::new(scenario)?.run(&mut sched, until)
}

/// Run with the scenario's own horizon if it sets one, to completion
/// otherwise.
pub fn simulate(scenario: &Scenario) -> Result<SimOutcome, SimError> {
    let until = scenario
        .horizon
        .map(RunUntil::Horizon)
        .unwrap_or(RunUntil::AllTasksComplete);
    run_simulation(scenario, until)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;

    fn one_task_scenario() -> Scenario {
        load_scenario(
            r#"
[sim]
seed = 1

[cluster]
rollout_devices = 6
train_devices = 2
rollout_pool_token_rate = 1000.0
kv_budget_bytes = 68719476736

[scheduler]
kind = "marlaas"

[[model_profile]]
name = "p"
num_layers = 28
num_kv_heads = 8
head_dim = 128
kv_dtype_bytes = 2
per_batch_peak_decode_rate = 800.0

[[task]]
task_id = "t1"
total_steps = 1
batch_size = 8
prompt_len = 128
max_gen_len = 512
model_profile = "p"
rollout_seconds = { kind = "deterministic", mean = 10.0 }
train_latency = { kind = "deterministic", mean = 1.0 }
"#,
        )
        .unwrap()
    }

    #[test]
    fn single_step_run_ends_at_eleven() {
        let scenario = one_task_scenario();
        let outcome = run_simulation(&scenario, RunUntil::AllTasksComplete).unwrap();
        let trace = &outcome.trace;
        assert_eq!(trace.termination, Some(Termination::AllComplete));
        let last = trace.records.last().unwrap();
        assert_eq!(last.kind, EventKind::TaskCompleted);
        assert_eq!(last.time, 11.0);
        // Causality spot checks.
        let kinds: Vec<EventKind> = trace.records.iter().map(|r| r.kind).collect();
        let pos = |k: EventKind| kinds.iter().position(|&x| x == k).unwrap();
        assert!(pos(EventKind::RolloutStarted) < pos(EventKind::TrajectoryReady));
        assert!(pos(EventKind::TrajectoryReady) < pos(EventKind::TrainStarted));
        assert!(pos(EventKind::TrainDone) < pos(EventKind::PolicyCommitted));
    }

    #[test]
    fn same_seed_identical_traces() {
        let scenario = one_task_scenario();
        let a = run_simulation(&scenario, RunUntil::AllTasksComplete).unwrap();
        let b = run_simulation(&scenario, RunUntil::AllTasksComplete).unwrap();
        assert_eq!(a.trace.to_ndjson(&scenario), b.trace.to_ndjson(&scenario));
    }

    #[test]
    fn time_travel_rejected() {
        let scenario = one_task_scenario();
        let mut sim = Sim::new(&scenario).unwrap();
        sim.clock = 5.0;
        let err = sim.schedule(4.0, Pending::Wake).unwrap_err();
        assert!(matches!(err, SimError::TimeTravel { .. }));
    }

    #[test]
    fn same_time_events_dispatch_in_schedule_order() {
        let scenario = one_task_scenario();
        let mut sim = Sim::new(&scenario).unwrap();
        sim.schedule(10.0, Pending::Submit { task: 0 }).unwrap();
        sim.schedule(10.0, Pending::Wake).unwrap();
        let first = sim.heap.pop().unwrap();
        let second = sim.heap.pop().unwrap();
        assert_eq!(first.pending, Pending::Submit { task: 0 });
        assert_eq!(second.pending, Pending::Wake);
    }

    #[test]
    fn horizon_truncates_run() {
        let scenario = one_task_scenario();
        let outcome = run_simulation(&scenario, RunUntil::Horizon(5.0)).unwrap();
        assert_eq!(outcome.trace.termination, Some(Termination::HorizonReached));
        assert_eq!(outcome.trace.horizon, 5.0);
        assert!(outcome
            .trace
            .records
            .iter()
            .all(|r| r.kind != EventKind::TaskCompleted));
    }

    #[test]
    fn zero_tasks_terminate_immediately() {
        let mut scenario = one_task_scenario();
        scenario.tasks.clear();
        scenario.task_profile.clear();
        let outcome = run_simulation(&scenario, RunUntil::AllTasksComplete).unwrap();
        assert!(outcome.trace.records.is_empty());
        assert_eq!(outcome.trace.termination, Some(Termination::AllComplete));
        assert_eq!(outcome.trace.horizon, 0.0);
    }

    #[test]
    fn deadlock_diagnosis_names_blocked_tasks() {
        let scenario = one_task_scenario();
        let mut sim = Sim::new(&scenario).unwrap();
        sim.manager.init_task(0, 0.0).unwrap();
        let diagnosis = sim.diagnose_deadlock();
        assert!(diagnosis.contains("task 't1'"), "{diagnosis}");
        assert!(diagnosis.contains("0/1 steps"), "{diagnosis}");
        assert!(diagnosis.contains("trajectory buffer"), "{diagnosis}");
    }

    #[test]
    fn oversized_task_fails_fast() {
        let mut scenario = one_task_scenario();
        scenario.cluster.kv_budget_bytes = 1024;
        let err = match Sim::new(&scenario) {
            Err(e) => e,
            Ok(_) => panic!("oversized task must be rejected"),
        };
        assert!(matches!(
            err,
            SimError::Admission(AdmissionError::TaskTooLarge { .. })
        ));
    }
}
