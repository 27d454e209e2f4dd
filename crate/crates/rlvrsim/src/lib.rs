//! rlvrsim: a deterministic discrete-event simulator for multi-tenant
//! asynchronous RLVR training control planes.
//!
//! The library models tenants (tasks) that repeatedly roll out trajectories,
//! call external tools mid-episode, and apply policy updates, competing for a
//! rollout pool with bounded aggregate decode throughput, a KV-cache memory
//! budget, and a training pool that serves one update at a time. Four
//! scheduling regimes are built in:
//!
//! - `marlaas`: asynchronous multi-LoRA rollout with serialized single-task
//!   training and strict per-task policy versioning (plus `disable_async` /
//!   `disable_multi_lora` ablations),
//! - `single_disaggregated`: one task at a time on split pools,
//! - `single_collocated`: one task at a time on one shared pool,
//! - `multi_lora_sync`: concurrent rollouts behind a global barrier.
//!
//! Runs are reproducible: identical scenario text and seed yield
//! byte-identical traces and reports. See the `examples/` directory for one
//! runnable example per capability, or the `rlvrsim` binary for the
//! `run` / `compare` / `sweep` subcommands.

pub mod cli;
pub mod cluster;
pub mod engine;
pub mod manager;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod sched;
pub mod workload;

pub use cluster::{kv_footprint, rollout_service_time, ClusterSpec, PoolId, ResourcePool};
pub use engine::{
    run_simulation, simulate, EventKind, RunUntil, SimError, SimOutcome, Termination, TraceLog,
    TraceRecord,
};
pub use manager::{ManagerState, PolicyRecord, TrajectoryBatch};
pub use metrics::{compute_metrics, MetricsReport};
pub use rng::StreamRng;
pub use scenario::{load_bundled, load_scenario, Scenario, ScenarioError};
pub use sched::{AdmissionState, SchedulerChoice, SchedulerKind};
pub use workload::{sample_latency, LatencyKind, LatencyModel, ModelProfile, TaskSpec};
