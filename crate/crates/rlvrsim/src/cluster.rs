//! Hardware substrate model: device pools with busy/idle interval accounting,
//! the KV-cache footprint estimate, and the processor-sharing contention
//! model for token-denominated rollouts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workload::{ModelProfile, TaskSpec};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error(
        "overlapping exclusive booking on pool {pool}: [{start}, {end}) begins before {last_end}"
    )]
    Overlap {
        pool: &'static str,
        start: f64,
        end: f64,
        last_end: f64,
    },
    #[error("busy interval end {end} precedes start {start}")]
    BadInterval { start: f64, end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollocationMode {
    Disaggregated,
    Collocated,
}

/// Device pools. `Shared` is the unified accelerator pool used by the
/// collocated layout; `Env` is the external tool/judge service, which holds
/// no accelerators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolId {
    Rollout,
    Train,
    Shared,
    Env,
}

impl PoolId {
    pub fn as_str(&self) -> &'static str {
        match self {
            PoolId::Rollout => "rollout",
            PoolId::Train => "train",
            PoolId::Shared => "shared",
            PoolId::Env => "env",
        }
    }
}

/// Static cluster description from the `[cluster]` scenario section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub rollout_devices: u64,
    pub train_devices: u64,
    /// Aggregate decode throughput of the rollout pool, tokens/second.
    pub rollout_pool_token_rate: f64,
    pub kv_budget_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collocation_mode: Option<CollocationMode>,
    /// Delay between a training update finishing and the new policy version
    /// becoming visible to rollout.
    #[serde(default)]
    pub weight_commit_latency: f64,
}

impl ClusterSpec {
    pub fn total_devices(&self) -> u64 {
        self.rollout_devices + self.train_devices
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rollout_devices == 0 || self.train_devices == 0 {
            return Err("cluster: rollout_devices and train_devices must be >= 1".into());
        }
        if self.rollout_pool_token_rate <= 0.0 || self.rollout_pool_token_rate.is_nan() {
            return Err("cluster: rollout_pool_token_rate must be positive".into());
        }
        if self.kv_budget_bytes == 0 {
            return Err("cluster: kv_budget_bytes must be positive".into());
        }
        if self.weight_commit_latency < 0.0 || !self.weight_commit_latency.is_finite() {
            return Err("cluster: weight_commit_latency must be >= 0".into());
        }
        Ok(())
    }
}

/// Estimated KV-cache bytes a task pins while rolling out:
/// `batch_size * (prompt_len + max_gen_len) * per_token_kv_bytes` with
/// `per_token_kv_bytes = 2 * layers * kv_heads * head_dim * dtype_bytes`
/// (the factor 2 covers keys and values).
pub fn kv_footprint(task: &TaskSpec, profile: &ModelProfile) -> u64 {
    let per_token =
        2 * profile.num_layers * profile.num_kv_heads * profile.head_dim * profile.kv_dtype_bytes;
    task.batch_size * task.total_len() * per_token
}

/// Busy-interval accounting for one pool.
///
/// Fractional pools (rollout) book a share of the pool per interval;
/// exclusive pools (train, shared) book the whole pool and reject
/// double-booking.
#[derive(Debug, Clone)]
pub struct ResourcePool {
    pub pool_id: PoolId,
    pub device_count: u64,
    exclusive: bool,
    /// (start, end, share in [0,1]); recorded in nondecreasing start order.
    intervals: Vec<(f64, f64, f64)>,
}

impl ResourcePool {
    pub fn new(pool_id: PoolId, device_count: u64, exclusive: bool) -> Self {
        Self {
            pool_id,
            device_count,
            exclusive,
            intervals: Vec::new(),
        }
    }

    /// Book `share` of the pool over `[start, end)`.
    pub fn record_busy(&mut self, start: f64, end: f64, share: f64) -> Result<(), ClusterError> {
        if end < start {
            return Err(ClusterError::BadInterval { start, end });
        }
        if end == start || share == 0.0 {
            return Ok(());
        }
        debug_assert!((0.0..=1.0 + 1e-12).contains(&share));
        if self.exclusive {
            if let Some(&(_, last_end, _)) = self.intervals.last() {
                if start < last_end - 1e-12 {
                    return Err(ClusterError::Overlap {
                        pool: self.pool_id.as_str(),
                        start,
                        end,
                        last_end,
                    });
                }
            }
        }
        self.intervals.push((start, end, share));
        Ok(())
    }

    /// Busy device-seconds over `[0, horizon)`, clipping open-ended work.
    pub fn busy_device_seconds(&self, horizon: f64) -> f64 {
        let mut total = 0.0;
        for &(start, end, share) in &self.intervals {
            let end = end.min(horizon);
            if end > start {
                total += (end - start) * share * self.device_count as f64;
            }
        }
        total
    }

    pub fn intervals(&self) -> &[(f64, f64, f64)] {
        &self.intervals
    }
}

// ---------------------------------------------------------------------------
// Processor-sharing rollout pool
// ---------------------------------------------------------------------------

/// One token-denominated batch inside the shared rollout pool.
#[derive(Debug, Clone)]
struct PsBatch {
    key: u64,
    remaining_tokens: f64,
    rate_cap: f64,
    /// Current service rate, recomputed at membership changes.
    rate: f64,
}

/// Egalitarian processor sharing with a per-batch rate cap.
///
/// With `n` active batches each receives `min(cap, pool_rate / n)`; rates are
/// piecewise constant between membership changes, so completion times are
/// exact integrals, no numerical stepping involved.
#[derive(Debug, Clone)]
pub struct SharedPool {
    pool_rate: f64,
    batches: Vec<PsBatch>,
    last_update: f64,
    /// Bumped on every membership change; schedulers use it to invalidate
    /// stale completion events.
    epoch: u64,
}

impl SharedPool {
    pub fn new(pool_rate: f64) -> Self {
        assert!(pool_rate > 0.0);
        Self {
            pool_rate,
            batches: Vec::new(),
            last_update: 0.0,
            epoch: 0,
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    /// Fraction of the pool's aggregate rate currently in use.
    pub fn busy_share(&self) -> f64 {
        let n = self.batches.len();
        if n == 0 {
            return 0.0;
        }
        let delivered: f64 = self.batches.iter().map(|b| b.rate).sum();
        (delivered / self.pool_rate).min(1.0)
    }

    fn recompute_rates(&mut self) {
        let n = self.batches.len();
        if n == 0 {
            return;
        }
        let fair = self.pool_rate / n as f64;
        for b in &mut self.batches {
            b.rate = b.rate_cap.min(fair);
        }
    }

    /// Integrate each batch's progress forward to `now`.
    pub fn advance_to(&mut self, now: f64) {
        let dt = now - self.last_update;
        debug_assert!(dt >= -1e-9, "pool time moved backwards: {dt}");
        if dt > 0.0 {
            for b in &mut self.batches {
                b.remaining_tokens = (b.remaining_tokens - b.rate * dt).max(0.0);
            }
        }
        self.last_update = now;
    }

    /// Add a batch at `now`. Caller must have advanced the pool to `now`.
    pub fn join(&mut self, key: u64, tokens: f64, rate_cap: f64, now: f64) {
        self.advance_to(now);
        debug_assert!(tokens > 0.0 && rate_cap > 0.0);
        self.batches.push(PsBatch {
            key,
            remaining_tokens: tokens,
            rate_cap,
            rate: 0.0,
        });
        self.recompute_rates();
        self.epoch += 1;
    }

    /// Remove a batch at `now` regardless of remaining work (tool-call exit
    /// or cancellation). Returns its remaining tokens.
    pub fn leave(&mut self, key: u64, now: f64) -> Option<f64> {
        self.advance_to(now);
        let idx = self.batches.iter().position(|b| b.key == key)?;
        let b = self.batches.remove(idx);
        self.recompute_rates();
        self.epoch += 1;
        Some(b.remaining_tokens)
    }

    /// Earliest upcoming completion `(time, key)` under current rates; ties
    /// go to the earliest-joined batch.
    pub fn next_completion(&self) -> Option<(f64, u64)> {
        self.batches
            .iter()
            .map(|b| (self.last_update + b.remaining_tokens / b.rate, b.key))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
    }
}

/// Completion schedule for a snapshot of active batches: each entry is
/// `(key, completion_time)` assuming no further arrivals, rates recomputed at
/// every departure.
///
/// `batches` holds `(key, remaining_tokens, per_batch_rate_cap)`.
pub fn rollout_service_time(
    batches: &[(u64, f64, f64)],
    pool_rate: f64,
    start: f64,
) -> Vec<(u64, f64)> {
    let mut pool = SharedPool::new(pool_rate);
    pool.advance_to(start);
    for &(key, tokens, cap) in batches {
        debug_assert!(tokens > 0.0);
        pool.join(key, tokens, cap, start);
    }
    let mut done = Vec::with_capacity(batches.len());
    while let Some((t, key)) = pool.next_completion() {
        pool.leave(key, t);
        done.push((key, t));
    }
    done
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{LatencyModel, RolloutCost};

    fn profile() -> ModelProfile {
        ModelProfile {
            name: "p".into(),
            num_layers: 28,
            num_kv_heads: 8,
            head_dim: 128,
            kv_dtype_bytes: 2,
            per_batch_peak_decode_rate: 1000.0,
        }
    }

    fn task(batch: u64, prompt: u64, gen: u64) -> TaskSpec {
        TaskSpec {
            task_id: "t".into(),
            submit_time: 0.0,
            total_steps: 1,
            batch_size: batch,
            prompt_len: prompt,
            max_gen_len: gen,
            rollout_cost: RolloutCost::Seconds(LatencyModel::deterministic(1.0)),
            tool_calls_per_episode: 0,
            tool_latency: None,
            train_latency: LatencyModel::deterministic(1.0),
            model_profile: "p".into(),
        }
    }

    #[test]
    fn kv_footprint_matches_transformer_identity() {
        // Independent route: spell the arithmetic out term by term.
        let per_token: u64 = 2 * 28 * 8 * 128 * 2;
        assert_eq!(per_token, 114_688);
        let expected = 32u64 * 2048 * per_token;
        assert_eq!(expected, 7_516_192_768);

        let t = task(32, 1024, 1024);
        assert_eq!(kv_footprint(&t, &profile()), expected);
    }

    #[test]
    fn kv_footprint_unit_case() {
        let mut p = profile();
        p.num_layers = 1;
        p.num_kv_heads = 1;
        p.head_dim = 1;
        p.kv_dtype_bytes = 1;
        let t = task(1, 1, 0);
        assert_eq!(kv_footprint(&t, &p), 2);
    }

    #[test]
    fn two_equal_batches_split_the_pool() {
        // Pool 1000 tok/s, caps 800: each gets 500 -> 5000 tokens in 10 s.
        let done = rollout_service_time(&[(1, 5000.0, 800.0), (2, 5000.0, 800.0)], 1000.0, 0.0);
        assert_eq!(done.len(), 2);
        for &(_, t) in &done {
            assert!((t - 10.0).abs() < 1e-12, "expected 10.0, got {t}");
        }
    }

    #[test]
    fn lone_batch_is_capped() {
        let done = rollout_service_time(&[(1, 5000.0, 800.0)], 1000.0, 0.0);
        assert_eq!(done.len(), 1);
        assert!((done[0].1 - 6.25).abs() < 1e-12);
    }

    #[test]
    fn empty_snapshot_empty_schedule() {
        assert!(rollout_service_time(&[], 1000.0, 0.0).is_empty());
    }

    #[test]
    fn departure_speeds_up_survivor() {
        // 1000 tok/s, caps 900. Batch A 1000 tokens, batch B 5000 tokens.
        // Phase 1: both at 500 until A finishes at t=2 (A: 1000/500).
        // Phase 2: B alone at 900 with 4000 left -> t = 2 + 4000/900.
        let done = rollout_service_time(&[(1, 1000.0, 900.0), (2, 5000.0, 900.0)], 1000.0, 0.0);
        assert_eq!(done[0].0, 1);
        assert!((done[0].1 - 2.0).abs() < 1e-12);
        assert_eq!(done[1].0, 2);
        assert!((done[1].1 - (2.0 + 4000.0 / 900.0)).abs() < 1e-9);
    }

    #[test]
    fn busy_share_counts_delivered_rate() {
        let mut pool = SharedPool::new(1000.0);
        pool.join(1, 5000.0, 800.0, 0.0);
        assert!((pool.busy_share() - 0.8).abs() < 1e-12);
        pool.join(2, 5000.0, 800.0, 0.0);
        assert!((pool.busy_share() - 1.0).abs() < 1e-12);
        pool.leave(1, 1.0);
        assert!((pool.busy_share() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn record_busy_utilization_definition() {
        let mut p = ResourcePool::new(PoolId::Train, 1, true);
        p.record_busy(0.0, 10.0, 1.0).unwrap();
        let busy = p.busy_device_seconds(100.0);
        assert_eq!(busy, 10.0);
        assert!((busy / (1.0 * 100.0) - 0.10).abs() < 1e-12);
    }

    #[test]
    fn exclusive_double_booking_rejected() {
        let mut p = ResourcePool::new(PoolId::Train, 1, true);
        p.record_busy(0.0, 5.0, 1.0).unwrap();
        let err = p.record_busy(3.0, 8.0, 1.0).unwrap_err();
        assert!(matches!(err, ClusterError::Overlap { .. }));
    }

    #[test]
    fn fractional_share_accumulates() {
        let mut p = ResourcePool::new(PoolId::Rollout, 1, false);
        p.record_busy(0.0, 10.0, 0.5).unwrap();
        assert_eq!(p.busy_device_seconds(10.0), 5.0);
    }

    #[test]
    fn bad_interval_rejected() {
        let mut p = ResourcePool::new(PoolId::Rollout, 1, false);
        assert!(matches!(
            p.record_busy(5.0, 4.0, 1.0),
            Err(ClusterError::BadInterval { .. })
        ));
    }
}
