//! Tenant workload descriptions: per-task training profiles, model shape
//! constants, and the stochastic latency models that drive rollout, tool,
//! and train phases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::StreamRng;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("invalid latency parameters: {0}")]
    InvalidParams(String),
}

/// Distribution of a positive duration (seconds) or size (tokens).
///
/// Samples are drawn from a dedicated counter-based stream so that the n-th
/// draw depends only on `(seed, stream, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatencyKind {
    /// Always `mean`.
    Deterministic { mean: f64 },
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `exp(mu + sigma * z)` with standard-normal `z`; parameters are in
    /// log-seconds.
    Lognormal { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    #[serde(flatten)]
    pub kind: LatencyKind,
    /// Stream identifier; assigned automatically during scenario loading when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
}

impl LatencyModel {
    pub fn deterministic(mean: f64) -> Self {
        Self {
            kind: LatencyKind::Deterministic { mean },
            stream: None,
        }
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        match self.kind {
            LatencyKind::Deterministic { mean } => {
                if mean <= 0.0 || !mean.is_finite() {
                    return Err(WorkloadError::InvalidParams(format!(
                        "deterministic mean must be positive and finite, got {mean}"
                    )));
                }
            }
            LatencyKind::Uniform { lo, hi } => {
                if lo > hi {
                    return Err(WorkloadError::InvalidParams(format!(
                        "uniform lo {lo} exceeds hi {hi}"
                    )));
                }
                if lo <= 0.0 || lo.is_nan() || !hi.is_finite() {
                    return Err(WorkloadError::InvalidParams(format!(
                        "uniform bounds must be positive and finite, got [{lo}, {hi}]"
                    )));
                }
            }
            LatencyKind::Lognormal { mu, sigma } => {
                if sigma < 0.0 {
                    return Err(WorkloadError::InvalidParams(format!(
                        "lognormal sigma must be non-negative, got {sigma}"
                    )));
                }
                if !mu.is_finite() || !sigma.is_finite() {
                    return Err(WorkloadError::InvalidParams(
                        "lognormal parameters must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Stream id to draw from (explicit or derived by the scenario loader).
    pub fn stream_id(&self) -> u64 {
        self.stream.unwrap_or(0)
    }
}

/// Draw one value from `model`, advancing only its own stream.
///
/// The result is strictly positive and finite for every valid model.
pub fn sample_latency(model: &LatencyModel, rng: &mut StreamRng) -> Result<f64, WorkloadError> {
    model.validate()?;
    let stream = model.stream_id();
    let v = match model.kind {
        LatencyKind::Deterministic { mean } => {
            // Advance the stream anyway so switching a model's kind does not
            // shift the draws of later samples on the same stream.
            let _ = rng.next_unit(stream);
            mean
        }
        LatencyKind::Uniform { lo, hi } => {
            let u = rng.next_unit(stream);
            lo + u * (hi - lo)
        }
        LatencyKind::Lognormal { mu, sigma } => {
            let z = rng.next_normal(stream);
            (mu + sigma * z).exp()
        }
    };
    debug_assert!(v > 0.0 && v.is_finite());
    Ok(v)
}

/// Transformer shape constants needed for the KV-cache footprint estimate and
/// the per-batch decode-rate cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelProfile {
    pub name: String,
    pub num_layers: u64,
    pub num_kv_heads: u64,
    pub head_dim: u64,
    /// Bytes per KV element (2 for fp16/bf16).
    pub kv_dtype_bytes: u64,
    /// Decode-rate ceiling for a single batch, tokens/second.
    pub per_batch_peak_decode_rate: f64,
}

impl ModelProfile {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_layers == 0
            || self.num_kv_heads == 0
            || self.head_dim == 0
            || self.kv_dtype_bytes == 0
        {
            return Err(format!(
                "model profile '{}': all shape fields must be positive",
                self.name
            ));
        }
        if self.per_batch_peak_decode_rate <= 0.0 || self.per_batch_peak_decode_rate.is_nan() {
            return Err(format!(
                "model profile '{}': per_batch_peak_decode_rate must be positive",
                self.name
            ));
        }
        Ok(())
    }
}

/// How a task's rollout cost is expressed.
///
/// Token-denominated rollouts contend for the rollout pool's aggregate
/// throughput (processor sharing); seconds-denominated rollouts replay a
/// measured wall-clock latency and are unaffected by concurrency.
#[derive(Debug, Clone, PartialEq)]
pub enum RolloutCost {
    /// Decode tokens per batch, converted to time by the cluster throughput
    /// model.
    Tokens(LatencyModel),
    /// Wall-clock seconds per batch.
    Seconds(LatencyModel),
}

impl RolloutCost {
    pub fn model(&self) -> &LatencyModel {
        match self {
            RolloutCost::Tokens(m) | RolloutCost::Seconds(m) => m,
        }
    }

    pub fn model_mut(&mut self) -> &mut LatencyModel {
        match self {
            RolloutCost::Tokens(m) | RolloutCost::Seconds(m) => m,
        }
    }
}

/// One tenant's workload profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub task_id: String,
    pub submit_time: f64,
    pub total_steps: u64,
    pub batch_size: u64,
    pub prompt_len: u64,
    pub max_gen_len: u64,
    pub rollout_cost: RolloutCost,
    pub tool_calls_per_episode: u32,
    pub tool_latency: Option<LatencyModel>,
    pub train_latency: LatencyModel,
    pub model_profile: String,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.task_id.is_empty() {
            return Err("task_id must be non-empty".into());
        }
        if self.submit_time < 0.0 || !self.submit_time.is_finite() {
            return Err(format!("task '{}': submit_time must be >= 0", self.task_id));
        }
        if self.total_steps == 0 {
            return Err(format!("task '{}': total_steps must be >= 1", self.task_id));
        }
        if self.batch_size == 0 {
            return Err(format!("task '{}': batch_size must be >= 1", self.task_id));
        }
        if self.prompt_len + self.max_gen_len == 0 {
            return Err(format!(
                "task '{}': prompt_len + max_gen_len must be > 0",
                self.task_id
            ));
        }
        if self.tool_calls_per_episode > 0 && self.tool_latency.is_none() {
            return Err(format!(
                "task '{}': tool_latency required when tool_calls_per_episode > 0",
                self.task_id
            ));
        }
        self.rollout_cost
            .model()
            .validate()
            .map_err(|e| format!("task '{}': rollout: {e}", self.task_id))?;
        if let Some(tool) = &self.tool_latency {
            tool.validate()
                .map_err(|e| format!("task '{}': tool: {e}", self.task_id))?;
        }
        self.train_latency
            .validate()
            .map_err(|e| format!("task '{}': train: {e}", self.task_id))?;
        Ok(())
    }

    /// Sequence length used for the KV footprint estimate.
    pub fn total_len(&self) -> u64 {
        self.prompt_len + self.max_gen_len
    }
}
