//! Write a scenario from scratch: the full config grammar in one document,
//! mixing token-denominated and measured-seconds rollouts, stochastic tool
//! latencies, and staggered submissions.
//!
//!     cargo run --example custom_scenario

use rlvrsim::metrics::{build_timeline, timeline_ascii};
use rlvrsim::*;

const SCENARIO: &str = r#"
[sim]
name = "custom"
seed = 2024
# horizon_seconds = 120.0   # uncomment to truncate instead of running to completion

[cluster]
rollout_devices = 6
train_devices = 2
rollout_pool_token_rate = 4000.0   # aggregate decode throughput
kv_budget_bytes = 68719476736      # 64 GiB
weight_commit_latency = 0.1        # seconds between train-done and visibility

[scheduler]
kind = "marlaas"
# disable_async = true             # ablations (marlaas only)
# disable_multi_lora = true
# kv_budget_override = 34359738368

[[model_profile]]
name = "base-0.6b"
num_layers = 28
num_kv_heads = 8
head_dim = 128
kv_dtype_bytes = 2
per_batch_peak_decode_rate = 1500.0

[[task]]
task_id = "math"
total_steps = 4
batch_size = 16
prompt_len = 256
max_gen_len = 1024
model_profile = "base-0.6b"
rollout_tokens = { kind = "lognormal", mu = 9.6, sigma = 0.25 }
train_latency = { kind = "deterministic", mean = 0.8 }

[[task]]
task_id = "search-agent"
submit_time = 5.0
total_steps = 4
batch_size = 16
prompt_len = 512
max_gen_len = 512
model_profile = "base-0.6b"
tool_calls_per_episode = 2
rollout_tokens = { kind = "uniform", lo = 8000.0, hi = 16000.0 }
tool_latency = { kind = "lognormal", mu = 0.7, sigma = 0.4 }
train_latency = { kind = "uniform", lo = 0.5, hi = 1.0 }

[[task]]
task_id = "replay"
total_steps = 4
batch_size = 8
prompt_len = 128
max_gen_len = 256
model_profile = "base-0.6b"
rollout_seconds = { kind = "deterministic", mean = 12.5 }   # measured latency, no contention
train_latency = { kind = "deterministic", mean = 0.6 }
"#;

fn main() {
    let scenario = load_scenario(SCENARIO).expect("scenario");
    let outcome = simulate(&scenario).expect("simulation");
    let report = compute_metrics(&outcome.trace, &scenario).expect("metrics");

    println!(
        "{} tasks, {} events, horizon {:.2} s, {:.1} steps/hr\n",
        scenario.tasks.len(),
        outcome.trace.records.len(),
        report.horizon_seconds,
        report.steps_per_hour
    );
    let model = build_timeline(&outcome.trace, &scenario);
    print!("{}", timeline_ascii(&model, None));
}
