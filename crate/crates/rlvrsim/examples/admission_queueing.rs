//! KV-cache-aware admission: a budget sized for two of three tenants makes
//! the third queue until capacity frees, visible as an admission retry in
//! the trace.
//!
//!     cargo run --example admission_queueing

use rlvrsim::*;

const SCENARIO: &str = r#"
[sim]
name = "tight-budget"
seed = 7

[cluster]
rollout_devices = 6
train_devices = 2
rollout_pool_token_rate = 6000.0
kv_budget_bytes = 12000000000 # fits two of the three footprints below

[scheduler]
kind = "marlaas"

[[model_profile]]
name = "small"
num_layers = 28
num_kv_heads = 8
head_dim = 128
kv_dtype_bytes = 2
per_batch_peak_decode_rate = 2000.0

[[task]]
task_id = "alpha"
total_steps = 3
batch_size = 32
prompt_len = 256
max_gen_len = 1024
model_profile = "small"
rollout_tokens = { kind = "deterministic", mean = 16000.0 }
train_latency = { kind = "deterministic", mean = 0.5 }

[[task]]
task_id = "beta"
total_steps = 3
batch_size = 32
prompt_len = 256
max_gen_len = 1024
model_profile = "small"
rollout_tokens = { kind = "deterministic", mean = 16000.0 }
train_latency = { kind = "deterministic", mean = 0.5 }

[[task]]
task_id = "gamma"
total_steps = 3
batch_size = 32
prompt_len = 256
max_gen_len = 1024
model_profile = "small"
rollout_tokens = { kind = "deterministic", mean = 16000.0 }
train_latency = { kind = "deterministic", mean = 0.5 }
"#;

fn main() {
    let scenario = load_scenario(SCENARIO).expect("scenario");
    let budget = scenario.kv_budget();
    println!("budget: {budget} bytes");
    for (i, task) in scenario.tasks.iter().enumerate() {
        println!(
            "  {} footprint: {} bytes",
            task.task_id,
            kv_footprint(task, scenario.profile_of(i))
        );
    }

    let outcome = simulate(&scenario).expect("simulation");
    println!("\nadmission-relevant events:");
    for r in &outcome.trace.records {
        match r.kind {
            EventKind::TaskSubmitted | EventKind::AdmissionRetry | EventKind::TaskCompleted => {
                println!(
                    "  t={:>8.2}  {:<16} {}",
                    r.time,
                    r.kind.as_str(),
                    scenario.tasks[r.task.unwrap()].task_id
                );
            }
            _ => {}
        }
    }
    let report = compute_metrics(&outcome.trace, &scenario).expect("metrics");
    println!("\nttfs: earlier tenants keep the budget until a slot frees");
    for t in &report.per_task {
        println!("  {:<8} ttfs {:>8.2} s", t.task_id, t.ttfs_seconds.unwrap());
    }
}
