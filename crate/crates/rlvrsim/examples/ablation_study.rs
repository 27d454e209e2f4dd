//! Ablations of the asynchronous scheduler on ten rollout-bound replicas:
//! full, without asynchronous execution (a global barrier before training),
//! and without multi-LoRA rollout concurrency (one rollout at a time).
//!
//!     cargo run --example ablation_study

use rlvrsim::*;

fn main() {
    let base = load_bundled("table4_ablation").expect("bundled scenario");

    let variants: Vec<(&str, SchedulerChoice)> = vec![
        ("full", SchedulerChoice::new(SchedulerKind::Marlaas)),
        ("w/o async", {
            let mut c = SchedulerChoice::new(SchedulerKind::Marlaas);
            c.disable_async = true;
            c
        }),
        ("w/o multi-LoRA", {
            let mut c = SchedulerChoice::new(SchedulerKind::Marlaas);
            c.disable_multi_lora = true;
            c
        }),
    ];

    println!(
        "{:<16} {:>14} {:>10} {:>10} {:>12}",
        "variant", "steps/hr", "util (%)", "idle (%)", "time (hrs)"
    );
    for (label, choice) in variants {
        let scenario = base.with_scheduler(choice).unwrap();
        let outcome = simulate(&scenario).expect("simulation");
        let report = compute_metrics(&outcome.trace, &scenario).expect("metrics");
        let rollout = report.pool(PoolId::Rollout).unwrap();
        println!(
            "{label:<16} {:>14.1} {:>10.2} {:>10.2} {:>12.3}",
            report.steps_per_hour,
            rollout.utilization * 100.0,
            rollout.idle_fraction * 100.0,
            report.horizon_seconds / 3600.0
        );
    }
}
