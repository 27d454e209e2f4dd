//! Concurrency scaling: replicate the sweep template across 1..=32 tasks and
//! chart throughput and scheduling delay for the asynchronous scheduler
//! against the sequential baseline.
//!
//!     cargo run --example concurrency_sweep

use rlvrsim::*;

fn main() {
    let base = load_bundled("fig6_sweep").expect("bundled scenario");
    let nsat = base.cluster.rollout_pool_token_rate / base.profiles[0].per_batch_peak_decode_rate;
    println!(
        "pool {} tok/s, per-batch cap {} tok/s -> saturation at {} tasks\n",
        base.cluster.rollout_pool_token_rate, base.profiles[0].per_batch_peak_decode_rate, nsat
    );
    println!(
        "{:>5} {:>14} {:>14} {:>12} {:>12}",
        "tasks", "async steps/hr", "seq steps/hr", "async ttfs", "seq ttfs"
    );

    for n in [1usize, 2, 4, 8, 16, 32] {
        let sn = base.with_task_count(n).unwrap();
        let run = |kind: SchedulerKind| {
            let s = sn.with_scheduler(SchedulerChoice::new(kind)).unwrap();
            let o = simulate(&s).expect("simulation");
            compute_metrics(&o.trace, &s).expect("metrics")
        };
        let a = run(SchedulerKind::Marlaas);
        let d = run(SchedulerKind::SingleDisaggregated);
        let last_ttfs =
            |m: &MetricsReport| m.per_task.last().unwrap().ttfs_seconds.unwrap_or(f64::NAN);
        println!(
            "{n:>5} {:>14.1} {:>14.1} {:>12.2} {:>12.2}",
            a.steps_per_hour,
            d.steps_per_hour,
            last_ttfs(&a),
            last_ttfs(&d),
        );
    }
    println!("\nttfs = submission to first policy commit of the last-submitted task");
}
