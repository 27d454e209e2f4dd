//! Synchronization-wait decomposition on three heterogeneous tenants:
//! under the synchronous regime the faster tasks idle until the slowest
//! rollout of each round lands; the asynchronous regime removes the barrier
//! entirely.
//!
//!     cargo run --example barrier_waits

use rlvrsim::*;

fn main() {
    let base = load_bundled("table1_heterogeneous").expect("bundled scenario");

    for kind in [SchedulerKind::MultiLoraSync, SchedulerKind::Marlaas] {
        let scenario = base.with_scheduler(SchedulerChoice::new(kind)).unwrap();
        let outcome = simulate(&scenario).expect("simulation");
        let report = compute_metrics(&outcome.trace, &scenario).expect("metrics");
        println!(
            "{kind}: total {:.2} s, {:.2} steps/hr",
            report.horizon_seconds, report.steps_per_hour
        );
        println!(
            "  {:<10} {:>12} {:>16} {:>18}",
            "task", "rounds", "wait total (s)", "wait per round (s)"
        );
        for t in &report.per_task {
            println!(
                "  {:<10} {:>12} {:>16.2} {:>18.2}",
                t.task_id,
                t.barrier_rounds,
                t.barrier_wait_total_seconds,
                t.barrier_wait_mean_per_round_seconds
            );
        }
        println!();
    }
}
