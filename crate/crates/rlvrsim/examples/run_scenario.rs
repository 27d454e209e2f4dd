//! Run one bundled scenario end to end and print the headline metrics.
//!
//!     cargo run --example run_scenario [scenario-name]

use rlvrsim::metrics::summary_table;
use rlvrsim::*;

fn main() {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "table2_search10".into());
    let scenario = load_bundled(&name).expect("bundled scenario");

    let outcome = simulate(&scenario).expect("simulation");
    let report = compute_metrics(&outcome.trace, &scenario).expect("metrics");

    print!("{}", summary_table(&report));
    println!();
    println!(
        "{:<12} {:>8} {:>10} {:>10} {:>12}",
        "task", "steps", "ttfs(s)", "tpts(s)", "complete(s)"
    );
    for t in &report.per_task {
        println!(
            "{:<12} {:>8} {:>10.2} {:>10.2} {:>12.2}",
            t.task_id,
            t.steps,
            t.ttfs_seconds.unwrap_or(f64::NAN),
            t.tpts_mean_seconds.unwrap_or(f64::NAN),
            t.completion_seconds.unwrap_or(f64::NAN),
        );
    }
    println!("\ntrace: {} events", outcome.trace.records.len());
}
